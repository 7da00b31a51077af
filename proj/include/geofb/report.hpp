#pragma once

// Human-readable summary of an optimization trace: a markdown table of
// initial vs final GeoScores and an SVG chart of the curves.

#include <string>

#include "geofb/io.hpp"

namespace geofb {

struct MetricChange {
  double initial = 0.0;
  double final = 0.0;
  double best = 0.0;  // value at the row with the highest R
  // 100 * (initial - final) / initial; 0 when initial is 0 or not finite.
  double reduction_pct = 0.0;
};

struct TraceSummary {
  int iterations = 0;  // rows - 1
  int best_iter = 0;
  MetricChange R;
  MetricChange vp_error;
  MetricChange lane_f1;  // reduction_pct is negative when F1 improved
  MetricChange depth_rmse;
};

/// ParseError if the trace lacks a required column, EmptyInputError if it has
/// no rows.
TraceSummary summarize_trace(const CsvTable& trace);

std::string summary_markdown(const TraceSummary& s);
std::string curves_svg(const CsvTable& trace);

}  // namespace geofb
