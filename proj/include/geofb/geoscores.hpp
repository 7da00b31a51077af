#pragma once

// GeoScores: VP error (NormDist), lane F1, and road-surface depth RMSE between
// a synthesized frame and its real counterpart, plus dataset aggregation.

#include <string>
#include <vector>

#include "geofb/geometry.hpp"
#include "geofb/tensor.hpp"

namespace geofb {

struct FrameScore {
  int frame = 0;
  double vp_error = 0.0;
  double lane_f1 = 0.0;
  double depth_rmse = 0.0;
  std::string error;  // nonempty when the frame could not be scored

  bool ok() const noexcept { return error.empty(); }
  friend bool operator==(const FrameScore&, const FrameScore&) = default;
};

struct GeoScoreReport {
  std::vector<FrameScore> frames;  // sorted by frame index, failed frames included
  double vp_error = 0.0;           // means over successfully scored frames
  double lane_f1 = 0.0;
  double depth_rmse = 0.0;
  int frame_count = 0;             // frames that contributed to the means
};

double score_vp(Vec2 vp_synth, Vec2 vp_real);
double score_lane(const BinaryMask& synth, const BinaryMask& real);
double score_depth(const DepthMap& synth, const DepthMap& real, const BinaryMask& road_mask);

/// EmptyInputError if no frame was scored successfully.
GeoScoreReport aggregate_report(std::vector<FrameScore> frames);

/// CSV with header frame,vp_error,lane_f1,depth_rmse (plus an error column
/// when any frame failed) and a trailing "mean" row.
std::string report_csv(const GeoScoreReport& report);

}  // namespace geofb
