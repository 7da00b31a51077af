#include "geofb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "geofb/error.hpp"

namespace geofb {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

MetricChange change(const CsvTable& t, std::size_t col, std::size_t best_row) {
  MetricChange c;
  c.initial = t.rows.front()[col];
  c.final = t.rows.back()[col];
  c.best = t.rows[best_row][col];
  if (std::isfinite(c.initial) && std::isfinite(c.final) && c.initial != 0.0) {
    c.reduction_pct = 100.0 * (c.initial - c.final) / c.initial;
  }
  return c;
}

struct Panel {
  const char* column;
  const char* title;
  const char* color;
};

constexpr Panel kPanels[] = {
    {"R", "reward R (clean)", "#1f77b4"},
    {"vp_error", "VP error (NormDist)", "#d62728"},
    {"lane_f1", "lane F1", "#2ca02c"},
    {"depth_rmse", "road depth RMSE (m)", "#9467bd"},
};

}  // namespace

TraceSummary summarize_trace(const CsvTable& t) {
  const std::size_t ci = t.column("iter"), cR = t.column("R"), cv = t.column("vp_error"),
                    cl = t.column("lane_f1"), cd = t.column("depth_rmse");
  if (t.rows.empty()) throw EmptyInputError("trace has no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i][cR] > t.rows[best][cR]) best = i;
  }
  TraceSummary s;
  s.iterations = static_cast<int>(t.rows.back()[ci]);
  s.best_iter = static_cast<int>(t.rows[best][ci]);
  s.R = change(t, cR, best);
  s.R.reduction_pct = 0.0;  // a reward has no meaningful relative reduction
  s.vp_error = change(t, cv, best);
  s.lane_f1 = change(t, cl, best);
  s.depth_rmse = change(t, cd, best);
  return s;
}

std::string summary_markdown(const TraceSummary& s) {
  std::string out = "# Optimization summary\n\n";
  out += "Iterations: " + std::to_string(s.iterations) + ", best clean reward at iteration " +
         std::to_string(s.best_iter) + ".\n\n";
  out += "| metric | initial | final | best-R row | reduction |\n";
  out += "|---|---|---|---|---|\n";
  auto row = [&](const char* name, const MetricChange& c, bool pct) {
    out += std::string("| ") + name + " | " + fmt("%.4f", c.initial) + " | " + fmt("%.4f", c.final) + " | " +
           fmt("%.4f", c.best) + " | " + (pct ? fmt("%.1f%%", c.reduction_pct) : std::string("-")) + " |\n";
  };
  row("VP error", s.vp_error, true);
  row("lane F1", s.lane_f1, true);
  row("depth RMSE (m)", s.depth_rmse, true);
  row("R", s.R, false);
  out += "\nReduction is (initial - final) / initial; for lane F1 a negative value is an improvement.\n";
  return out;
}

std::string curves_svg(const CsvTable& t) {
  const std::size_t ci = t.column("iter");
  if (t.rows.empty()) throw EmptyInputError("trace has no rows");
  constexpr int kPanelW = 420, kPanelH = 220, kPad = 40;
  constexpr int kCols = 2;
  const int width = kCols * kPanelW, height = 2 * kPanelH;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double x_lo = t.rows.front()[ci], x_hi = t.rows.back()[ci];
  for (std::size_t p = 0; p < std::size(kPanels); ++p) {
    const Panel& panel = kPanels[p];
    const std::size_t col = t.column(panel.column);
    const int ox = static_cast<int>(p % kCols) * kPanelW, oy = static_cast<int>(p / kCols) * kPanelH;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : t.rows) {
      if (!std::isfinite(r[col])) continue;
      lo = std::min(lo, r[col]);
      hi = std::max(hi, r[col]);
    }
    if (!(lo <= hi)) lo = hi = 0.0;
    const double plot_w = kPanelW - 2 * kPad, plot_h = kPanelH - 2 * kPad;
    auto sx = [&](double x) { return ox + kPad + (x_hi > x_lo ? (x - x_lo) / (x_hi - x_lo) : 0.5) * plot_w; };
    // A constant series is drawn through the middle of the panel.
    auto sy = [&](double y) { return oy + kPad + (hi > lo ? (hi - y) / (hi - lo) : 0.5) * plot_h; };

    out += "<g>\n";
    out += "<rect x=\"" + std::to_string(ox + kPad) + "\" y=\"" + std::to_string(oy + kPad) + "\" width=\"" +
           fmt("%.0f", plot_w) + "\" height=\"" + fmt("%.0f", plot_h) + "\" fill=\"none\" stroke=\"#999\"/>\n";
    out += "<text x=\"" + std::to_string(ox + kPad) + "\" y=\"" + std::to_string(oy + kPad - 8) + "\">" +
           panel.title + "</text>\n";
    out += "<text x=\"" + std::to_string(ox + 4) + "\" y=\"" + std::to_string(oy + kPad + 4) + "\">" +
           fmt("%.3g", hi) + "</text>\n";
    out += "<text x=\"" + std::to_string(ox + 4) + "\" y=\"" + fmt("%.0f", oy + kPad + plot_h) + "\">" +
           fmt("%.3g", lo) + "</text>\n";
    out += "<text x=\"" + fmt("%.0f", sx(x_hi) - 20) + "\" y=\"" + fmt("%.0f", oy + kPad + plot_h + 14) +
           "\">iter " + fmt("%.0f", x_hi) + "</text>\n";
    // Non-finite samples split the curve into separate polylines.
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(panel.color) + "\" stroke-width=\"1.5\" points=\"" +
               pts + "\"/>\n";
      }
      pts.clear();
    };
    for (const auto& r : t.rows) {
      if (!std::isfinite(r[col])) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt("%.2f", sx(r[ci])) + ',' + fmt("%.2f", sy(r[col]));
    }
    flush();
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace geofb
