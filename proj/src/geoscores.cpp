#include "geofb/geoscores.hpp"

#include <algorithm>
#include <cstdio>

#include "geofb/error.hpp"
#include "geofb/rewards.hpp"

namespace geofb {

double score_vp(Vec2 vp_synth, Vec2 vp_real) { return norm_dist(vp_synth, vp_real); }

double score_lane(const BinaryMask& synth, const BinaryMask& real) { return lane_f1(synth, real); }

double score_depth(const DepthMap& synth, const DepthMap& real, const BinaryMask& road_mask) {
  return masked_depth_rmse(synth, real, road_mask);
}

GeoScoreReport aggregate_report(std::vector<FrameScore> frames) {
  if (frames.empty()) throw EmptyInputError("no frames to aggregate");
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FrameScore& a, const FrameScore& b) { return a.frame < b.frame; });
  GeoScoreReport r;
  for (const auto& f : frames) {
    if (!f.ok()) continue;
    r.vp_error += f.vp_error;
    r.lane_f1 += f.lane_f1;
    r.depth_rmse += f.depth_rmse;
    ++r.frame_count;
  }
  if (r.frame_count == 0) throw EmptyInputError("every frame failed to score");
  r.vp_error /= r.frame_count;
  r.lane_f1 /= r.frame_count;
  r.depth_rmse /= r.frame_count;
  r.frames = std::move(frames);
  return r;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string report_csv(const GeoScoreReport& report) {
  const bool any_error = std::any_of(report.frames.begin(), report.frames.end(),
                                     [](const FrameScore& f) { return !f.ok(); });
  std::string out = "frame,vp_error,lane_f1,depth_rmse";
  out += any_error ? ",error\n" : "\n";
  for (const auto& f : report.frames) {
    out += std::to_string(f.frame);
    if (f.ok()) {
      out += "," + fmt_double(f.vp_error) + "," + fmt_double(f.lane_f1) + "," + fmt_double(f.depth_rmse);
      if (any_error) out += ",";
    } else {
      std::string msg = f.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      out += ",,,,\"" + msg + "\"";
    }
    out += "\n";
  }
  out += "mean," + fmt_double(report.vp_error) + "," + fmt_double(report.lane_f1) + "," +
         fmt_double(report.depth_rmse);
  if (any_error) out += ",";
  out += "\n";
  return out;
}

}  // namespace geofb
