#include "geofb/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geofb/error.hpp"
#include "geofb/kernels.hpp"

namespace geofb {

namespace {

void require_same_extent(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_extent(b)) {
    throw DimensionError(std::string(what) + ": mask extents differ (" + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()) + ")");
  }
}

void require_same_extent(const DepthMap& d, const BinaryMask& m, const char* what) {
  if (d.width() != m.width() || d.height() != m.height()) {
    throw DimensionError(std::string(what) + ": depth and mask extents differ");
  }
}

// Chebyshev dilation by `r` pixels (separable max filter).
std::vector<std::uint8_t> dilate(const BinaryMask& m, int r) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> tmp(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::uint8_t> out(tmp.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.at(x, y)) continue;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) {
        tmp[static_cast<std::size_t>(y) * w + dx] = 1;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!tmp[static_cast<std::size_t>(y) * w + x]) continue;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) {
        out[static_cast<std::size_t>(dy) * w + x] = 1;
      }
    }
  }
  return out;
}

}  // namespace

void RewardWeights::validate() const {
  for (double v : {lambda_vp, lambda_lane, lambda_depth}) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgumentError("reward weights must be finite and >= 0");
  }
}

void ReferenceBundle::validate() const {
  if (!lane_ref.same_extent(road_mask) || !lane_ref.same_extent(vehicle_mask)) {
    throw DimensionError("reference masks have inconsistent extents");
  }
  require_same_extent(depth_ref, lane_ref, "reference");
  if (feat_real.mean.size() != feat_real.var.size()) {
    throw DimensionError("reference feature distribution is malformed");
  }
}

double reward_vp(Vec2 p_vp, Vec2 v_ref) {
  const Vec2 d = p_vp - v_ref;
  return -(d.x * d.x + d.y * d.y);
}

double lane_f1(const BinaryMask& pred, const BinaryMask& ref, int tolerance_px) {
  require_same_extent(pred, ref, "lane_f1");
  if (tolerance_px < 0) throw InvalidArgumentError("tolerance must be >= 0");
  if (tolerance_px == 0) {
    const auto c = kernels::confusion(pred.bits(), ref.bits());
    const double denom = 2.0 * c.tp + c.fp + c.fn;
    return denom == 0.0 ? 1.0 : 2.0 * c.tp / denom;
  }
  const auto ref_d = dilate(ref, tolerance_px);
  const auto pred_d = dilate(pred, tolerance_px);
  // Precision side: predicted pixels near a reference pixel.
  const auto cp = kernels::confusion(pred.bits(), ref_d);
  // Recall side: reference pixels near a predicted pixel.
  const auto cr = kernels::confusion(ref.bits(), pred_d);
  const double n_pred = static_cast<double>(cp.tp + cp.fp);
  const double n_ref = static_cast<double>(cr.tp + cr.fp);
  if (n_pred == 0.0 && n_ref == 0.0) return 1.0;
  if (n_pred == 0.0 || n_ref == 0.0) return 0.0;
  const double p = cp.tp / n_pred;
  const double r = cr.tp / n_ref;
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double reward_lane(const BinaryMask& pred, const BinaryMask& ref, int tolerance_px) {
  return lane_f1(pred, ref, tolerance_px);
}

double masked_depth_rmse(const DepthMap& pred, const DepthMap& ref, const BinaryMask& mask) {
  if (pred.width() != ref.width() || pred.height() != ref.height()) {
    throw DimensionError("depth map extents differ");
  }
  require_same_extent(pred, mask, "depth rmse");
  const auto sq = kernels::masked_sq_diff(pred.values(), ref.values(), mask.bits());
  if (sq.count == 0) throw EmptyMaskError("no masked pixel has depth on both maps");
  return std::sqrt(sq.sum_sq / static_cast<double>(sq.count));
}

double reward_depth(const DepthMap& pred, const DepthMap& ref, const BinaryMask& road_mask,
                    const BinaryMask& vehicle_mask) {
  return -(masked_depth_rmse(pred, ref, road_mask) + masked_depth_rmse(pred, ref, vehicle_mask));
}

FeatureDistribution fit_feature_distribution(const std::vector<std::vector<double>>& batch,
                                             double var_floor) {
  if (batch.size() < 2) throw BatchError("feature batch needs at least 2 samples");
  const std::size_t d = batch.front().size();
  for (const auto& v : batch) {
    if (v.size() != d) throw DimensionError("feature vectors have different lengths");
  }
  const double n = static_cast<double>(batch.size());
  FeatureDistribution out{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& v : batch)
    for (std::size_t i = 0; i < d; ++i) out.mean[i] += v[i];
  for (auto& m : out.mean) m /= n;
  for (const auto& v : batch) {
    for (std::size_t i = 0; i < d; ++i) {
      const double e = v[i] - out.mean[i];
      out.var[i] += e * e;
    }
  }
  for (auto& s : out.var) s = std::max(s / (n - 1.0), var_floor);
  return out;
}

FeatureDistribution fit_feature_columns(const std::vector<std::span<const float>>& columns,
                                        double var_floor) {
  if (columns.empty()) throw DimensionError("feature batch has no dimensions");
  const std::size_t n = columns.front().size();
  if (n < 2) throw BatchError("feature batch needs at least 2 samples");
  FeatureDistribution out;
  for (const auto& col : columns) {
    if (col.size() != n) throw DimensionError("feature columns have different lengths");
    double mean = 0.0;
    for (float v : col) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (float v : col) {
      const double e = v - mean;
      ss += e * e;
    }
    out.mean.push_back(mean);
    out.var.push_back(std::max(ss / static_cast<double>(n - 1), var_floor));
  }
  return out;
}

double kl_divergence(const FeatureDistribution& p, const FeatureDistribution& q) {
  if (p.dims() != q.dims() || p.var.size() != p.dims() || q.var.size() != q.dims()) {
    throw DimensionError("feature distributions have different dimensions");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.dims(); ++i) {
    const double dm = p.mean[i] - q.mean[i];
    kl += 0.5 * std::log(q.var[i] / p.var[i]) + (p.var[i] + dm * dm) / (2.0 * q.var[i]) - 0.5;
  }
  return std::max(kl, 0.0);
}

double reward_align(const FeatureDistribution& real, const FeatureDistribution& gen) {
  return -kl_divergence(real, gen);
}

double reward_iou(const OccupancyGrid& gen, const OccupancyGrid& real) {
  if (!(gen.geometry() == real.geometry())) throw DimensionError("occupancy grid geometries differ");
  const auto c = kernels::confusion(gen.occ(), real.occ());
  const std::uint64_t uni = c.tp + c.fp + c.fn;
  return uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni);
}

RewardBreakdown compose_reward(const RewardTerms& t, const RewardWeights& w) {
  RewardBreakdown b;
  b.r_vp = t.r_vp;
  b.r_lane = t.r_lane;
  b.r_depth = t.r_depth;
  b.r_align = t.r_align;
  b.r_iou = t.r_iou;
  b.R_geo = w.lambda_vp * t.r_vp + w.lambda_lane * t.r_lane + w.lambda_depth * t.r_depth;
  b.R_occ = t.r_align + t.r_iou;
  b.R = b.R_geo + b.R_occ;
  return b;
}

double loss_vp_heatmap(const VPHeatmap& h, const VPHeatmap& h_gt) {
  if (h.h != h_gt.h || h.w != h_gt.w || h.values.size() != h_gt.values.size() || h.values.empty()) {
    throw DimensionError("heatmap extents differ");
  }
  return kernels::sq_diff_sum(h.values, h_gt.values) / static_cast<double>(h.values.size());
}

double loss_silog(const DepthMap& pred, const DepthMap& gt, double lambda, const BinaryMask& mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw DimensionError("depth map extents differ");
  }
  require_same_extent(pred, mask, "silog");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgumentError("silog lambda must be in [0,1]");
  const auto p = pred.values();
  const auto g = gt.values();
  const auto m = mask.bits();
  std::vector<double> d;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    if (!(p[i] > 0.0f) || !(g[i] > 0.0f)) throw DomainError("silog needs positive depth under the mask");
    d.push_back(std::log(static_cast<double>(p[i])) - std::log(static_cast<double>(g[i])));
  }
  if (d.empty()) throw EmptyMaskError("silog mask is empty");
  const double n = static_cast<double>(d.size());
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  // (1/n)sum d^2 - (lambda/n^2)(sum d)^2, written as var + (1 - lambda) mean^2
  // so that a uniform shift of d cancels exactly at lambda = 1.
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= n;
  return std::max(0.0, var + (1.0 - lambda) * mean * mean);
}

}  // namespace geofb
