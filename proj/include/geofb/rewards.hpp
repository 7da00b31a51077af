#pragma once

// Hierarchical geometric reward terms, their composition, and the two
// perception losses (heatmap MSE, SiLog).
//
// All terms are evaluated in double precision.

#include <cstdint>
#include <span>
#include <vector>

#include "geofb/geometry.hpp"
#include "geofb/perception.hpp"
#include "geofb/tensor.hpp"

namespace geofb {

struct RewardWeights {
  double lambda_vp = 0.1;
  double lambda_lane = 0.1;
  double lambda_depth = 0.5;

  void validate() const;
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct FeatureDistribution {
  std::vector<double> mean;
  std::vector<double> var;

  std::size_t dims() const noexcept { return mean.size(); }
  friend bool operator==(const FeatureDistribution&, const FeatureDistribution&) = default;
};

inline constexpr double kVarFloor = 1e-6;

/// Perception outputs on a generated frame.
struct GeoPerceptionOutput {
  Vec2 p_vp;
  BinaryMask p_lane;
  DepthMap p_depth;
};

/// Reference conditions the generated frame is scored against.
struct ReferenceBundle {
  Vec2 v_ref;
  BinaryMask lane_ref;
  DepthMap depth_ref;
  BinaryMask road_mask;
  BinaryMask vehicle_mask;
  FeatureDistribution feat_real;
  OccupancyGrid occ_real;

  void validate() const;
};

struct RewardTerms {
  double r_vp = 0.0;
  double r_lane = 0.0;
  double r_depth = 0.0;
  double r_align = 0.0;
  double r_iou = 0.0;
};

/// Bits set in RewardBreakdown::floored when a term was replaced by its
/// worst-case value because perception degenerated.
enum RewardFloor : std::uint32_t {
  kFloorNone = 0,
  kFloorVp = 1u << 0,
  kFloorLane = 1u << 1,
  kFloorDepth = 1u << 2,
};

struct RewardBreakdown {
  double r_vp = 0.0;
  double r_lane = 0.0;
  double r_depth = 0.0;
  double r_align = 0.0;
  double r_iou = 0.0;
  double R_geo = 0.0;
  double R_occ = 0.0;
  double R = 0.0;
  std::uint32_t floored = kFloorNone;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double reward_vp(Vec2 p_vp, Vec2 v_ref);

/// Pixel-wise F1. With tolerance_px > 0 a predicted pixel counts as correct
/// if a reference pixel lies within that Chebyshev distance (and vice versa
/// for recall). Two empty masks score 1.
double lane_f1(const BinaryMask& pred, const BinaryMask& ref, int tolerance_px = 0);
double reward_lane(const BinaryMask& pred, const BinaryMask& ref, int tolerance_px = 0);

/// Root mean square difference over pixels in `mask` with depth > 0 on both
/// maps. EmptyMaskError if no such pixel exists.
double masked_depth_rmse(const DepthMap& pred, const DepthMap& ref, const BinaryMask& mask);
double reward_depth(const DepthMap& pred, const DepthMap& ref, const BinaryMask& road_mask,
                    const BinaryMask& vehicle_mask);

FeatureDistribution fit_feature_distribution(const std::vector<std::vector<double>>& batch,
                                             double var_floor = kVarFloor);
/// Same fit with the batch given column-wise: columns[d][i] is dimension d of
/// sample i.
FeatureDistribution fit_feature_columns(const std::vector<std::span<const float>>& columns,
                                        double var_floor = kVarFloor);

/// KL(p || q) between diagonal Gaussians.
double kl_divergence(const FeatureDistribution& p, const FeatureDistribution& q);
double reward_align(const FeatureDistribution& real, const FeatureDistribution& gen);

double reward_iou(const OccupancyGrid& gen, const OccupancyGrid& real);

RewardBreakdown compose_reward(const RewardTerms& terms, const RewardWeights& weights);

double loss_vp_heatmap(const VPHeatmap& h, const VPHeatmap& h_gt);
double loss_silog(const DepthMap& pred, const DepthMap& gt, double lambda, const BinaryMask& mask);

}  // namespace geofb
