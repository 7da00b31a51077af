#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "geofb/error.hpp"
#include "geofb/rewards.hpp"
#include "test_util.hpp"

using namespace geofb;

namespace {

FeatureDistribution gauss1(double mean, double var) { return {{mean}, {var}}; }

// Monte-Carlo KL(p || q) for diagonal Gaussians.
double mc_kl(const FeatureDistribution& p, const FeatureDistribution& q, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  double acc = 0.0;
  for (int s = 0; s < n; ++s) {
    for (std::size_t d = 0; d < p.dims(); ++d) {
      const double x = p.mean[d] + std::sqrt(p.var[d]) * z(rng);
      const double lp = -0.5 * std::log(2 * M_PI * p.var[d]) - (x - p.mean[d]) * (x - p.mean[d]) / (2 * p.var[d]);
      const double lq = -0.5 * std::log(2 * M_PI * q.var[d]) - (x - q.mean[d]) * (x - q.mean[d]) / (2 * q.var[d]);
      acc += lp - lq;
    }
  }
  return acc / n;
}

DepthMap constant_depth(int w, int h, float v) { return DepthMap(w, h, std::vector<float>(std::size_t(w) * h, v)); }

BinaryMask full_mask(int w, int h) { return BinaryMask(w, h, std::vector<std::uint8_t>(std::size_t(w) * h, 1)); }

}  // namespace

TEST(RewardVp, HandValues) {
  EXPECT_EQ(reward_vp({0.4, 0.4}, {0.4, 0.4}), 0.0);
  EXPECT_NEAR(reward_vp({0.5, 0.5}, {0.6, 0.5}), -0.01, 1e-12);
  EXPECT_NEAR(reward_vp({0.3, 0.4}, {0.0, 0.0}), -0.25, 1e-12);
}

TEST(RewardLane, HandCases) {
  BinaryMask a(4, 4), b(4, 4);
  for (int x = 0; x < 4; ++x) a.set(x, 1, true);
  EXPECT_EQ(reward_lane(a, a), 1.0);
  for (int x = 0; x < 4; ++x) b.set(x, 3, true);
  EXPECT_EQ(reward_lane(a, b), 0.0);
  BinaryMask half(4, 4);
  half.set(0, 1, true);
  half.set(1, 1, true);
  EXPECT_NEAR(reward_lane(half, a), 2.0 * 1.0 * 0.5 / 1.5, 1e-12);
  EXPECT_EQ(reward_lane(BinaryMask(3, 3), BinaryMask(3, 3)), 1.0);
}

TEST(RewardLane, ToleranceBand) {
  BinaryMask a(10, 10), b(10, 10);
  for (int y = 0; y < 10; ++y) {
    a.set(3, y, true);
    b.set(4, y, true);
  }
  EXPECT_EQ(lane_f1(a, b, 0), 0.0);
  EXPECT_EQ(lane_f1(a, b, 1), 1.0);
}

TEST(RewardLane, ExtentMismatch) {
  EXPECT_THROW(reward_lane(BinaryMask(3, 3), BinaryMask(3, 4)), DimensionError);
}

TEST(RewardDepth, HandCases) {
  const int w = 6, h = 4;
  const DepthMap ref = constant_depth(w, h, 10.0f);
  BinaryMask road(w, h), veh(w, h);
  for (int x = 0; x < w; ++x) {
    road.set(x, 3, true);
    veh.set(x, 0, true);
  }
  EXPECT_EQ(reward_depth(ref, ref, road, veh), 0.0);
  EXPECT_NEAR(reward_depth(constant_depth(w, h, 11.0f), ref, road, veh), -2.0, 1e-9);
  DepthMap pred = ref;
  for (int x = 0; x < w; ++x) {
    pred.at(x, 3) = 13.0f;
    pred.at(x, 0) = 14.0f;
  }
  EXPECT_NEAR(reward_depth(pred, ref, road, veh), -7.0, 1e-9);
}

TEST(RewardDepth, EmptyMaskRejected) {
  const DepthMap d = constant_depth(3, 3, 1.0f);
  EXPECT_THROW(reward_depth(d, d, BinaryMask(3, 3), full_mask(3, 3)), EmptyMaskError);
  // Mask nonempty but no defined depth underneath.
  EXPECT_THROW(masked_depth_rmse(constant_depth(3, 3, 0.0f), d, full_mask(3, 3)), EmptyMaskError);
}

TEST(FeatureFit, Cases) {
  const auto same = fit_feature_distribution({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
  EXPECT_EQ(same.var, (std::vector<double>{kVarFloor, kVarFloor}));
  const auto two = fit_feature_distribution({{0.0}, {2.0}});
  EXPECT_DOUBLE_EQ(two.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(two.var[0], 2.0);
  EXPECT_THROW(fit_feature_distribution({{1.0}}), BatchError);
  EXPECT_THROW(fit_feature_distribution({{1.0}, {1.0, 2.0}}), DimensionError);
}

TEST(FeatureFit, PermutationInvariant) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> batch(20, std::vector<double>(3));
  for (auto& v : batch)
    for (auto& x : v) x = n(rng);
  const auto a = fit_feature_distribution(batch);
  std::reverse(batch.begin(), batch.end());
  const auto b = fit_feature_distribution(batch);
  for (int d = 0; d < 3; ++d) {
    EXPECT_NEAR(a.mean[d], b.mean[d], 1e-15);
    EXPECT_NEAR(a.var[d], b.var[d], 1e-14);
  }
}

TEST(FeatureFit, ColumnsAgreeWithRows) {
  const std::vector<float> c0{1, 2, 3, 4}, c1{0, 0, 1, 1};
  const auto a = fit_feature_columns({c0, c1});
  const auto b = fit_feature_distribution({{1, 0}, {2, 0}, {3, 1}, {4, 1}});
  for (int d = 0; d < 2; ++d) {
    EXPECT_NEAR(a.mean[d], b.mean[d], 1e-15);
    EXPECT_NEAR(a.var[d], b.var[d], 1e-15);
  }
}

TEST(RewardAlign, ClosedForms) {
  EXPECT_EQ(reward_align(gauss1(0, 1), gauss1(0, 1)), 0.0);
  EXPECT_NEAR(reward_align(gauss1(0, 1), gauss1(1, 1)), -0.5, 1e-12);
  EXPECT_NEAR(reward_align(gauss1(0, 1), gauss1(0, 4)), -(std::log(2.0) + 0.125 - 0.5), 1e-12);
  EXPECT_NEAR(reward_align(gauss1(0, 1), gauss1(0, 4)), -0.3181, 1e-4);
}

TEST(RewardAlign, MonteCarloAgreement) {
  const FeatureDistribution p{{0.3, -1.0}, {0.5, 2.0}}, q{{1.0, 0.0}, {1.5, 1.0}};
  const double exact = kl_divergence(p, q);
  EXPECT_NEAR(mc_kl(p, q, 1000000, 21), exact, 0.02 * exact);
}

TEST(RewardAlign, DimensionMismatch) {
  EXPECT_THROW(kl_divergence(FeatureDistribution{{0, 0}, {1, 1}}, gauss1(0, 1)), DimensionError);
}

TEST(RewardIou, Cases) {
  GridGeometry g{2, 2, 2, {0, 0, 0}, 1.0};
  OccupancyGrid a(g), b(g);
  a.set(0, 0, 0, true);
  EXPECT_EQ(reward_iou(a, a), 1.0);
  b.set(1, 1, 1, true);
  EXPECT_EQ(reward_iou(a, b), 0.0);
  EXPECT_EQ(reward_iou(OccupancyGrid(g), OccupancyGrid(g)), 1.0);
  b.set(0, 0, 0, true);
  EXPECT_DOUBLE_EQ(reward_iou(a, b), 0.5);
  EXPECT_THROW(reward_iou(a, OccupancyGrid(GridGeometry{2, 2, 1, {0, 0, 0}, 1.0})), DimensionError);
}

TEST(Compose, PaperWeights) {
  RewardTerms t;
  t.r_lane = 1.0;
  t.r_iou = 1.0;
  const RewardBreakdown b = compose_reward(t, RewardWeights{});
  EXPECT_NEAR(b.R_geo, 0.1, 1e-12);
  EXPECT_NEAR(b.R_occ, 1.0, 1e-12);
  EXPECT_NEAR(b.R, 1.1, 1e-12);
}

TEST(Compose, HandArithmetic) {
  const RewardBreakdown b = compose_reward({-0.01, 0.8, -2.0, -0.5, 0.6}, RewardWeights{});
  EXPECT_NEAR(b.R_geo, -0.921, 1e-12);
  EXPECT_NEAR(b.R_occ, 0.1, 1e-12);
  EXPECT_NEAR(b.R, -0.821, 1e-12);
}

TEST(Compose, ZeroWeights) {
  const RewardBreakdown b = compose_reward({-0.3, 0.2, -5.0, -0.1, 0.7}, RewardWeights{0, 0, 0});
  EXPECT_EQ(b.R, b.R_occ);
}

TEST(Compose, NegativeWeightRejected) {
  EXPECT_THROW((RewardWeights{-0.1, 0.1, 0.5}.validate()), InvalidArgumentError);
}

TEST(HeatmapLoss, Cases) {
  const VPHeatmap a = make_gaussian_heatmap({0.5, 0.5}, 8, 8);
  EXPECT_EQ(loss_vp_heatmap(a, a), 0.0);
  VPHeatmap zero{2, 2, 2.0, {0, 0, 0, 0}}, one{2, 2, 2.0, {1, 1, 1, 1}};
  EXPECT_DOUBLE_EQ(loss_vp_heatmap(zero, one), 1.0);
  const VPHeatmap b = make_gaussian_heatmap({0.2, 0.7}, 8, 8);
  EXPECT_EQ(loss_vp_heatmap(a, b), loss_vp_heatmap(b, a));
  EXPECT_THROW(loss_vp_heatmap(a, zero), DimensionError);
}

TEST(Silog, Cases) {
  const int w = 5, h = 3;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(1.0f, 50.0f);
  std::vector<float> g(w * h);
  for (auto& v : g) v = u(rng);
  const DepthMap gt(w, h, g);
  const BinaryMask m = full_mask(w, h);
  EXPECT_EQ(loss_silog(gt, gt, 0.5, m), 0.0);

  std::vector<float> e(g);
  for (auto& v : e) v = static_cast<float>(std::exp(1.0) * v);
  // d_i == 1 up to f32 rounding of the stored prediction.
  EXPECT_NEAR(loss_silog(DepthMap(w, h, e), gt, 0.5, m), 0.5, 1e-6);

  // Integer predictions so that c * y is exact in f32 for every c below.
  std::vector<float> p(g.size());
  std::uniform_int_distribution<int> pi(1, 60);
  for (auto& v : p) v = static_cast<float>(pi(rng));
  const DepthMap pred(w, h, p);
  const double base = loss_silog(pred, gt, 1.0, m);
  EXPECT_GT(base, 0.01);
  for (float c : {0.5f, 2.0f, 3.75f, 0.3125f, 1000.0f}) {
    std::vector<float> s(p);
    for (auto& v : s) v *= c;
    EXPECT_NEAR(loss_silog(DepthMap(w, h, s), gt, 1.0, m), base, 1e-9) << "c=" << c;
  }
}

TEST(Silog, Errors) {
  const DepthMap d = constant_depth(2, 2, 1.0f);
  EXPECT_THROW(loss_silog(d, d, 1.5, full_mask(2, 2)), InvalidArgumentError);
  EXPECT_THROW(loss_silog(d, d, 0.5, BinaryMask(2, 2)), EmptyMaskError);
  EXPECT_THROW(loss_silog(constant_depth(2, 2, 0.0f), d, 0.5, full_mask(2, 2)), DomainError);
}
