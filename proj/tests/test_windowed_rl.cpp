#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "geofb/error.hpp"
#include "geofb/windowed_rl.hpp"

using namespace geofb;

namespace {

RenderedFrame small_frame(int w, int h) {
  RenderedFrame f;
  f.lane_mask = BinaryMask(w, h);
  f.road_mask = BinaryMask(w, h);
  f.vehicle_mask = BinaryMask(w, h);
  f.depth = DepthMap(w, h);
  return f;
}

LatentFrame constant_latent(int w, int h, float v) {
  LatentFrame z;
  z.channels = Tensor::from_f32({kNumChannels, std::uint32_t(h), std::uint32_t(w)},
                                std::vector<float>(std::size_t(kNumChannels) * w * h, v));
  return z;
}

const RewardSetup& default_setup() {
  static const RewardSetup s = [] {
    RewardSetup r;
    r.scene = synth_scene(3, SceneConfig{});
    return r;
  }();
  return s;
}

const ReferenceBundle& default_reference() {
  static const ReferenceBundle r = build_reference(default_setup());
  return r;
}

}  // namespace

TEST(Latent, FactorOneCopiesRasters) {
  const RenderedFrame f = render_frame(synth_scene(2, SceneConfig{}), CameraModel{}, DistortionParams{});
  const LatentFrame z = project_to_latent(f, 1);
  const auto lane = z.channel(kChanLane);
  const auto depth = z.channel(kChanDepth);
  for (std::size_t i = 0; i < lane.size(); ++i) {
    ASSERT_EQ(lane[i], f.lane_mask.bits()[i] ? 1.0f : 0.0f);
    ASSERT_EQ(depth[i], f.depth.values()[i]);
  }
  const DecodedFrame d = decode_latent(z);
  EXPECT_EQ(d.lane_mask, f.lane_mask);
  EXPECT_EQ(d.vehicle_mask, f.vehicle_mask);
}

TEST(Latent, BlockMeans) {
  RenderedFrame f = small_frame(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      f.lane_mask.set(x, y, (x + y) % 2 == 0);
      f.vehicle_mask.set(x, y, true);
    }
  const LatentFrame z2 = project_to_latent(f, 2);
  for (float v : z2.channel(kChanLane)) EXPECT_EQ(v, 0.5f);
  const LatentFrame z4 = project_to_latent(f, 4);
  for (float v : z4.channel(kChanVehicle)) EXPECT_EQ(v, 1.0f);
}

TEST(Latent, DepthMeanOverDefinedPixels) {
  RenderedFrame f = small_frame(2, 2);
  f.depth = DepthMap(2, 2, {4.0f, 0.0f, 0.0f, 8.0f});
  EXPECT_EQ(project_to_latent(f, 2).channel(kChanDepth)[0], 6.0f);
  f.depth = DepthMap(2, 2);
  EXPECT_EQ(project_to_latent(f, 2).channel(kChanDepth)[0], 0.0f);
}

TEST(Latent, IndivisibleFactorRejected) {
  EXPECT_THROW(project_to_latent(small_frame(6, 4), 4), DimensionError);
}

TEST(Decode, ThresholdSemantics) {
  LatentFrame z = constant_latent(2, 1, 0.0f);
  auto* p = z.channels.f32_mut().data();
  p[0] = 0.49f;
  p[1] = 0.51f;
  const DecodedFrame d = decode_latent(z);
  EXPECT_EQ(d.lane_mask.at(0, 0), 0);
  EXPECT_EQ(d.lane_mask.at(1, 0), 1);
}

TEST(Decode, UpsamplesByScaleFactor) {
  LatentFrame z = constant_latent(2, 1, 0.0f);
  z.scale_factor = 3;
  z.channels.f32_mut()[1] = 1.0f;
  const DecodedFrame d = decode_latent(z);
  ASSERT_EQ(d.lane_mask.width(), 6);
  ASSERT_EQ(d.lane_mask.height(), 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 6; ++x) EXPECT_EQ(d.lane_mask.at(x, y), x >= 3 ? 1 : 0);
}

TEST(Decode, PureNoiseTailFraction) {
  const int w = 400, h = 250;  // 10^5 pixels
  LatentFrame z = constant_latent(w, h, 0.0f);
  fill_standard_normal(77, z.channels.f32_mut());
  const DecodedFrame d = decode_latent(z);
  std::size_t on = 0;
  for (auto b : d.lane_mask.bits()) on += b;
  const double frac = static_cast<double>(on) / (w * h);
  // P(X > 0.5) for a standard normal.
  const double tail = 0.5 * std::erfc(0.5 / std::sqrt(2.0));
  EXPECT_NEAR(tail, 0.3085, 1e-4);
  EXPECT_NEAR(frac, tail, 0.02);
}

TEST(Noise, StandardNormalMoments) {
  std::vector<float> v(200000);
  fill_standard_normal(5, v);
  double s = 0, s2 = 0;
  for (float x : v) {
    s += x;
    s2 += double(x) * x;
  }
  const double mean = s / v.size();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(s2 / v.size() - mean * mean, 1.0, 0.02);
  std::vector<float> again(v.size());
  fill_standard_normal(5, again);
  EXPECT_EQ(v, again);
}

TEST(Flow, Endpoints) {
  const RenderedFrame f = render_frame(synth_scene(1, SceneConfig{}), CameraModel{}, DistortionParams{});
  const LatentTrajectory t = LatentTrajectory::make(project_to_latent(f, 2), 9);
  EXPECT_EQ(flow_interpolate(t, 0), t.z0);
  const LatentFrame end = flow_interpolate(t, t.T);
  EXPECT_EQ(end.channels, t.eps);
  EXPECT_THROW(flow_interpolate(t, -1), RangeError);
  EXPECT_THROW(flow_interpolate(t, t.T + 1), RangeError);
}

TEST(Flow, Midpoint) {
  LatentTrajectory t{constant_latent(3, 2, 0.0f), Tensor::from_f32({kNumChannels, 2, 3}, std::vector<float>(18, 2.0f)), 30};
  const LatentFrame mid = flow_interpolate(t, 15);
  for (float v : mid.channels.f32()) EXPECT_EQ(v, 1.0f);
}

TEST(Window, PaperValues) {
  WindowConfig c;
  c.t_min = 8;
  c.t_max = 8;
  std::mt19937_64 rng(0);
  const Window w = sample_window(c, rng);
  EXPECT_EQ(w.t_prime, 8);
  EXPECT_EQ(w.k, 3);
}

TEST(Window, UniformChiSquare) {
  const WindowConfig c;
  std::mt19937_64 rng(2024);
  std::map<int, int> hist;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Window w = sample_window(c, rng);
    ASSERT_GE(w.t_prime, 8);
    ASSERT_LE(w.t_prime, 30);
    ASSERT_EQ(w.k, w.t_prime - 5);
    ASSERT_GE(w.k, 3);
    ++hist[w.t_prime];
  }
  ASSERT_EQ(hist.size(), 23u);
  const double expect = n / 23.0;
  double chi2 = 0;
  for (auto [t, c2] : hist) chi2 += (c2 - expect) * (c2 - expect) / expect;
  // 22 degrees of freedom, upper 1% point.
  EXPECT_LT(chi2, 40.289);
}

TEST(Window, Deterministic) {
  std::mt19937_64 a(55), b(55);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_window(WindowConfig{}, a), sample_window(WindowConfig{}, b));
}

TEST(Window, InvalidConfig) {
  WindowConfig c;
  c.t_min = 4;
  EXPECT_THROW(c.validate(30), InvalidArgumentError);
  c = WindowConfig{};
  c.t_max = 31;
  EXPECT_THROW(c.validate(30), InvalidArgumentError);
  c = WindowConfig{};
  c.w = 0;
  EXPECT_THROW(c.validate(30), InvalidArgumentError);
}

TEST(EvaluateReward, CleanUndistortedIsOptimal) {
  const RewardBreakdown b = evaluate_reward_at(DistortionParams{}, 0, 1, default_setup(), default_reference());
  EXPECT_EQ(b.floored, kFloorNone);
  EXPECT_NEAR(b.r_vp, 0.0, 1e-12);
  EXPECT_NEAR(b.r_depth, 0.0, 1e-9);
  EXPECT_NEAR(b.r_lane, 1.0, 1e-12);
  EXPECT_NEAR(b.R_geo, 0.1, 1e-9);
  EXPECT_NEAR(b.r_iou, 1.0, 1e-12);
  EXPECT_NEAR(b.r_align, 0.0, 1e-9);
}

TEST(EvaluateReward, VpShiftLowersReward) {
  DistortionParams d;
  d.vp_dx = 0.1;
  const double r0 = evaluate_reward_at(DistortionParams{}, 0, 1, default_setup(), default_reference()).R;
  const double r1 = evaluate_reward_at(d, 0, 1, default_setup(), default_reference()).R;
  EXPECT_GT(r0, r1);
}

TEST(EvaluateReward, Deterministic) {
  DistortionParams d;
  d.depth_scale = 1.1;
  d.jitter_dx = 0.3;
  const auto a = evaluate_reward_at(d, 12, 99, default_setup(), default_reference());
  const auto b = evaluate_reward_at(d, 12, 99, default_setup(), default_reference());
  EXPECT_EQ(a, b);
}

TEST(EvaluateReward, NoiseEndpointDoesNotThrow) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto b = evaluate_reward_at(DistortionParams{}, 30, s, default_setup(), default_reference());
    EXPECT_TRUE(std::isfinite(b.R));
  }
}

TEST(Gradient, QuadraticVpAxisMatchesAnalytic) {
  RewardSetup s = default_setup();
  s.vp_head = VpHead::kGeometric;
  s.terms = kTermVp;
  const ReferenceBundle ref = build_reference(s);
  DistortionParams theta;
  theta.vp_dx = 0.1;
  // R = -lambda_vp * |vp - v_ref|^2 with vp - v_ref == (dx, dy).
  const double analytic = -2.0 * s.weights.lambda_vp * theta.vp_dx;
  for (double h : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    GradientConfig g;
    g.fd_step = h;
    const auto grad = estimate_gradient(theta, 0, 1, s, ref, g);
    EXPECT_NEAR(grad[0], analytic, 1e-3 * std::abs(analytic)) << "h=" << h;
    EXPECT_NEAR(grad[1], 0.0, 1e-9) << "h=" << h;
  }
}

TEST(Gradient, RichardsonOnSmoothAxis) {
  // r_vp is quadratic in the shift, so central differences carry no
  // truncation error and doubling h changes the estimate only by rounding.
  RewardSetup s = default_setup();
  s.vp_head = VpHead::kGeometric;
  s.terms = kTermVp;
  const ReferenceBundle ref = build_reference(s);
  DistortionParams theta;
  theta.vp_dx = 0.07;
  theta.vp_dy = -0.03;
  GradientConfig g1, g2;
  g1.fd_step = 1e-3;
  g2.fd_step = 2e-3;
  const auto a = estimate_gradient(theta, 0, 1, s, ref, g1);
  const auto b = estimate_gradient(theta, 0, 1, s, ref, g2);
  for (int i : {0, 1}) EXPECT_NEAR(a[i], b[i], 1e-9) << i;
}

TEST(Gradient, DepthAxisSlopeIsLambdaWeighted) {
  // A bias of b meters adds |b| to both depth RMSEs wherever depth is
  // defined, so dR/db == -2 * lambda_depth away from b = 0.
  RewardSetup s = default_setup();
  s.terms = kTermDepth;
  const ReferenceBundle ref = build_reference(s);
  DistortionParams theta;
  theta.depth_bias = 0.4;
  GradientConfig g;
  g.fd_step = 1e-2;
  EXPECT_NEAR(estimate_gradient(theta, 0, 1, s, ref, g)[3], -2.0 * s.weights.lambda_depth, 1e-3);
}

TEST(Gradient, StationaryAtOptimum) {
  RewardSetup s = default_setup();
  s.vp_head = VpHead::kGeometric;
  s.terms = kTermVp;
  GradientConfig g;
  const auto vp = estimate_gradient(DistortionParams{}, 0, 1, s, build_reference(s), g);
  for (std::size_t i = 0; i < DistortionParams::kDim; ++i) EXPECT_NEAR(vp[i], 0.0, 10 * g.fd_step) << i;
  // The depth RMSE is |scale - 1| and |bias| times a constant near the
  // optimum, so central differences cancel on those axes.
  s.terms = kTermDepth;
  const auto depth = estimate_gradient(DistortionParams{}, 0, 1, s, build_reference(s), g);
  EXPECT_NEAR(depth[2], 0.0, 10 * g.fd_step);
  EXPECT_NEAR(depth[3], 0.0, 10 * g.fd_step);
}

TEST(Gradient, ThreadCountDoesNotMatter) {
  DistortionParams theta;
  theta.vp_dx = 0.04;
  theta.depth_scale = 1.2;
  GradientConfig a, b;
  b.threads = 3;
  EXPECT_EQ(estimate_gradient(theta, 7, 5, default_setup(), default_reference(), a),
            estimate_gradient(theta, 7, 5, default_setup(), default_reference(), b));
}

TEST(Optimize, StartsAtOptimum) {
  OptimizerConfig oc;
  oc.iterations = 8;
  const OptimizationTrace t = optimize(DistortionParams{}, default_setup(), default_reference(), WindowConfig{}, oc);
  ASSERT_EQ(t.rows.size(), 9u);
  double best_vp = 1e9;
  for (const auto& r : t.rows) best_vp = std::min(best_vp, r.geoscores.vp_error);
  EXPECT_LE(best_vp, 0.005);
  EXPECT_LE(t.rows[t.best_iter].geoscores.vp_error, 0.005);
}

TEST(Optimize, DeterministicAndThreadIndependent) {
  DistortionParams init;
  init.vp_dx = 0.05;
  init.depth_scale = 1.1;
  OptimizerConfig oc;
  oc.iterations = 3;
  const auto a = optimize(init, default_setup(), default_reference(), WindowConfig{}, oc);
  const auto b = optimize(init, default_setup(), default_reference(), WindowConfig{}, oc);
  oc.threads = 2;
  const auto c = optimize(init, default_setup(), default_reference(), WindowConfig{}, oc);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].theta, b.rows[i].theta);
    EXPECT_EQ(a.rows[i].reward, b.rows[i].reward);
    EXPECT_EQ(a.rows[i].theta, c.rows[i].theta);
    EXPECT_EQ(a.rows[i].window, c.rows[i].window);
  }
}

TEST(Optimize, BestNeverWorseThanInitAndWindowsLegal) {
  DistortionParams init;
  init.vp_dx = 0.07;
  init.depth_scale = 1.15;
  OptimizerConfig oc;
  oc.iterations = 4;
  oc.accumulate_window_steps = true;
  const auto t = optimize(init, default_setup(), default_reference(), WindowConfig{}, oc);
  EXPECT_GE(t.best_reward.R, t.rows[0].reward.R);
  double best = -1e300;
  for (const auto& r : t.rows) {
    best = std::max(best, r.reward.R);
    EXPECT_GE(r.window.t_prime, 8);
    EXPECT_LE(r.window.t_prime, 30);
    EXPECT_EQ(r.window.k, r.window.t_prime - 5);
  }
  EXPECT_EQ(t.best_reward.R, best);
  EXPECT_EQ(t.rows[t.best_iter].theta, t.best_theta);
}

TEST(Optimize, InvalidConfigRejected) {
  OptimizerConfig oc;
  oc.iterations = 0;
  EXPECT_THROW(optimize(DistortionParams{}, default_setup(), default_reference(), WindowConfig{}, oc),
               InvalidArgumentError);
}

TEST(Probe, CleanStepHasZeroVariance) {
  const auto rows = variance_probe(DistortionParams{}, {0, 30}, 32, 100, default_setup(), default_reference());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].k, 0);
  EXPECT_EQ(rows[0].var_R, 0.0);
  EXPECT_GE(rows[1].lane_floor_fraction, 0.9);
}

TEST(Probe, RowCountAndDeterminism) {
  const std::vector<int> steps{0, 5, 10};
  const auto a = variance_probe(DistortionParams{}, steps, 4, 1, default_setup(), default_reference());
  const auto b = variance_probe(DistortionParams{}, steps, 4, 1, default_setup(), default_reference(), 2);
  ASSERT_EQ(a.size(), steps.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_R, b[i].mean_R);
    EXPECT_EQ(a[i].var_R, b[i].var_R);
  }
  EXPECT_THROW(variance_probe(DistortionParams{}, steps, 1, 1, default_setup(), default_reference()),
               InvalidArgumentError);
}

TEST(FramePair, SelfComparison) {
  const RenderedFrame f = render_frame(synth_scene(4, SceneConfig{}), CameraModel{}, DistortionParams{});
  const RewardBreakdown b = reward_frame_pair(f, f, RewardWeights{}, VPConfig{});
  EXPECT_EQ(b.floored, kFloorNone);
  EXPECT_EQ(b.r_vp, 0.0);
  EXPECT_EQ(b.r_lane, 1.0);
  EXPECT_EQ(b.r_depth, 0.0);
  EXPECT_EQ(b.r_align, 0.0);
  EXPECT_NEAR(b.R_geo, 0.1, 1e-12);
}
