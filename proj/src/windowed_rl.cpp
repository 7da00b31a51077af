#include "geofb/windowed_rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "geofb/error.hpp"
#include "geofb/kernels.hpp"
#include "geofb/parallel.hpp"

namespace geofb {

std::span<const float> LatentFrame::channel(LatentChannel c) const {
  const std::size_t plane = static_cast<std::size_t>(latent_width()) * latent_height();
  return channels.f32().subspan(static_cast<std::size_t>(c) * plane, plane);
}

LatentFrame project_to_latent(const RenderedFrame& frame, int factor) {
  const int w = frame.lane_mask.width();
  const int h = frame.lane_mask.height();
  if (factor < 1) throw DimensionError("latent factor must be >= 1");
  if (w % factor != 0 || h % factor != 0) {
    throw DimensionError("render extents " + std::to_string(w) + "x" + std::to_string(h) +
                         " are not divisible by latent factor " + std::to_string(factor));
  }
  const int lw = w / factor, lh = h / factor;
  const std::size_t plane = static_cast<std::size_t>(lw) * lh;
  std::vector<float> out(plane * kNumChannels, 0.0f);
  const double inv_area = 1.0 / (static_cast<double>(factor) * factor);
  for (int ly = 0; ly < lh; ++ly) {
    for (int lx = 0; lx < lw; ++lx) {
      double lane = 0.0, veh = 0.0, dsum = 0.0;
      int dn = 0;
      for (int y = ly * factor; y < (ly + 1) * factor; ++y) {
        for (int x = lx * factor; x < (lx + 1) * factor; ++x) {
          lane += frame.lane_mask.at(x, y);
          veh += frame.vehicle_mask.at(x, y);
          const float d = frame.depth.at(x, y);
          if (d > 0.0f) {
            dsum += d;
            ++dn;
          }
        }
      }
      const std::size_t i = static_cast<std::size_t>(ly) * lw + lx;
      out[kChanLane * plane + i] = static_cast<float>(lane * inv_area);
      out[kChanDepth * plane + i] = dn > 0 ? static_cast<float>(dsum / dn) : 0.0f;
      out[kChanVehicle * plane + i] = static_cast<float>(veh * inv_area);
    }
  }
  LatentFrame z;
  z.channels = Tensor::from_f32({kNumChannels, static_cast<std::uint32_t>(lh),
                                 static_cast<std::uint32_t>(lw)},
                                std::move(out));
  z.scale_factor = factor;
  return z;
}

DecodedFrame decode_latent(const LatentFrame& z, float thresh) {
  const int lw = z.latent_width(), lh = z.latent_height(), f = z.scale_factor;
  if (f < 1) throw DimensionError("latent scale factor must be >= 1");
  const std::size_t plane = static_cast<std::size_t>(lw) * lh;
  std::vector<std::uint8_t> lane_lo(plane), veh_lo(plane);
  kernels::threshold(z.channel(kChanLane), thresh, lane_lo);
  kernels::threshold(z.channel(kChanVehicle), thresh, veh_lo);
  const auto depth_lo = z.channel(kChanDepth);

  const int w = lw * f, h = lh * f;
  std::vector<std::uint8_t> lane(static_cast<std::size_t>(w) * h), veh(lane.size());
  std::vector<float> depth(lane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t src = static_cast<std::size_t>(y / f) * lw + x / f;
      const std::size_t dst = static_cast<std::size_t>(y) * w + x;
      lane[dst] = lane_lo[src];
      veh[dst] = veh_lo[src];
      depth[dst] = std::max(depth_lo[src], 0.0f);
    }
  }
  return {BinaryMask(w, h, std::move(lane)), BinaryMask(w, h, std::move(veh)),
          DepthMap(w, h, std::move(depth))};
}

void fill_standard_normal(std::uint64_t seed, std::span<float> out) {
  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng] {
    // 53 random bits -> (0, 1]; never 0 so the log below is finite.
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  };
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform01()));
    const double a = 2.0 * std::numbers::pi * uniform01();
    out[i] = static_cast<float>(r * std::cos(a));
    if (i + 1 < out.size()) out[i + 1] = static_cast<float>(r * std::sin(a));
  }
}

LatentTrajectory LatentTrajectory::make(LatentFrame z0, std::uint64_t noise_seed, int T) {
  if (T < 1) throw RangeError("trajectory length T must be >= 1");
  Tensor eps = Tensor::zeros(DType::kF32, z0.channels.dims());
  fill_standard_normal(noise_seed, eps.f32_mut());
  return {std::move(z0), std::move(eps), T};
}

LatentFrame flow_interpolate(const LatentTrajectory& traj, int k) {
  if (k < 0 || k > traj.T) {
    throw RangeError("step k=" + std::to_string(k) + " outside [0, " + std::to_string(traj.T) + "]");
  }
  if (traj.eps.dims() != traj.z0.channels.dims()) throw DimensionError("noise and latent shapes differ");
  LatentFrame out = traj.z0;
  if (k == 0) return out;
  if (k == traj.T) {
    out.channels = traj.eps;
    return out;
  }
  const float s = static_cast<float>(k) / static_cast<float>(traj.T);
  kernels::axpby(1.0f - s, traj.z0.channels.f32(), s, traj.eps.f32(), out.channels.f32_mut());
  return out;
}

void WindowConfig::validate(int T) const {
  if (w < 1) throw InvalidArgumentError("window size must be >= 1");
  if (t_min < w) throw InvalidArgumentError("t_min must be >= w so that k = t' - w >= 0");
  if (t_max < t_min) throw InvalidArgumentError("t_max must be >= t_min");
  if (t_max > T) throw InvalidArgumentError("t_max must be <= T");
}

Window sample_window(const WindowConfig& cfg, std::mt19937_64& rng) {
  const std::uint64_t span = static_cast<std::uint64_t>(cfg.t_max - cfg.t_min) + 1;
  const int t_prime = cfg.t_min + static_cast<int>(rng() % span);
  return {t_prime, t_prime - cfg.w};
}

void RewardSetup::validate() const {
  scene.validate();
  camera.validate();
  weights.validate();
  if (latent_factor < 1) throw InvalidArgumentError("latent factor must be >= 1");
  if (T < 1) throw InvalidArgumentError("T must be >= 1");
  if ((terms & ~static_cast<std::uint32_t>(kTermAll)) != 0) throw InvalidArgumentError("unknown reward term bits");
}

namespace {

FeatureDistribution latent_features(const LatentFrame& z) {
  return fit_feature_columns({z.channel(kChanVehicle), z.channel(kChanDepth)});
}

struct PerceptionResult {
  RewardTerms terms;
  std::uint32_t floored = kFloorNone;
};

}  // namespace

ReferenceBundle build_reference(const RewardSetup& setup) {
  setup.validate();
  const RenderedFrame frame = render_frame(setup.scene, setup.camera, DistortionParams{}, setup.occupancy);
  const LatentFrame z = project_to_latent(frame, setup.latent_factor);
  DecodedFrame dec = decode_latent(z, setup.decode_thresh);
  ReferenceBundle ref;
  ref.v_ref = setup.vp_head == VpHead::kGeometric ? frame.true_vp
                                                  : estimate_vp(dec.lane_mask, setup.vp).vp;
  ref.lane_ref = std::move(dec.lane_mask);
  ref.depth_ref = std::move(dec.depth);
  ref.road_mask = frame.road_mask;
  ref.vehicle_mask = frame.vehicle_mask;
  ref.feat_real = latent_features(z);
  ref.occ_real = frame.occupancy;
  return ref;
}

RewardBreakdown evaluate_reward_at(const DistortionParams& theta, int k, std::uint64_t noise_seed,
                                   const RewardSetup& setup, const ReferenceBundle& reference) {
  if (k < 0 || k > setup.T) throw RangeError("step k outside [0, T]");
  const RenderedFrame frame = render_frame(setup.scene, setup.camera, theta, setup.occupancy);
  LatentFrame z = project_to_latent(frame, setup.latent_factor);
  if (k > 0) {
    z = flow_interpolate(LatentTrajectory::make(std::move(z), noise_seed, setup.T), k);
    if (setup.rescale_clean_estimate) {
      const float keep = std::max(1.0f - static_cast<float>(k) / setup.T, 1.0f / setup.T);
      for (float& v : z.channels.f32_mut()) v /= keep;
    }
  }
  const DecodedFrame dec = decode_latent(z, setup.decode_thresh);

  RewardTerms t;
  std::uint32_t floored = kFloorNone;
  try {
    const VPEstimate est = estimate_vp(dec.lane_mask, setup.vp);
    t.r_vp = reward_vp(setup.vp_head == VpHead::kGeometric ? frame.true_vp : est.vp, reference.v_ref);
    t.r_lane = reward_lane(dec.lane_mask, reference.lane_ref);
  } catch (const NoLanesError&) {
    floored |= kFloorVp | kFloorLane;
  } catch (const FitError&) {
    floored |= kFloorVp | kFloorLane;
  } catch (const DegenerateError&) {
    floored |= kFloorVp | kFloorLane;
  }
  if (floored & kFloorVp) {
    t.r_vp = setup.vp_head == VpHead::kGeometric ? reward_vp(frame.true_vp, reference.v_ref)
                                                 : setup.vp_floor;
    t.r_lane = setup.lane_floor;
    // The analytic head does not depend on the mask.
    if (setup.vp_head == VpHead::kGeometric) floored &= ~static_cast<std::uint32_t>(kFloorVp);
  }
  try {
    t.r_depth = reward_depth(dec.depth, reference.depth_ref, reference.road_mask, reference.vehicle_mask);
  } catch (const EmptyMaskError&) {
    t.r_depth = setup.depth_floor;
    floored |= kFloorDepth;
  }
  t.r_align = reward_align(reference.feat_real, latent_features(z));
  t.r_iou = reward_iou(frame.occupancy, reference.occ_real);

  if (!(setup.terms & kTermVp)) t.r_vp = 0.0;
  if (!(setup.terms & kTermLane)) t.r_lane = 0.0;
  if (!(setup.terms & kTermDepth)) t.r_depth = 0.0;
  if (!(setup.terms & kTermAlign)) t.r_align = 0.0;
  if (!(setup.terms & kTermIou)) t.r_iou = 0.0;
  if (!(setup.terms & kTermVp)) floored &= ~static_cast<std::uint32_t>(kFloorVp);
  if (!(setup.terms & kTermLane)) floored &= ~static_cast<std::uint32_t>(kFloorLane);
  if (!(setup.terms & kTermDepth)) floored &= ~static_cast<std::uint32_t>(kFloorDepth);

  RewardBreakdown b = compose_reward(t, setup.weights);
  b.floored = floored;
  return b;
}

RewardBreakdown reward_frame_pair(const RenderedFrame& gen, const RenderedFrame& ref,
                                  const RewardWeights& weights, const VPConfig& vp, int feature_factor) {
  weights.validate();
  if (!gen.lane_mask.same_extent(ref.lane_mask)) throw DimensionError("generated and reference frames differ in size");
  const RewardSetup defaults;
  const Vec2 v_ref = estimate_vp(ref.lane_mask, vp).vp;
  RewardTerms t;
  std::uint32_t floored = kFloorNone;
  try {
    t.r_vp = reward_vp(estimate_vp(gen.lane_mask, vp).vp, v_ref);
    t.r_lane = reward_lane(gen.lane_mask, ref.lane_mask);
  } catch (const NoLanesError&) {
    floored |= kFloorVp | kFloorLane;
  } catch (const FitError&) {
    floored |= kFloorVp | kFloorLane;
  } catch (const DegenerateError&) {
    floored |= kFloorVp | kFloorLane;
  }
  if (floored & kFloorVp) {
    t.r_vp = defaults.vp_floor;
    t.r_lane = defaults.lane_floor;
  }
  try {
    t.r_depth = reward_depth(gen.depth, ref.depth, ref.road_mask, ref.vehicle_mask);
  } catch (const EmptyMaskError&) {
    t.r_depth = defaults.depth_floor;
    floored |= kFloorDepth;
  }
  t.r_align = reward_align(latent_features(project_to_latent(ref, feature_factor)),
                           latent_features(project_to_latent(gen, feature_factor)));
  t.r_iou = reward_iou(gen.occupancy, ref.occupancy);
  RewardBreakdown b = compose_reward(t, weights);
  b.floored = floored;
  return b;
}

namespace {

// Weighted difference of two breakdowns, leaving out terms floored in either.
double reward_difference(const RewardBreakdown& p, const RewardBreakdown& m, const RewardWeights& w) {
  const std::uint32_t f = p.floored | m.floored;
  double d = 0.0;
  if (!(f & kFloorVp)) d += w.lambda_vp * p.r_vp - w.lambda_vp * m.r_vp;
  if (!(f & kFloorLane)) d += w.lambda_lane * p.r_lane - w.lambda_lane * m.r_lane;
  if (!(f & kFloorDepth)) d += w.lambda_depth * p.r_depth - w.lambda_depth * m.r_depth;
  d += p.r_align - m.r_align;
  d += p.r_iou - m.r_iou;
  return d;
}

}  // namespace

std::array<double, DistortionParams::kDim> estimate_gradient(
    const DistortionParams& theta, int k, std::uint64_t noise_seed, const RewardSetup& setup,
    const ReferenceBundle& reference, const GradientConfig& cfg) {
  if (!(cfg.fd_step > 0.0)) throw InvalidArgumentError("fd_step must be > 0");
  constexpr std::size_t D = DistortionParams::kDim;
  const auto base = theta.to_array();
  std::array<double, D> h{};
  for (std::size_t i = 0; i < D; ++i) {
    h[i] = cfg.fd_step * cfg.fd_scale[i];
    if (!(h[i] > 0.0)) throw InvalidArgumentError("per-axis fd step must be > 0");
  }
  std::array<RewardBreakdown, 2 * D> evals;
  parallel_for(2 * D, cfg.threads, [&](std::size_t j) {
    const std::size_t i = j / 2;
    auto x = base;
    x[i] += (j % 2 == 0) ? h[i] : -h[i];
    evals[j] = evaluate_reward_at(DistortionParams::from_array(x), k, noise_seed, setup, reference);
  });
  std::array<double, D> g{};
  for (std::size_t i = 0; i < D; ++i) {
    // (x + h) - (x - h) is the step actually taken after rounding.
    const double xp = base[i] + h[i], xm = base[i] - h[i];
    g[i] = reward_difference(evals[2 * i], evals[2 * i + 1], setup.weights) / (xp - xm);
  }
  return g;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgumentError("learning_rate must be > 0");
  if (iterations < 1) throw InvalidArgumentError("iterations must be >= 1");
  if (!(fd_step > 0.0)) throw InvalidArgumentError("fd_step must be > 0");
  if (windows_per_iter < 1) throw InvalidArgumentError("windows_per_iter must be >= 1");
  if (!(lr_final_fraction >= 0.0 && lr_final_fraction <= 1.0)) {
    throw InvalidArgumentError("lr_final_fraction must be in [0, 1]");
  }
  if (threads < 1) throw InvalidArgumentError("threads must be >= 1");
}

FrameScore clean_geoscores(const DistortionParams& theta, const RewardSetup& setup,
                           const RenderedFrame& reference_frame) {
  const RenderedFrame f = render_frame(setup.scene, setup.camera, theta, setup.occupancy);
  FrameScore s;
  s.lane_f1 = score_lane(f.lane_mask, reference_frame.lane_mask);
  try {
    s.depth_rmse = score_depth(f.depth, reference_frame.depth, reference_frame.road_mask);
  } catch (const EmptyMaskError& e) {
    s.depth_rmse = std::numeric_limits<double>::quiet_NaN();
    s.error = e.what();
  }
  try {
    s.vp_error = score_vp(estimate_vp(f.lane_mask, setup.vp).vp,
                          estimate_vp(reference_frame.lane_mask, setup.vp).vp);
  } catch (const Error& e) {
    s.vp_error = std::numeric_limits<double>::quiet_NaN();
    if (s.error.empty()) s.error = e.what();
  }
  return s;
}

OptimizationTrace optimize(const DistortionParams& theta_init, const RewardSetup& setup,
                           const ReferenceBundle& reference, const WindowConfig& wcfg,
                           const OptimizerConfig& ocfg) {
  setup.validate();
  wcfg.validate(setup.T);
  ocfg.validate();
  theta_init.validate();
  constexpr std::size_t D = DistortionParams::kDim;

  const RenderedFrame ref_frame = render_frame(setup.scene, setup.camera, DistortionParams{}, setup.occupancy);
  std::mt19937_64 window_rng(wcfg.seed);
  std::mt19937_64 noise_rng(ocfg.seed);
  const GradientConfig gcfg{ocfg.fd_step, ocfg.fd_scale, ocfg.threads};

  OptimizationTrace trace;
  std::array<double, D> x = theta_init.to_array();
  std::array<double, D> m{}, v{};
  for (int it = 0; it <= ocfg.iterations; ++it) {
    std::vector<Window> windows(static_cast<std::size_t>(ocfg.windows_per_iter));
    std::vector<std::uint64_t> seeds(windows.size());
    for (std::size_t j = 0; j < windows.size(); ++j) {
      windows[j] = sample_window(wcfg, window_rng);
      seeds[j] = noise_rng();
    }
    const DistortionParams theta = DistortionParams::from_array(x);
    TraceRow row;
    row.iter = it;
    row.window = windows.front();
    row.theta = theta;
    row.reward = evaluate_reward_at(theta, 0, 0, setup, reference);
    row.geoscores = clean_geoscores(theta, setup, ref_frame);
    row.geoscores.frame = it;
    if (trace.rows.empty() || row.reward.R > trace.best_reward.R) {
      trace.best_reward = row.reward;
      trace.best_theta = theta;
      trace.best_iter = it;
    }
    trace.rows.push_back(row);
    if (it == ocfg.iterations) break;

    std::array<double, D> g{};
    int terms = 0;
    for (std::size_t j = 0; j < windows.size(); ++j) {
      const int k_hi = ocfg.accumulate_window_steps ? windows[j].t_prime - 1 : windows[j].k;
      for (int k = windows[j].k; k <= std::max(k_hi, windows[j].k); ++k) {
        const auto gj = estimate_gradient(theta, k, seeds[j], setup, reference, gcfg);
        for (std::size_t i = 0; i < D; ++i) g[i] += gj[i];
        ++terms;
      }
    }
    for (auto& gi : g) gi /= static_cast<double>(terms);

    const double progress = static_cast<double>(it) / ocfg.iterations;
    const double f = ocfg.lr_final_fraction;
    const double lr = ocfg.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    for (std::size_t i = 0; i < D; ++i) {
      double step = g[i];
      if (ocfg.kind == OptimizerKind::kAdam) {
        m[i] = ocfg.beta1 * m[i] + (1.0 - ocfg.beta1) * g[i];
        v[i] = ocfg.beta2 * v[i] + (1.0 - ocfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / (1.0 - std::pow(ocfg.beta1, it + 1));
        const double vhat = v[i] / (1.0 - std::pow(ocfg.beta2, it + 1));
        step = mhat / (std::sqrt(vhat) + ocfg.adam_eps);
      }
      x[i] += lr * ocfg.lr_scale[i] * step;
    }
    x[0] = std::clamp(x[0], -0.5, 0.5);
    x[1] = std::clamp(x[1], -0.5, 0.5);
    x[2] = std::clamp(x[2], 0.1, 10.0);
    // Warp amplitude and frequency are magnitudes.
    x[4] = std::max(x[4], 0.0);
    x[5] = std::max(x[5], 0.0);
  }
  return trace;
}

std::vector<ProbeRow> variance_probe(const DistortionParams& theta, const std::vector<int>& steps,
                                     int n_seeds, std::uint64_t base_seed, const RewardSetup& setup,
                                     const ReferenceBundle& reference, int threads) {
  if (n_seeds < 2) throw InvalidArgumentError("variance probe needs at least 2 seeds");
  const std::size_t ns = static_cast<std::size_t>(n_seeds);
  std::vector<RewardBreakdown> evals(steps.size() * ns);
  parallel_for(evals.size(), threads, [&](std::size_t j) {
    evals[j] = evaluate_reward_at(theta, steps[j / ns], base_seed + j % ns, setup, reference);
  });
  std::vector<ProbeRow> rows;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    ProbeRow r;
    r.k = steps[s];
    // Shifted by the first sample so that identical rewards give exactly 0.
    const double shift = evals[s * ns].R;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      const auto& e = evals[s * ns + j];
      const double d = e.R - shift;
      sum += d;
      sum_sq += d * d;
      if (e.floored & kFloorLane) r.lane_floor_fraction += 1.0;
      if (e.floored & kFloorVp) r.vp_floor_fraction += 1.0;
    }
    r.mean_R = shift + sum / n_seeds;
    r.var_R = std::max(0.0, (sum_sq - sum * sum / n_seeds) / (n_seeds - 1));
    r.lane_floor_fraction /= n_seeds;
    r.vp_floor_fraction /= n_seeds;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace geofb
