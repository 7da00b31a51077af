#pragma once

// Windowed reward optimization over DistortionParams on simulated
// rectified-flow latents.
//
// A rendered frame is pooled into a 3-channel latent (lane, depth, vehicle),
// blended toward seeded Gaussian noise at step k, decoded back to perception
// rasters, and scored against a reference built from the undistorted render.
// Gradients over the 8 distortion parameters come from central finite
// differences with common random numbers.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "geofb/geoscores.hpp"
#include "geofb/perception.hpp"
#include "geofb/rewards.hpp"
#include "geofb/scene.hpp"
#include "geofb/tensor.hpp"

namespace geofb {

enum LatentChannel : std::uint32_t { kChanLane = 0, kChanDepth = 1, kChanVehicle = 2, kNumChannels = 3 };

struct LatentFrame {
  Tensor channels = Tensor::zeros(DType::kF32, {kNumChannels, 1, 1});  // [3, H', W']
  int scale_factor = 1;

  int latent_width() const { return static_cast<int>(channels.dims()[2]); }
  int latent_height() const { return static_cast<int>(channels.dims()[1]); }
  std::span<const float> channel(LatentChannel c) const;
  friend bool operator==(const LatentFrame&, const LatentFrame&) = default;
};

struct DecodedFrame {
  BinaryMask lane_mask;
  BinaryMask vehicle_mask;
  DepthMap depth;
};

LatentFrame project_to_latent(const RenderedFrame& frame, int factor);
DecodedFrame decode_latent(const LatentFrame& z, float thresh = 0.5f);

struct LatentTrajectory {
  LatentFrame z0;
  Tensor eps;  // same shape as z0.channels
  int T = 30;

  /// eps drawn from a counter-free Box-Muller stream on mt19937_64(seed).
  static LatentTrajectory make(LatentFrame z0, std::uint64_t noise_seed, int T = 30);
};

/// z_k = (1 - k/T) z0 + (k/T) eps. RangeError unless 0 <= k <= T.
LatentFrame flow_interpolate(const LatentTrajectory& traj, int k);

/// Fills `out` with unit Gaussian samples; identical on every platform.
void fill_standard_normal(std::uint64_t seed, std::span<float> out);

struct WindowConfig {
  int w = 5;
  int t_min = 8;
  int t_max = 30;
  std::uint64_t seed = 0;

  void validate(int T) const;
};

struct Window {
  int t_prime = 0;
  int k = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

Window sample_window(const WindowConfig& cfg, std::mt19937_64& rng);

enum class VpHead {
  kMaskRansac,  // estimate_vp on the decoded lane mask
  kGeometric,   // analytic vanishing point of the distorted camera
};

enum RewardTerm : std::uint32_t {
  kTermVp = 1u << 0,
  kTermLane = 1u << 1,
  kTermDepth = 1u << 2,
  kTermAlign = 1u << 3,
  kTermIou = 1u << 4,
  kTermAll = 0x1f,
};

/// Everything fixed across one optimization run.
struct RewardSetup {
  SceneSpec scene;
  CameraModel camera;
  OccupancyConfig occupancy;
  RewardWeights weights;
  VPConfig vp;
  VpHead vp_head = VpHead::kMaskRansac;
  std::uint32_t terms = kTermAll;  // terms outside the mask contribute 0
  int latent_factor = 2;
  int T = 30;
  float decode_thresh = 0.5f;
  // Undo the (1 - k/T) attenuation before decoding, so that depth and soft
  // masks keep their clean-signal scale at every noise level.
  bool rescale_clean_estimate = true;
  double vp_floor = -1.0;
  double lane_floor = 0.0;
  double depth_floor = -120.0;

  void validate() const;
};

ReferenceBundle build_reference(const RewardSetup& setup);

RewardBreakdown evaluate_reward_at(const DistortionParams& theta, int k, std::uint64_t noise_seed,
                                   const RewardSetup& setup, const ReferenceBundle& reference);

/// Reward of a rendered frame against a reference frame at full resolution,
/// without the latent round trip. VP comes from estimate_vp on both lane
/// masks; features from the latent projection at `feature_factor`. Perception
/// failures on the generated side floor the affected terms as in
/// evaluate_reward_at; failures on the reference side propagate.
RewardBreakdown reward_frame_pair(const RenderedFrame& gen, const RenderedFrame& ref,
                                  const RewardWeights& weights, const VPConfig& vp,
                                  int feature_factor = 2);

struct GradientConfig {
  double fd_step = 1e-3;
  // Per-axis multiplier on fd_step, in DistortionParams order.
  std::array<double, DistortionParams::kDim> fd_scale{1, 1, 1, 1, 1, 1, 1, 1};
  int threads = 1;
};

/// Central differences with the same (k, noise_seed) for every evaluation.
/// A term floored in either evaluation of a coordinate is left out of that
/// coordinate's difference.
std::array<double, DistortionParams::kDim> estimate_gradient(
    const DistortionParams& theta, int k, std::uint64_t noise_seed, const RewardSetup& setup,
    const ReferenceBundle& reference, const GradientConfig& cfg);

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  double learning_rate = 0.05;
  int iterations = 200;
  double fd_step = 1e-3;
  int windows_per_iter = 2;
  std::uint64_t seed = 42;
  OptimizerKind kind = OptimizerKind::kAdam;
  // Per-axis multiplier on learning_rate, in DistortionParams order.
  std::array<double, DistortionParams::kDim> lr_scale{0.1, 0.1, 0.2, 1.0, 1.0, 0.1, 1.0, 1.0};
  // Per-axis multiplier on fd_step. Occupancy is piecewise constant at voxel
  // scale, so the jitter axes need a step comparable to a voxel.
  std::array<double, DistortionParams::kDim> fd_scale{1, 1, 1, 1, 1, 1, 200, 200};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Cosine decay from learning_rate to learning_rate * lr_final_fraction.
  double lr_final_fraction = 0.05;
  // Average the gradient over every step k .. t'-1 of a window instead of
  // evaluating only at the window end k.
  bool accumulate_window_steps = false;
  int threads = 1;

  void validate() const;
};

struct TraceRow {
  int iter = 0;
  Window window;  // window whose gradient moved theta to the next row
  DistortionParams theta;
  RewardBreakdown reward;  // clean (k = 0) reward at theta
  FrameScore geoscores;    // clean render vs reference render, full resolution
};

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  DistortionParams best_theta;
  RewardBreakdown best_reward;
  int best_iter = 0;
};

/// GeoScores of the full-resolution render at theta against the reference
/// render. A failed VP estimate leaves vp_error NaN and sets `error`.
FrameScore clean_geoscores(const DistortionParams& theta, const RewardSetup& setup,
                           const RenderedFrame& reference_frame);

/// Runs `ocfg.iterations` updates. rows has iterations + 1 entries: row i is
/// theta after i updates; its window is the one drawn for update i (the last
/// row's window is drawn but not applied).
OptimizationTrace optimize(const DistortionParams& theta_init, const RewardSetup& setup,
                           const ReferenceBundle& reference, const WindowConfig& wcfg,
                           const OptimizerConfig& ocfg);

struct ProbeRow {
  int k = 0;
  double mean_R = 0.0;
  double var_R = 0.0;
  double lane_floor_fraction = 0.0;
  double vp_floor_fraction = 0.0;
};

/// Reward statistics over noise seeds base_seed .. base_seed + n_seeds - 1
/// for each step k. Variance is the unbiased sample variance.
std::vector<ProbeRow> variance_probe(const DistortionParams& theta, const std::vector<int>& steps,
                                     int n_seeds, std::uint64_t base_seed, const RewardSetup& setup,
                                     const ReferenceBundle& reference, int threads = 1);

}  // namespace geofb
