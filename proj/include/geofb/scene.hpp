#pragma once

// Procedural driving scenes and a pinhole renderer with a parametric
// geometric distortion model.
//
// World frame: X right, Y forward, Z up, meters. The ground is the plane
// Z = 0 and the camera sits at (0, 0, camera_height). Image coordinates put
// pixel centers on integers: column c, row r. A normalized image point is
// (u / width, v / height).

#include <array>
#include <cstdint>
#include <vector>

#include "geofb/geometry.hpp"
#include "geofb/tensor.hpp"

namespace geofb {

struct CameraModel {
  double fx = 220.0;
  double fy = 220.0;
  double cx = 128.0;
  double cy = 57.6;
  int width = 256;
  int height = 128;
  double camera_height = 1.5;
  double pitch = 0.0;  // radians; positive moves the forward vanishing point up
  double yaw = 0.0;    // radians; positive moves the forward vanishing point right
  double max_depth = 60.0;  // far clip; farther surfaces get no depth

  void validate() const;
  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct Lane {
  std::vector<Vec2> points;  // ground-plane polyline, meters
  double width = 0.4;        // marking width, meters
  friend bool operator==(const Lane&, const Lane&) = default;
};

struct VehicleBox {
  Vec3 center;  // meters
  Vec3 size;    // extents along the box's local x (lateral), y (length), z (height)
  double yaw = 0.0;
  friend bool operator==(const VehicleBox&, const VehicleBox&) = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int num_lanes = 0;
  double lane_spacing_m = 3.5;
  double lane_width_m = 0.4;
  std::vector<Lane> lanes;
  std::vector<VehicleBox> vehicles;
  // Drivable region: [road_x_min, road_x_max] x [0, road_length].
  double road_x_min = 0.0;
  double road_x_max = 0.0;
  double road_length = 0.0;

  void validate() const;
  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct SceneConfig {
  int num_lanes = 3;
  double lane_spacing_m = 3.5;
  double lane_width_m = 0.4;
  double lane_length_m = 80.0;
  double max_lateral_offset_m = 0.8;  // ego position jitter relative to the lane grid
  double road_margin_m = 1.0;
  int num_vehicles = 2;
  Vec3 vehicle_size{1.8, 4.5, 1.5};
  double vehicle_min_dist_m = 12.0;
  double vehicle_max_dist_m = 45.0;
  double vehicle_gap_m = 1.0;  // minimum clearance between footprints
  int max_placement_tries = 200;
};

/// The tunable geometric corruption. Identity is vp_shift = 0, depth_scale = 1,
/// everything else 0 (the default-constructed value).
struct DistortionParams {
  double vp_dx = 0.0;          // normalized image units
  double vp_dy = 0.0;
  double depth_scale = 1.0;    // unitless, > 0
  double depth_bias = 0.0;     // meters
  double lane_warp_amp = 0.0;  // meters
  double lane_warp_freq = 0.0; // 1 / meters
  double jitter_dx = 0.0;      // meters, applied to every vehicle
  double jitter_dy = 0.0;

  static constexpr std::size_t kDim = 8;
  static const std::array<const char*, kDim>& names();

  std::array<double, kDim> to_array() const;
  static DistortionParams from_array(const std::array<double, kDim>& v);

  bool is_identity() const { return *this == DistortionParams{}; }
  void validate() const;
  friend bool operator==(const DistortionParams&, const DistortionParams&) = default;
};

struct RenderedFrame {
  BinaryMask lane_mask;
  BinaryMask road_mask;
  BinaryMask vehicle_mask;
  DepthMap depth;
  OccupancyGrid occupancy;
  Vec2 true_vp;  // normalized
  friend bool operator==(const RenderedFrame&, const RenderedFrame&) = default;
};

struct OccupancyConfig {
  GridGeometry geometry{64, 128, 6, {-16.0, 0.0, -0.5}, 0.5};
  bool include_ground = true;
  double ground_thickness = 0.5;  // slab occupies Z in [-thickness, 0]
};

SceneSpec synth_scene(std::uint64_t seed, const SceneConfig& config);

/// Effective camera orientation after applying the vp shift: the forward
/// direction lands exactly on the shifted image point.
struct CameraPose {
  double pitch = 0.0;
  double yaw = 0.0;
};
CameraPose distorted_pose(const CameraModel& cam, const DistortionParams& dist);
// Image point (pixels) of the world forward direction under `pose`.
Vec2 forward_vanishing_point(const CameraModel& cam, const CameraPose& pose);

RenderedFrame render_frame(const SceneSpec& scene, const CameraModel& cam,
                           const DistortionParams& dist,
                           const OccupancyConfig& occupancy = OccupancyConfig{});

OccupancyGrid rasterize_occupancy(const SceneSpec& scene, const DistortionParams& dist,
                                  const OccupancyConfig& grid);

// True iff `p` lies inside `box` (closed box, yaw about +Z).
bool point_in_box(const VehicleBox& box, const Vec3& p);
// Ground footprints of two boxes, grown by `gap`, intersect (separating axes).
bool footprints_overlap(const VehicleBox& a, const VehicleBox& b, double gap);

}  // namespace geofb
