#include "geofb/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "geofb/error.hpp"

namespace geofb {

namespace {

struct Mat3 {
  double m[3][3];

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
    return r;
  }
  Mat3 transposed() const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
};

// Camera rotation applied to "base" camera coordinates (x right, y down,
// z forward, level camera looking along world +Y).
Mat3 camera_rotation(const CameraPose& pose) {
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const Mat3 rx{{{1, 0, 0}, {0, cp, -sp}, {0, sp, cp}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  return rx * ry;
}

Vec3 world_to_base(const Vec3& w) { return {w.x, -w.z, w.y}; }
Vec3 base_to_world(const Vec3& b) { return {b.x, b.z, -b.y}; }

// Box-local coordinates: translate to the center, undo the yaw about +Z.
Vec3 to_box_frame(const VehicleBox& box, const Vec3& p) {
  const Vec3 d = p - box.center;
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  return {c * d.x + s * d.y, -s * d.x + c * d.y, d.z};
}

Vec3 rotate_into_box(const VehicleBox& box, const Vec3& v) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  return {c * v.x + s * v.y, -s * v.x + c * v.y, v.z};
}

// Slab test; returns the entry distance along `dir` or +inf on a miss.
double ray_box(const VehicleBox& box, const Vec3& origin, const Vec3& dir) {
  const Vec3 o = to_box_frame(box, origin);
  const Vec3 d = rotate_into_box(box, dir);
  const double half[3] = {box.size.x / 2, box.size.y / 2, box.size.z / 2};
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (ds[a] == 0.0) {
      if (os[a] < -half[a] || os[a] > half[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (-half[a] - os[a]) / ds[a];
    double tb = (half[a] - os[a]) / ds[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

std::vector<VehicleBox> jittered(const std::vector<VehicleBox>& boxes, const DistortionParams& dist) {
  std::vector<VehicleBox> out = boxes;
  if (dist.jitter_dx != 0.0 || dist.jitter_dy != 0.0) {
    for (auto& b : out) {
      b.center.x += dist.jitter_dx;
      b.center.y += dist.jitter_dy;
    }
  }
  return out;
}

// Lateral offset of the warped marking at arclength s.
double warp_offset(const DistortionParams& dist, double s) {
  if (dist.lane_warp_amp == 0.0) return 0.0;
  return dist.lane_warp_amp * std::sin(dist.lane_warp_freq * s);
}

bool on_lane(const Lane& lane, const Vec2& g, const DistortionParams& dist) {
  double s0 = 0.0;
  const double half = lane.width / 2;
  for (std::size_t i = 0; i + 1 < lane.points.size(); ++i) {
    const Vec2 a = lane.points[i];
    const Vec2 seg = lane.points[i + 1] - a;
    const double len = norm(seg);
    if (len <= 0.0) continue;
    const Vec2 dir = (1.0 / len) * seg;
    const Vec2 nrm{dir.y, -dir.x};
    const Vec2 rel = g - a;
    const double along = dot(rel, dir);
    if (along >= 0.0 && along <= len) {
      const double lateral = dot(rel, nrm) - warp_offset(dist, s0 + along);
      if (std::abs(lateral) <= half) return true;
    }
    s0 += len;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgumentError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgumentError("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgumentError("principal point must lie inside the image");
  }
  if (!(camera_height > 0.0)) throw InvalidArgumentError("camera_height must be positive");
  if (!(max_depth > 0.0)) throw InvalidArgumentError("max_depth must be positive");
  if (!std::isfinite(pitch) || !std::isfinite(yaw)) {
    throw InvalidArgumentError("camera angles must be finite");
  }
}

void SceneSpec::validate() const {
  if (lanes.size() < 2) throw InvalidArgumentError("a scene needs at least 2 lanes");
  for (const auto& l : lanes) {
    if (!(l.width > 0.0)) throw InvalidArgumentError("lane width must be positive");
    if (l.points.size() < 2) throw InvalidArgumentError("a lane needs at least 2 points");
  }
  for (const auto& v : vehicles) {
    if (!(v.size.x > 0.0 && v.size.y > 0.0 && v.size.z > 0.0)) {
      throw InvalidArgumentError("vehicle box sizes must be positive");
    }
  }
}

const std::array<const char*, DistortionParams::kDim>& DistortionParams::names() {
  static const std::array<const char*, kDim> n{"vp_dx",         "vp_dy",          "depth_scale",
                                               "depth_bias",    "lane_warp_amp",  "lane_warp_freq",
                                               "jitter_dx",     "jitter_dy"};
  return n;
}

std::array<double, DistortionParams::kDim> DistortionParams::to_array() const {
  return {vp_dx, vp_dy, depth_scale, depth_bias, lane_warp_amp, lane_warp_freq, jitter_dx, jitter_dy};
}

DistortionParams DistortionParams::from_array(const std::array<double, kDim>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

void DistortionParams::validate() const {
  for (double v : to_array()) {
    if (!std::isfinite(v)) throw InvalidArgumentError("distortion parameters must be finite");
  }
  if (!(depth_scale > 0.0)) throw InvalidArgumentError("depth_scale must be positive");
}

// ---------------------------------------------------------------------------

SceneSpec synth_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.num_lanes < 2) {
    throw InvalidArgumentError("scene config must request at least 2 lanes, got " +
                               std::to_string(config.num_lanes));
  }
  if (!(config.lane_spacing_m > 0.0) || !(config.lane_width_m > 0.0) ||
      !(config.lane_length_m > 0.0)) {
    throw InvalidArgumentError("lane spacing, width, and length must be positive");
  }
  if (config.num_vehicles < 0) throw InvalidArgumentError("num_vehicles must be >= 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SceneSpec scene;
  scene.seed = seed;
  scene.num_lanes = config.num_lanes;
  scene.lane_spacing_m = config.lane_spacing_m;
  scene.lane_width_m = config.lane_width_m;
  const double offset = uniform(-config.max_lateral_offset_m, config.max_lateral_offset_m);
  std::vector<double> xs;
  for (int i = 0; i < config.num_lanes; ++i) {
    const double x = (i - (config.num_lanes - 1) / 2.0) * config.lane_spacing_m + offset;
    xs.push_back(x);
    scene.lanes.push_back(Lane{{{x, 0.0}, {x, config.lane_length_m}}, config.lane_width_m});
  }
  scene.road_x_min = xs.front() - config.lane_width_m / 2 - config.road_margin_m;
  scene.road_x_max = xs.back() + config.lane_width_m / 2 + config.road_margin_m;
  scene.road_length = config.lane_length_m;

  const int slots = config.num_lanes - 1;
  for (int v = 0; v < config.num_vehicles; ++v) {
    bool placed = false;
    for (int attempt = 0; attempt < config.max_placement_tries && !placed; ++attempt) {
      const int slot = std::min(slots - 1, static_cast<int>(unit(rng) * slots));
      const double lane_center = 0.5 * (xs[slot] + xs[slot + 1]);
      const double free = std::max(0.0, (config.lane_spacing_m - config.vehicle_size.x) / 2 - 0.2);
      VehicleBox box;
      box.size = config.vehicle_size;
      box.center = {lane_center + uniform(-free, free),
                    uniform(config.vehicle_min_dist_m, config.vehicle_max_dist_m),
                    config.vehicle_size.z / 2};
      bool clear = true;
      for (const auto& other : scene.vehicles) {
        if (footprints_overlap(box, other, config.vehicle_gap_m)) {
          clear = false;
          break;
        }
      }
      if (clear) {
        scene.vehicles.push_back(box);
        placed = true;
      }
    }
    if (!placed) {
      throw PlacementError("could not place vehicle " + std::to_string(v) + " after " +
                           std::to_string(config.max_placement_tries) + " tries");
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------

Vec2 forward_vanishing_point(const CameraModel& cam, const CameraPose& pose) {
  const Vec3 d = camera_rotation(pose) * world_to_base({0.0, 1.0, 0.0});
  return {cam.cx + cam.fx * d.x / d.z, cam.cy + cam.fy * d.y / d.z};
}

CameraPose distorted_pose(const CameraModel& cam, const DistortionParams& dist) {
  const CameraPose base{cam.pitch, cam.yaw};
  if (dist.vp_dx == 0.0 && dist.vp_dy == 0.0) return base;
  const Vec2 vp = forward_vanishing_point(cam, base);
  const double u = vp.x + dist.vp_dx * cam.width;
  const double v = vp.y + dist.vp_dy * cam.height;
  CameraPose pose;
  pose.pitch = std::atan((cam.cy - v) / cam.fy);
  pose.yaw = std::atan((u - cam.cx) * std::cos(pose.pitch) / cam.fx);
  return pose;
}

OccupancyGrid rasterize_occupancy(const SceneSpec& scene, const DistortionParams& dist,
                                  const OccupancyConfig& grid) {
  OccupancyGrid occ(grid.geometry);
  if (grid.include_ground && !(grid.ground_thickness > 0.0)) {
    throw InvalidArgumentError("ground_thickness must be positive");
  }
  const auto boxes = jittered(scene.vehicles, dist);
  const auto& g = grid.geometry;
  for (int z = 0; z < g.nz; ++z) {
    for (int y = 0; y < g.ny; ++y) {
      for (int x = 0; x < g.nx; ++x) {
        const auto c = occ.voxel_center(x, y, z);
        const Vec3 p{c[0], c[1], c[2]};
        bool hit = grid.include_ground && p.z >= -grid.ground_thickness && p.z <= 0.0 &&
                   p.x >= scene.road_x_min && p.x <= scene.road_x_max && p.y >= 0.0 &&
                   p.y <= scene.road_length;
        for (std::size_t i = 0; !hit && i < boxes.size(); ++i) hit = point_in_box(boxes[i], p);
        if (hit) occ.set(x, y, z, true);
      }
    }
  }
  return occ;
}

RenderedFrame render_frame(const SceneSpec& scene, const CameraModel& cam,
                           const DistortionParams& dist, const OccupancyConfig& occupancy) {
  cam.validate();
  scene.validate();
  dist.validate();

  const CameraPose pose = distorted_pose(cam, dist);
  const Vec2 vp_px = forward_vanishing_point(cam, pose);
  const Vec2 vp{vp_px.x / cam.width, vp_px.y / cam.height};
  if (!std::isfinite(vp.x) || !std::isfinite(vp.y) || vp.x < -0.5 || vp.x > 1.5 || vp.y < -0.5 ||
      vp.y > 1.5) {
    throw HorizonError("vanishing point (" + std::to_string(vp.x) + ", " + std::to_string(vp.y) +
                       ") is more than 0.5 normalized units outside the image");
  }

  const Mat3 cam_to_base = camera_rotation(pose).transposed();
  const Vec3 origin{0.0, 0.0, cam.camera_height};
  const auto boxes = jittered(scene.vehicles, dist);

  const int w = cam.width, h = cam.height;
  BinaryMask lane(w, h), road(w, h), vehicle(w, h);
  DepthMap depth(w, h);
  const double inf = std::numeric_limits<double>::infinity();

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Vec3 ray_cam{(c - cam.cx) / cam.fx, (r - cam.cy) / cam.fy, 1.0};
      const Vec3 dir = base_to_world(cam_to_base * ray_cam);
      // With the camera-frame ray normalized to z = 1, the ray parameter is the
      // depth along the optical axis.
      double t_ground = inf;
      if (dir.z < 0.0) t_ground = cam.camera_height / -dir.z;
      double t_vehicle = inf;
      for (const auto& b : boxes) t_vehicle = std::min(t_vehicle, ray_box(b, origin, dir));

      if (t_vehicle < t_ground && t_vehicle <= cam.max_depth) {
        vehicle.set(c, r, true);
        depth.at(c, r) = static_cast<float>(t_vehicle);
      } else if (t_ground <= cam.max_depth) {
        depth.at(c, r) = static_cast<float>(t_ground);
        const Vec2 g{t_ground * dir.x, t_ground * dir.y};
        bool is_lane = false;
        for (std::size_t i = 0; !is_lane && i < scene.lanes.size(); ++i) {
          is_lane = on_lane(scene.lanes[i], g, dist);
        }
        const bool is_road = g.x >= scene.road_x_min && g.x <= scene.road_x_max && g.y >= 0.0 &&
                             g.y <= scene.road_length;
        if (is_lane) lane.set(c, r, true);
        if (is_road || is_lane) road.set(c, r, true);
      }
    }
  }

  if (dist.depth_scale != 1.0 || dist.depth_bias != 0.0) {
    for (float& d : depth.values_mut()) {
      if (d > 0.0f) {
        const double v = dist.depth_scale * static_cast<double>(d) + dist.depth_bias;
        d = static_cast<float>(std::max(v, 1e-3));
      }
    }
  }

  RenderedFrame frame{std::move(lane), std::move(road), std::move(vehicle), std::move(depth),
                      rasterize_occupancy(scene, dist, occupancy), vp};
  return frame;
}

bool point_in_box(const VehicleBox& box, const Vec3& p) {
  const Vec3 q = to_box_frame(box, p);
  return std::abs(q.x) <= box.size.x / 2 && std::abs(q.y) <= box.size.y / 2 &&
         std::abs(q.z) <= box.size.z / 2;
}

bool footprints_overlap(const VehicleBox& a, const VehicleBox& b, double gap) {
  auto corners = [gap](const VehicleBox& v) {
    const double hx = v.size.x / 2 + gap / 2, hy = v.size.y / 2 + gap / 2;
    const double c = std::cos(v.yaw), s = std::sin(v.yaw);
    std::array<Vec2, 4> out;
    const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
    for (int i = 0; i < 4; ++i) {
      const double lx = sx[i] * hx, ly = sy[i] * hy;
      out[i] = {v.center.x + c * lx - s * ly, v.center.y + s * lx + c * ly};
    }
    return out;
  };
  const auto ca = corners(a), cb = corners(b);
  auto separated_on = [&](const std::array<Vec2, 4>& poly) {
    for (int i = 0; i < 2; ++i) {
      const Vec2 edge = poly[i + 1] - poly[i];
      const Vec2 axis{-edge.y, edge.x};
      constexpr double big = std::numeric_limits<double>::infinity();
      double amin = big, amax = -big, bmin = big, bmax = -big;
      for (const auto& p : ca) {
        amin = std::min(amin, dot(p, axis));
        amax = std::max(amax, dot(p, axis));
      }
      for (const auto& p : cb) {
        bmin = std::min(bmin, dot(p, axis));
        bmax = std::max(bmax, dot(p, axis));
      }
      if (amax < bmin || bmax < amin) return true;
    }
    return false;
  };
  return !(separated_on(ca) || separated_on(cb));
}

}  // namespace geofb
