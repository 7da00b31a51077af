#include "geofb/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geofb/error.hpp"

namespace geofb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Wraps nlohmann access so that every schema failure surfaces as ParseError.
template <typename F>
auto parse_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }
json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json camera_json(const CameraModel& c) {
  return {{"fx", c.fx},
          {"fy", c.fy},
          {"cx", c.cx},
          {"cy", c.cy},
          {"width", c.width},
          {"height", c.height},
          {"camera_height", c.camera_height},
          {"pitch", c.pitch},
          {"yaw", c.yaw},
          {"max_depth", c.max_depth}};
}

CameraModel camera_from(const json& j) {
  CameraModel c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.camera_height = j.at("camera_height").get<double>();
  c.pitch = j.value("pitch", 0.0);
  c.yaw = j.value("yaw", 0.0);
  c.max_depth = j.value("max_depth", c.max_depth);
  return c;
}

json distortion_json(const DistortionParams& d) {
  return {{"vp_shift", json::array({d.vp_dx, d.vp_dy})},
          {"depth_scale", d.depth_scale},
          {"depth_bias", d.depth_bias},
          {"lane_warp_amp", d.lane_warp_amp},
          {"lane_warp_freq", d.lane_warp_freq},
          {"vehicle_jitter", json::array({d.jitter_dx, d.jitter_dy})}};
}

// Missing keys keep their identity value so that partial files are valid.
DistortionParams distortion_from(const json& j) {
  if (!j.is_object()) throw ParseError("distortion must be an object");
  DistortionParams d;
  if (j.contains("vp_shift")) {
    const Vec2 v = vec2_from(j.at("vp_shift"));
    d.vp_dx = v.x;
    d.vp_dy = v.y;
  }
  d.depth_scale = j.value("depth_scale", 1.0);
  d.depth_bias = j.value("depth_bias", 0.0);
  d.lane_warp_amp = j.value("lane_warp_amp", 0.0);
  d.lane_warp_freq = j.value("lane_warp_freq", 0.0);
  if (j.contains("vehicle_jitter")) {
    const Vec2 v = vec2_from(j.at("vehicle_jitter"));
    d.jitter_dx = v.x;
    d.jitter_dy = v.y;
  }
  return d;
}

json grid_json(const GridGeometry& g) {
  return {{"nx", g.nx},
          {"ny", g.ny},
          {"nz", g.nz},
          {"origin", json::array({g.origin[0], g.origin[1], g.origin[2]})},
          {"voxel_size", g.voxel_size}};
}

GridGeometry grid_from(const json& j) {
  GridGeometry g;
  g.nx = j.at("nx").get<int>();
  g.ny = j.at("ny").get<int>();
  g.nz = j.at("nz").get<int>();
  const Vec3 o = vec3_from(j.at("origin"));
  g.origin = {o.x, o.y, o.z};
  g.voxel_size = j.at("voxel_size").get<double>();
  g.validate();
  return g;
}

json parse_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), std::strerror(errno));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

std::string scene_to_json(const SceneDocument& doc) {
  const SceneSpec& s = doc.scene;
  json lanes = json::array();
  for (const Lane& l : s.lanes) {
    json pts = json::array();
    for (const Vec2& p : l.points) pts.push_back(vec2_json(p));
    lanes.push_back({{"points", pts}, {"width", l.width}});
  }
  json vehicles = json::array();
  for (const VehicleBox& v : s.vehicles) {
    vehicles.push_back({{"center", vec3_json(v.center)}, {"size", vec3_json(v.size)}, {"yaw", v.yaw}});
  }
  const json j = {{"seed", s.seed},
                  {"num_lanes", s.num_lanes},
                  {"lane_spacing_m", s.lane_spacing_m},
                  {"lane_width_m", s.lane_width_m},
                  {"lanes", lanes},
                  {"vehicles", vehicles},
                  {"road", {{"x_min", s.road_x_min}, {"x_max", s.road_x_max}, {"length", s.road_length}}},
                  {"camera", camera_json(doc.camera)},
                  {"distortion", distortion_json(doc.distortion)}};
  return j.dump(2) + "\n";
}

SceneDocument scene_from_json(const std::string& text) {
  const json j = parse_text(text, "scene");
  SceneDocument doc = parse_guard("scene", [&] {
    SceneDocument d;
    SceneSpec& s = d.scene;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.num_lanes = j.at("num_lanes").get<int>();
    s.lane_spacing_m = j.at("lane_spacing_m").get<double>();
    s.lane_width_m = j.at("lane_width_m").get<double>();
    for (const json& l : j.at("lanes")) {
      Lane lane;
      for (const json& p : l.at("points")) lane.points.push_back(vec2_from(p));
      lane.width = l.value("width", s.lane_width_m);
      s.lanes.push_back(std::move(lane));
    }
    for (const json& v : j.at("vehicles")) {
      s.vehicles.push_back({vec3_from(v.at("center")), vec3_from(v.at("size")), v.value("yaw", 0.0)});
    }
    const json& road = j.at("road");
    s.road_x_min = road.at("x_min").get<double>();
    s.road_x_max = road.at("x_max").get<double>();
    s.road_length = road.at("length").get<double>();
    if (j.contains("camera")) d.camera = camera_from(j.at("camera"));
    if (j.contains("distortion")) d.distortion = distortion_from(j.at("distortion"));
    return d;
  });
  doc.scene.validate();
  doc.camera.validate();
  doc.distortion.validate();
  return doc;
}

std::string distortion_to_json(const DistortionParams& d) { return distortion_json(d).dump(2) + "\n"; }

DistortionParams distortion_from_json(const std::string& text) {
  const json j = parse_text(text, "distortion");
  // Accept either a bare distortion object or a scene-style wrapper.
  DistortionParams d = parse_guard("distortion", [&] {
    return distortion_from(j.contains("distortion") ? j.at("distortion") : j);
  });
  d.validate();
  return d;
}

std::string weights_to_json(const RewardWeights& w) {
  const json j = {{"lambda_vp", w.lambda_vp}, {"lambda_lane", w.lambda_lane}, {"lambda_depth", w.lambda_depth}};
  return j.dump(2) + "\n";
}

RewardWeights weights_from_json(const std::string& text) {
  const json j = parse_text(text, "weights");
  RewardWeights w = parse_guard("weights", [&] {
    if (!j.is_object()) throw ParseError("weights must be an object");
    RewardWeights r;
    r.lambda_vp = j.value("lambda_vp", r.lambda_vp);
    r.lambda_lane = j.value("lambda_lane", r.lambda_lane);
    r.lambda_depth = j.value("lambda_depth", r.lambda_depth);
    return r;
  });
  w.validate();
  return w;
}

std::string manifest_to_json(const Manifest& m) {
  json frames = json::array();
  for (const FrameFiles& f : m.frames) {
    frames.push_back({{"lane_mask", f.lane_mask},
                      {"road_mask", f.road_mask},
                      {"vehicle_mask", f.vehicle_mask},
                      {"depth", f.depth},
                      {"occupancy", f.occupancy},
                      {"true_vp", vec2_json(f.true_vp)}});
  }
  const json j = {{"occupancy_grid", grid_json(m.occupancy_grid)}, {"frames", frames}};
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  const json j = parse_text(text, "manifest");
  return parse_guard("manifest", [&] {
    Manifest m;
    m.occupancy_grid = grid_from(j.at("occupancy_grid"));
    for (const json& f : j.at("frames")) {
      m.frames.push_back({f.at("lane_mask").get<std::string>(), f.at("road_mask").get<std::string>(),
                          f.at("vehicle_mask").get<std::string>(), f.at("depth").get<std::string>(),
                          f.at("occupancy").get<std::string>(), vec2_from(f.at("true_vp"))});
    }
    if (m.frames.empty()) throw EmptyInputError("manifest lists no frames");
    return m;
  });
}

FrameFiles write_frame(const RenderedFrame& frame, const fs::path& dir, const std::string& stem) {
  FrameFiles f;
  f.lane_mask = stem + "_lane.rlgt";
  f.road_mask = stem + "_road.rlgt";
  f.vehicle_mask = stem + "_vehicle.rlgt";
  f.depth = stem + "_depth.rlgt";
  f.occupancy = stem + "_occupancy.rlgt";
  f.true_vp = frame.true_vp;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), ec.message());
  write_tensor(frame.lane_mask.to_tensor(), dir / f.lane_mask);
  write_tensor(frame.road_mask.to_tensor(), dir / f.road_mask);
  write_tensor(frame.vehicle_mask.to_tensor(), dir / f.vehicle_mask);
  write_tensor(frame.depth.to_tensor(), dir / f.depth);
  write_tensor(frame.occupancy.to_tensor(), dir / f.occupancy);
  return f;
}

RenderedFrame load_frame(const Manifest& m, std::size_t index, const fs::path& manifest_dir) {
  if (index >= m.frames.size()) throw RangeError("frame index out of range");
  const FrameFiles& f = m.frames[index];
  RenderedFrame r;
  r.lane_mask = BinaryMask::from_tensor(read_tensor(manifest_dir / f.lane_mask));
  r.road_mask = BinaryMask::from_tensor(read_tensor(manifest_dir / f.road_mask));
  r.vehicle_mask = BinaryMask::from_tensor(read_tensor(manifest_dir / f.vehicle_mask));
  r.depth = DepthMap::from_tensor(read_tensor(manifest_dir / f.depth));
  r.occupancy = OccupancyGrid::from_tensor(read_tensor(manifest_dir / f.occupancy), m.occupancy_grid);
  r.true_vp = f.true_vp;
  if (!r.lane_mask.same_extent(r.road_mask) || !r.lane_mask.same_extent(r.vehicle_mask) ||
      r.depth.width() != r.lane_mask.width() || r.depth.height() != r.lane_mask.height()) {
    throw DimensionError("frame " + std::to_string(index) + ": channel extents differ");
  }
  return r;
}

std::string vp_estimate_json(const VPEstimate& est) {
  const json j = {{"vp", vec2_json(est.vp)}, {"residual_px", est.residual}, {"num_lines", est.num_lines}};
  return j.dump(2) + "\n";
}

std::string reward_json(const RewardBreakdown& b) {
  const json j = {{"r_vp", b.r_vp},       {"r_lane", b.r_lane}, {"r_depth", b.r_depth},
                  {"r_align", b.r_align}, {"r_iou", b.r_iou},   {"R_geo", b.R_geo},
                  {"R_occ", b.R_occ},     {"R", b.R},           {"floored", b.floored}};
  return j.dump(2) + "\n";
}

std::string report_json(const GeoScoreReport& r) {
  // NaN is not representable in JSON; failed fields become null.
  auto val = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json frames = json::array();
  for (const FrameScore& f : r.frames) {
    json row = {{"frame", f.frame},
                {"vp_error", val(f.vp_error)},
                {"lane_f1", val(f.lane_f1)},
                {"depth_rmse", val(f.depth_rmse)}};
    if (!f.ok()) row["error"] = f.error;
    frames.push_back(std::move(row));
  }
  const json j = {{"frames", frames},
                  {"mean", {{"vp_error", val(r.vp_error)}, {"lane_f1", val(r.lane_f1)}, {"depth_rmse", val(r.depth_rmse)}}},
                  {"frame_count", r.frame_count}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const OptimizationTrace& trace) {
  std::string out = "iter,t_prime,k,R,R_geo,R_occ,r_vp,r_lane,r_depth,r_align,r_iou,vp_error,lane_f1,depth_rmse";
  for (const char* n : DistortionParams::names()) {
    out += ',';
    out += n;
  }
  out += '\n';
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.iter) + ',' + std::to_string(r.window.t_prime) + ',' + std::to_string(r.window.k);
    for (double v : {r.reward.R, r.reward.R_geo, r.reward.R_occ, r.reward.r_vp, r.reward.r_lane, r.reward.r_depth,
                     r.reward.r_align, r.reward.r_iou, r.geoscores.vp_error, r.geoscores.lane_f1,
                     r.geoscores.depth_rmse}) {
      out += ',' + num(v);
    }
    for (double v : r.theta.to_array()) out += ',' + num(v);
    out += '\n';
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("missing column '" + name + "'");
}

CsvTable parse_numeric_csv(const std::string& text) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::istringstream in(text);
  std::string line;
  CsvTable t;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " cells, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        throw ParseError("line " + std::to_string(lineno) + ": non-numeric cell '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError("CSV has no header");
  return t;
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::string out = "k,mean_R,var_R,lane_floor_fraction,vp_floor_fraction\n";
  for (const ProbeRow& r : rows) {
    out += std::to_string(r.k) + ',' + num(r.mean_R) + ',' + num(r.var_R) + ',' + num(r.lane_floor_fraction) + ',' +
           num(r.vp_floor_fraction) + '\n';
  }
  return out;
}

}  // namespace geofb
