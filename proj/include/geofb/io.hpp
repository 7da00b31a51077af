#pragma once

// JSON documents (scene, distortion, weights, manifests, results) and the
// optimization trace CSV.
//
// Manifest paths are stored relative to the manifest's directory.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geofb/geoscores.hpp"
#include "geofb/perception.hpp"
#include "geofb/rewards.hpp"
#include "geofb/scene.hpp"
#include "geofb/windowed_rl.hpp"

namespace geofb {

std::string read_text_file(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// A scene file: world content plus the camera and distortion it is rendered
/// with.
struct SceneDocument {
  SceneSpec scene;
  CameraModel camera;
  DistortionParams distortion;
  friend bool operator==(const SceneDocument&, const SceneDocument&) = default;
};

std::string scene_to_json(const SceneDocument& doc);
SceneDocument scene_from_json(const std::string& text);

std::string distortion_to_json(const DistortionParams& d);
DistortionParams distortion_from_json(const std::string& text);

std::string weights_to_json(const RewardWeights& w);
RewardWeights weights_from_json(const std::string& text);

struct FrameFiles {
  std::string lane_mask;
  std::string road_mask;
  std::string vehicle_mask;
  std::string depth;
  std::string occupancy;
  Vec2 true_vp;
  friend bool operator==(const FrameFiles&, const FrameFiles&) = default;
};

struct Manifest {
  GridGeometry occupancy_grid;
  std::vector<FrameFiles> frames;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

/// Writes each channel of `frame` as <dir>/<stem>_<channel>.rlgt and returns
/// the entry with paths relative to `dir`.
FrameFiles write_frame(const RenderedFrame& frame, const std::filesystem::path& dir,
                       const std::string& stem);
/// Loads frame `index` of a manifest stored in `manifest_dir`.
RenderedFrame load_frame(const Manifest& m, std::size_t index,
                         const std::filesystem::path& manifest_dir);

std::string vp_estimate_json(const VPEstimate& est);
std::string reward_json(const RewardBreakdown& b);
std::string report_json(const GeoScoreReport& r);

/// Header: iter,t_prime,k,R,R_geo,R_occ,r_vp,r_lane,r_depth,r_align,r_iou,
/// vp_error,lane_f1,depth_rmse, then the DistortionParams names.
std::string trace_csv(const OptimizationTrace& trace);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of `name` in the header; ParseError if absent.
  std::size_t column(const std::string& name) const;
};

/// Numeric CSV with one header line. ParseError on ragged rows, non-numeric
/// cells, or a missing header.
CsvTable parse_numeric_csv(const std::string& text);

std::string probe_csv(const std::vector<ProbeRow>& rows);

}  // namespace geofb
