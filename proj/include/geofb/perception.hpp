#pragma once

// Vanishing-point recovery from lane masks (row-sampled centerlines, RANSAC
// line fits, least-squares intersection) and VP heatmap helpers.

#include <cstdint>
#include <vector>

#include "geofb/geometry.hpp"
#include "geofb/tensor.hpp"

namespace geofb {

struct CenterlineConfig {
  int row_stride = 5;
  int min_points = 5;
  // Use the widest horizontal run of the component in each sampled row rather
  // than its overall extent, so specks chained onto a marking through
  // neighbouring rows do not drag the midpoint.
  bool longest_run_only = true;
  // Rows whose run touches the left or right image border are skipped: the
  // border is not a marking edge, so the midpoint there is biased.
  bool skip_border_runs = true;
  // Rows within this many rows of a component's top or bottom end are
  // skipped when that end lies inside the image: there the marking's
  // cross-section is cut by an occluder or the far clip.
  int end_trim_rows = 2;
};

/// Per-lane centerline samples in pixel coordinates, rows strictly increasing.
struct CenterlineSet {
  std::vector<std::vector<Vec2>> lanes;
};

struct RansacConfig {
  int iters = 200;
  double inlier_thresh_px = 2.0;
  int min_inliers = 4;
  std::uint64_t seed = 0;
};

/// Line a*x + b*y + c = 0 with (a, b) unit length. Stored in double so the
/// normalization holds to 1e-9.
struct FittedLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  int inlier_count = 0;

  double distance(Vec2 p) const { return std::abs(a * p.x + b * p.y + c); }
  friend bool operator==(const FittedLine&, const FittedLine&) = default;
};

struct VPEstimate {
  Vec2 vp;              // normalized
  int num_lines = 0;
  double residual = 0;  // mean distance from the VP to the fitted lines, pixels
};

struct VPConfig {
  CenterlineConfig centerlines;
  RansacConfig ransac;
};

/// Gaussian VP heatmap, values in [0, 1], peak 1 at the VP pixel.
struct VPHeatmap {
  int h = 0;
  int w = 0;
  double sigma = 2.0;
  std::vector<float> values;  // row-major h x w

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * w + c]; }
};

CenterlineSet extract_centerlines(const BinaryMask& mask, const CenterlineConfig& cfg = {});

/// 8-connected component labels (0 = background, 1.. in raster order of each
/// component's first pixel). Returns the number of components.
int label_components(const BinaryMask& mask, std::vector<int>& labels);

FittedLine fit_line_ransac(const std::vector<Vec2>& points, const RansacConfig& cfg);

/// Total-least-squares line through `points` (at least 2, not all equal).
FittedLine fit_line_tls(const std::vector<Vec2>& points);

/// Least-squares concurrency point of `lines` in pixels, returned normalized
/// by (width, height). DegenerateError if the normal matrix has condition
/// number above 1e8.
Vec2 intersect_lines(const std::vector<FittedLine>& lines, int width, int height);

VPEstimate estimate_vp(const BinaryMask& mask, const VPConfig& cfg = {});

VPHeatmap make_gaussian_heatmap(Vec2 vp, int h, int w, double sigma = 2.0);
Vec2 heatmap_argmax(const VPHeatmap& heatmap);

}  // namespace geofb
