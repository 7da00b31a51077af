#include "geofb/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "geofb/error.hpp"

namespace geofb {

int label_components(const BinaryMask& mask, std::vector<int>& labels) {
  const int w = mask.width();
  const int h = mask.height();
  labels.assign(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;
  int next = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      if (!mask.at(c, r) || labels[idx] != 0) continue;
      ++next;
      labels[idx] = next;
      stack.assign(1, static_cast<int>(idx));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cr = cur / w;
        const int cc = cur % w;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = cr + dr;
            const int nc = cc + dc;
            if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
            const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
            if (!mask.at(nc, nr) || labels[nidx] != 0) continue;
            labels[nidx] = next;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
    }
  }
  return next;
}

CenterlineSet extract_centerlines(const BinaryMask& mask, const CenterlineConfig& cfg) {
  if (cfg.row_stride < 1) throw InvalidArgumentError("row_stride must be >= 1");
  if (cfg.min_points < 1) throw InvalidArgumentError("min_points must be >= 1");
  if (cfg.end_trim_rows < 0) throw InvalidArgumentError("end_trim_rows must be >= 0");
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels;
  const int n = label_components(mask, labels);

  std::vector<int> top(static_cast<std::size_t>(n) + 1, h);
  std::vector<int> bottom(static_cast<std::size_t>(n) + 1, -1);
  for (int r = 0; r < h; ++r) {
    const int* row = labels.data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      const int l = row[c];
      if (l == 0) continue;
      top[l] = std::min(top[l], r);
      bottom[l] = std::max(bottom[l], r);
    }
  }

  std::vector<std::vector<Vec2>> per_label(static_cast<std::size_t>(n));
  std::vector<int> left(static_cast<std::size_t>(n) + 1);
  std::vector<int> right(static_cast<std::size_t>(n) + 1);
  for (int r = 0; r < h; r += cfg.row_stride) {
    std::fill(left.begin(), left.end(), -1);
    std::fill(right.begin(), right.end(), -1);
    const int* row = labels.data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w;) {
      const int l = row[c];
      if (l == 0) {
        ++c;
        continue;
      }
      int e = c;
      while (e + 1 < w && row[e + 1] == l) ++e;
      if (left[l] < 0) {
        left[l] = c;
        right[l] = e;
      } else if (!cfg.longest_run_only) {
        right[l] = e;
      } else if (e - c > right[l] - left[l]) {
        left[l] = c;
        right[l] = e;
      }
      c = e + 1;
    }
    for (int l = 1; l <= n; ++l) {
      if (left[l] < 0) continue;
      if (cfg.skip_border_runs && (left[l] == 0 || right[l] == w - 1)) continue;
      // A component end on the top or bottom image border is a full
      // cross-section, so only interior ends are trimmed.
      if (top[l] > 0 && r < top[l] + cfg.end_trim_rows) continue;
      if (bottom[l] < h - 1 && r > bottom[l] - cfg.end_trim_rows) continue;
      per_label[l - 1].push_back({0.5 * (left[l] + right[l]), static_cast<double>(r)});
    }
  }

  CenterlineSet out;
  for (auto& pts : per_label) {
    if (static_cast<int>(pts.size()) >= cfg.min_points) out.lanes.push_back(std::move(pts));
  }
  if (out.lanes.empty()) throw NoLanesError("no lane component with enough sampled rows");
  return out;
}

namespace {

FittedLine canonical(double a, double b, double c, int inliers) {
  const double n = std::hypot(a, b);
  a /= n;
  b /= n;
  c /= n;
  if (a < 0.0 || (a == 0.0 && b < 0.0)) {
    a = -a;
    b = -b;
    c = -c;
  }
  return {a, b, c, inliers};
}

}  // namespace

FittedLine fit_line_tls(const std::vector<Vec2>& points) {
  if (points.size() < 2) throw InvalidArgumentError("line fit needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx + syy == 0.0) throw DegenerateError("line fit on coincident points");
  // Principal direction angle; the normal is perpendicular to it.
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const double a = -std::sin(theta);
  const double b = std::cos(theta);
  return canonical(a, b, -(a * mx + b * my), static_cast<int>(points.size()));
}

FittedLine fit_line_ransac(const std::vector<Vec2>& points, const RansacConfig& cfg) {
  const std::size_t n = points.size();
  if (n < 2) throw InvalidArgumentError("RANSAC needs at least 2 points");
  if (cfg.iters < 1) throw InvalidArgumentError("RANSAC iters must be >= 1");
  if (!(cfg.inlier_thresh_px > 0.0)) throw InvalidArgumentError("inlier threshold must be > 0");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint8_t> best_inliers;
  std::vector<std::uint8_t> inliers(n);
  int best_count = 0;
  for (int it = 0; it < cfg.iters; ++it) {
    const std::size_t i = static_cast<std::size_t>(rng() % n);
    std::size_t j = static_cast<std::size_t>(rng() % (n - 1));
    if (j >= i) ++j;
    const Vec2 d = points[j] - points[i];
    const double len = norm(d);
    if (len == 0.0) continue;
    const double a = -d.y / len;
    const double b = d.x / len;
    const double c = -(a * points[i].x + b * points[i].y);
    int count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool in = std::abs(a * points[k].x + b * points[k].y + c) <= cfg.inlier_thresh_px;
      inliers[k] = in ? 1 : 0;
      count += in ? 1 : 0;
    }
    if (count > best_count) {
      best_count = count;
      best_inliers = inliers;
    }
  }
  if (best_count < cfg.min_inliers || best_count < 2) {
    throw FitError("RANSAC found " + std::to_string(best_count) + " inliers, need " +
                   std::to_string(cfg.min_inliers));
  }
  std::vector<Vec2> subset;
  subset.reserve(static_cast<std::size_t>(best_count));
  for (std::size_t k = 0; k < n; ++k) {
    if (best_inliers[k]) subset.push_back(points[k]);
  }
  return fit_line_tls(subset);
}

Vec2 intersect_lines(const std::vector<FittedLine>& lines, int width, int height) {
  if (lines.size() < 2) throw DegenerateError("intersection needs at least 2 lines");
  if (width <= 0 || height <= 0) throw InvalidArgumentError("image extents must be positive");
  double a11 = 0.0, a12 = 0.0, a22 = 0.0, r1 = 0.0, r2 = 0.0;
  for (const auto& l : lines) {
    a11 += l.a * l.a;
    a12 += l.a * l.b;
    a22 += l.b * l.b;
    r1 -= l.a * l.c;
    r2 -= l.b * l.c;
  }
  const double tr = a11 + a22;
  const double det = a11 * a22 - a12 * a12;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmax = 0.5 * tr + disc;
  const double lmin = det / lmax;  // more accurate than 0.5 * tr - disc
  if (!(lmin > 0.0) || lmax / lmin > 1e8) {
    throw DegenerateError("lines are (nearly) parallel");
  }
  const double x = (a22 * r1 - a12 * r2) / det;
  const double y = (a11 * r2 - a12 * r1) / det;
  return {x / width, y / height};
}

VPEstimate estimate_vp(const BinaryMask& mask, const VPConfig& cfg) {
  const CenterlineSet set = extract_centerlines(mask, cfg.centerlines);
  std::vector<FittedLine> lines;
  for (std::size_t i = 0; i < set.lanes.size(); ++i) {
    RansacConfig rc = cfg.ransac;
    rc.seed = cfg.ransac.seed + i;
    try {
      lines.push_back(fit_line_ransac(set.lanes[i], rc));
    } catch (const FitError&) {
    } catch (const DegenerateError&) {
    }
  }
  if (lines.empty()) throw FitError("no lane produced a line fit");
  const Vec2 vp = intersect_lines(lines, mask.width(), mask.height());
  const Vec2 px{vp.x * mask.width(), vp.y * mask.height()};
  double res = 0.0;
  for (const auto& l : lines) res += l.distance(px);
  return {vp, static_cast<int>(lines.size()), res / static_cast<double>(lines.size())};
}

VPHeatmap make_gaussian_heatmap(Vec2 vp, int h, int w, double sigma) {
  if (h <= 0 || w <= 0) throw InvalidArgumentError("heatmap extents must be positive");
  if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be > 0");
  if (!(vp.x >= 0.0 && vp.x <= 1.0 && vp.y >= 0.0 && vp.y <= 1.0)) {
    throw InvalidArgumentError("vp must lie in [0,1]^2");
  }
  // Center snapped to the nearest pixel so the peak value is exactly 1.
  const double xc = std::clamp(std::round(vp.x * w), 0.0, static_cast<double>(w - 1));
  const double yc = std::clamp(std::round(vp.y * h), 0.0, static_cast<double>(h - 1));
  VPHeatmap out{h, w, sigma, std::vector<float>(static_cast<std::size_t>(h) * w)};
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dx = c - xc;
      const double dy = r - yc;
      out.values[static_cast<std::size_t>(r) * w + c] =
          static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
    }
  }
  return out;
}

Vec2 heatmap_argmax(const VPHeatmap& hm) {
  if (hm.h <= 0 || hm.w <= 0 ||
      hm.values.size() != static_cast<std::size_t>(hm.h) * static_cast<std::size_t>(hm.w)) {
    throw DimensionError("heatmap extents do not match its values");
  }
  int br = 0, bc = 0;
  float best = hm.values[0];
  for (int r = 0; r < hm.h; ++r) {
    for (int c = 0; c < hm.w; ++c) {
      if (hm.at(r, c) > best) {
        best = hm.at(r, c);
        br = r;
        bc = c;
      }
    }
  }
  const int r0 = std::max(0, br - 1), r1 = std::min(hm.h - 1, br + 1);
  const int c0 = std::max(0, bc - 1), c1 = std::min(hm.w - 1, bc + 1);
  float lo = std::numeric_limits<float>::infinity();
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) lo = std::min(lo, hm.at(r, c));
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double wgt = static_cast<double>(hm.at(r, c)) - lo;
      sw += wgt;
      sx += wgt * c;
      sy += wgt * r;
    }
  }
  double x = bc, y = br;
  if (sw > 0.0) {
    x = sx / sw;
    y = sy / sw;
  }
  return {x / hm.w, y / hm.h};
}

}  // namespace geofb
