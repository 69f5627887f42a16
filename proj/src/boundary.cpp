#include "hybridfusion/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/spatial_index.hpp"

namespace hybridfusion {

void BoundaryParams::validate() const {
  if (!(h >= 0.0)) throw ParameterError("boundary: h must be non-negative");
  if (k < 3) throw ParameterError("boundary: k must be at least 3");
  if (!(gap_threshold > 0.0 && gap_threshold <= 2.0 * std::numbers::pi)) {
    throw ParameterError("boundary: gap_threshold must lie in (0, 2*pi]");
  }
  if (!(ground_percentile >= 0.0 && ground_percentile <= 1.0)) {
    throw ParameterError("boundary: ground_percentile must lie in [0, 1]");
  }
  if (!(projection_leaf >= 0.0)) throw ParameterError("boundary: projection_leaf must be non-negative");
}

double z_quantile(const PointCloud3& cloud, double q) {
  if (cloud.empty()) throw ParameterError("z_quantile: empty cloud");
  std::vector<double> z;
  z.reserve(cloud.size());
  for (const auto& p : cloud.points) z.push_back(p.z());
  const auto rank = static_cast<std::size_t>(std::floor(std::clamp(q, 0.0, 1.0) * static_cast<double>(z.size() - 1)));
  std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(rank), z.end());
  return z[rank];
}

PointCloud3 remove_ground(const PointCloud3& cloud, const BoundaryParams& params) {
  if (cloud.empty()) throw ParameterError("remove_ground: empty cloud");
  const double ground = z_quantile(cloud, params.ground_percentile);
  PointCloud3 out;
  out.origin = cloud.origin;
  for (const auto& p : cloud.points) {
    if (p.z() - ground > params.h) out.points.push_back(p);
  }
  if (out.empty()) throw EmptyResultError("remove_ground: no point above the height threshold");
  return out;
}

std::vector<Point2> project_xy(const PointCloud3& cloud) {
  std::vector<Point2> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) out.emplace_back(p.x(), p.y());
  return out;
}

std::vector<Point2> downsample_2d(const std::vector<Point2>& points, double leaf) {
  if (!(leaf > 0.0)) throw ParameterError("downsample_2d: leaf must be positive");
  using Key = std::pair<std::int64_t, std::int64_t>;
  std::vector<std::pair<Key, std::size_t>> binned;
  binned.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    binned.push_back({{static_cast<std::int64_t>(std::floor(points[i].x() / leaf)),
                       static_cast<std::int64_t>(std::floor(points[i].y() / leaf))},
                      i});
  }
  std::stable_sort(binned.begin(), binned.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Point2> out;
  std::size_t begin = 0;
  while (begin < binned.size()) {
    std::size_t end = begin;
    Point2 sum = Point2::Zero();
    while (end < binned.size() && binned[end].first == binned[begin].first) sum += points[binned[end++].second];
    out.emplace_back(sum / static_cast<double>(end - begin));
    begin = end;
  }
  return out;
}

double max_angular_gap(const Point2& center, const std::vector<Point2>& neighbors) {
  std::vector<double> angles;
  angles.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    const Point2 d = n - center;
    if (d.squaredNorm() == 0.0) continue;
    angles.push_back(std::atan2(d.y(), d.x()));
  }
  if (angles.size() < 2) return 2.0 * std::numbers::pi;
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap;
}

std::vector<Point2> boundary_points_2d(const std::vector<Point2>& points, const BoundaryParams& params) {
  if (points.size() < params.k + 1) throw BoundaryError("boundary_points_2d: fewer than k + 1 points");
  const SpatialIndex2 index(points);
  std::vector<Point2> out;
  std::vector<Point2> nbrs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    nbrs.clear();
    for (const Neighbor& n : index.k_nearest(points[i], params.k + 1)) {
      if (n.index != i) nbrs.push_back(points[n.index]);
    }
    if (nbrs.size() > params.k) nbrs.resize(params.k);
    if (max_angular_gap(points[i], nbrs) > params.gap_threshold) out.push_back(points[i]);
  }
  return out;
}

std::vector<Point2> extract_boundary(const PointCloud3& cloud, const BoundaryParams& params) {
  std::vector<Point2> projected = project_xy(remove_ground(cloud, params));
  if (params.projection_leaf > 0.0) projected = downsample_2d(projected, params.projection_leaf);
  return boundary_points_2d(projected, params);
}

}  // namespace hybridfusion
