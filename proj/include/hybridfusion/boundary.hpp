#pragma once

#include <numbers>
#include <vector>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

struct BoundaryParams {
  /// Points must sit more than `h` meters above the ground plane.
  double h = 1.5;
  /// Neighborhood size for the angular-gap test.
  std::size_t k = 20;
  double gap_threshold = std::numbers::pi / 2.0;
  /// Quantile of z taken as ground height.
  double ground_percentile = 0.05;
  /// Projected points are thinned on a 2D grid of this edge before the
  /// boundary test; 0 disables thinning.
  double projection_leaf = 0.5;

  void validate() const;
};

/// z value at quantile `q` (lower order statistic at floor(q * (n - 1))).
double z_quantile(const PointCloud3& cloud, double q);

/// Keep points with z - z0 > h, z0 the ground quantile. Throws ParameterError
/// on an empty cloud and EmptyResultError when nothing survives.
PointCloud3 remove_ground(const PointCloud3& cloud, const BoundaryParams& params);

std::vector<Point2> project_xy(const PointCloud3& cloud);

/// One centroid per occupied 2D cell, ordered by cell key.
std::vector<Point2> downsample_2d(const std::vector<Point2>& points, double leaf);

/// Largest circular gap between direction angles from `center` to `neighbors`.
/// Coincident neighbors are ignored; returns 2*pi when fewer than two
/// directions remain.
double max_angular_gap(const Point2& center, const std::vector<Point2>& neighbors);

/// Points whose k-NN angular gap exceeds the threshold. Throws BoundaryError
/// with fewer than k + 1 points.
std::vector<Point2> boundary_points_2d(const std::vector<Point2>& points, const BoundaryParams& params);

/// remove_ground -> project_xy -> downsample_2d -> boundary_points_2d.
std::vector<Point2> extract_boundary(const PointCloud3& cloud, const BoundaryParams& params);

}  // namespace hybridfusion
