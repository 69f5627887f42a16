#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hybridfusion/boundary.hpp"
#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

/// Octree over a cloud whose leaves are cubes of edge `resolution`.
///
/// The root is a power-of-two multiple of the resolution anchored at the
/// cloud's minimum corner; a point lands in leaf floor((p - min) / resolution).
class OctreeWrap {
 public:
  OctreeWrap(const PointCloud3& cloud, double resolution);

  double resolution() const { return resolution_; }
  int depth() const { return depth_; }
  const Point3& root_min() const { return root_min_; }
  double root_edge() const { return resolution_ * static_cast<double>(std::int64_t{1} << depth_); }
  std::size_t occupied_leaf_count() const { return leaf_count_; }
  double volume() const {
    return static_cast<double>(leaf_count_) * resolution_ * resolution_ * resolution_;
  }

 private:
  double resolution_;
  int depth_ = 0;
  Point3 root_min_;
  std::vector<std::array<std::int32_t, 8>> nodes_;
  std::size_t leaf_count_ = 0;
};

/// Occupied leaf count times resolution^3. Throws MetricError on an empty cloud
/// and ParameterError when resolution <= 0.
double octree_volume(const PointCloud3& cloud, double resolution);

/// (V_O - V_G) / V_G.
double supplement_degree_from_volumes(double volume_fused, double volume_reference);
double supplement_degree(const PointCloud3& fused, const PointCloud3& reference, double resolution);

/// Mean nearest distance from the registered cloud's 2D boundary points to the
/// reference cloud's boundary points.
double boundary_accuracy(const PointCloud3& registered, const PointCloud3& reference, const BoundaryParams& params);

struct EvaluationReport {
  double resolution = 0.0;
  double volume_reference = 0.0;
  double volume_fused = 0.0;
  double supplement_degree = 0.0;
  double accuracy = 0.0;
  std::optional<double> baseline_accuracy;
};

EvaluationReport evaluate(const PointCloud3& fused, const PointCloud3& reference, const PointCloud3& registered,
                          double resolution, const BoundaryParams& params);

}  // namespace hybridfusion
