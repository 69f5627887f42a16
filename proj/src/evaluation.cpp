#include "hybridfusion/evaluation.hpp"

#include <cmath>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/spatial_index.hpp"

namespace hybridfusion {

OctreeWrap::OctreeWrap(const PointCloud3& cloud, double resolution) : resolution_(resolution) {
  if (!(resolution > 0.0)) throw ParameterError("octree: resolution must be positive");
  if (cloud.empty()) throw MetricError("octree: empty cloud");

  const Eigen::AlignedBox3d box = bounds(cloud);
  root_min_ = box.min();
  const double cells = std::floor(box.sizes().maxCoeff() / resolution) + 1.0;
  while (static_cast<double>(std::int64_t{1} << depth_) < cells) {
    if (++depth_ > 30) throw ParameterError("octree: resolution too fine for the cloud extent");
  }

  nodes_.push_back({});
  nodes_.back().fill(-1);
  for (const auto& p : cloud.points) {
    std::array<std::int64_t, 3> key{};
    for (int i = 0; i < 3; ++i) key[i] = static_cast<std::int64_t>(std::floor((p[i] - root_min_[i]) / resolution));
    std::int32_t node = 0;
    for (int level = depth_ - 1; level >= 0; --level) {
      const int child = static_cast<int>(((key[0] >> level) & 1) | (((key[1] >> level) & 1) << 1) |
                                         (((key[2] >> level) & 1) << 2));
      if (nodes_[node][child] < 0) {
        nodes_[node][child] = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({});
        nodes_.back().fill(-1);
        if (level == 0) ++leaf_count_;
      }
      node = nodes_[node][child];
    }
  }
  if (depth_ == 0) leaf_count_ = 1;
}

double octree_volume(const PointCloud3& cloud, double resolution) {
  return OctreeWrap(cloud, resolution).volume();
}

double supplement_degree_from_volumes(double volume_fused, double volume_reference) {
  if (!(volume_reference > 0.0)) throw MetricError("supplement_degree: reference volume must be positive");
  return (volume_fused - volume_reference) / volume_reference;
}

double supplement_degree(const PointCloud3& fused, const PointCloud3& reference, double resolution) {
  if (reference.empty()) throw MetricError("supplement_degree: empty reference cloud");
  return supplement_degree_from_volumes(octree_volume(fused, resolution), octree_volume(reference, resolution));
}

double boundary_accuracy(const PointCloud3& registered, const PointCloud3& reference, const BoundaryParams& params) {
  if (registered.empty() || reference.empty()) throw MetricError("boundary_accuracy: empty cloud");
  const std::vector<Point2> source = extract_boundary(registered, params);
  const std::vector<Point2> target = extract_boundary(reference, params);
  return avg_nearest_distance(source, SpatialIndex2(target));
}

EvaluationReport evaluate(const PointCloud3& fused, const PointCloud3& reference, const PointCloud3& registered,
                          double resolution, const BoundaryParams& params) {
  EvaluationReport report;
  report.resolution = resolution;
  report.volume_reference = octree_volume(reference, resolution);
  report.volume_fused = octree_volume(fused, resolution);
  report.supplement_degree = supplement_degree_from_volumes(report.volume_fused, report.volume_reference);
  report.accuracy = boundary_accuracy(registered, reference, params);
  return report;
}

}  // namespace hybridfusion
