#include "hybridfusion/spatial_index.hpp"

#include <cmath>

namespace hybridfusion {

namespace {

template <typename Vec, int Dim>
double mean_nearest(const std::vector<Vec>& source, const KdTree<Dim>& index) {
  if (source.empty() || index.empty()) throw MetricError("avg_nearest_distance: empty point set");
  double sum = 0.0;
  for (const auto& p : source) sum += std::sqrt(index.nearest(p).squared_distance);
  return sum / static_cast<double>(source.size());
}

}  // namespace

double avg_nearest_distance(const PointCloud3& source, const SpatialIndex& target_index) {
  return mean_nearest(source.points, target_index);
}

double avg_nearest_distance(const std::vector<Point2>& source, const SpatialIndex2& target_index) {
  return mean_nearest(source, target_index);
}

}  // namespace hybridfusion
