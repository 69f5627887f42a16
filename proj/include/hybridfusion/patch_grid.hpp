#pragma once

#include <compare>
#include <map>
#include <vector>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

/// Grid coordinate of a patch. `col` indexes X, `row` indexes Y.
struct PatchId {
  int row = 0;
  int col = 0;

  auto operator<=>(const PatchId&) const = default;
};

struct Patch {
  PatchId id;
  PointCloud3 points;
  Point3 centroid = Point3::Zero();

  std::size_t size() const { return points.size(); }
};

/// X-Y partition of a cloud into square cells of edge `step`.
struct PatchGrid {
  double step = 0.0;
  Point2 origin = Point2::Zero();
  std::map<PatchId, Patch> patches;

  bool contains(const PatchId& id) const { return patches.count(id) != 0; }
  /// Throws LookupError when absent.
  const Patch& at(const PatchId& id) const;
  std::size_t total_points() const;
  std::vector<PatchId> ids() const;
};

/// Bin every point by floor((xy - origin) / step). Z is ignored.
/// Throws ParameterError for an empty cloud or step <= 0.
PatchGrid partition(const PointCloud3& cloud, double step, const Point2& origin);
/// Same, with origin at the component-wise minimum of the cloud's X-Y.
PatchGrid partition(const PointCloud3& cloud, double step);

/// Default step: max(extent_x, extent_y) * ratio.
double default_grid_step(const PointCloud3& cloud, double ratio = 0.1);

/// Occupied cells among the 8 surrounding `id`, in id order.
std::vector<const Patch*> neighbors(const PatchGrid& grid, const PatchId& id);

/// The patch's points followed by the points of each neighbor holding more
/// than `min_neighbor_points` points.
PointCloud3 splice_with_neighbors(const PatchGrid& grid, const PatchId& id, std::size_t min_neighbor_points);

}  // namespace hybridfusion
