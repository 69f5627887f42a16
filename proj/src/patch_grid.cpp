#include "hybridfusion/patch_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

const Patch& PatchGrid::at(const PatchId& id) const {
  const auto it = patches.find(id);
  if (it == patches.end()) {
    throw LookupError("no patch at (" + std::to_string(id.row) + ", " + std::to_string(id.col) + ")");
  }
  return it->second;
}

std::size_t PatchGrid::total_points() const {
  std::size_t n = 0;
  for (const auto& [id, patch] : patches) n += patch.size();
  return n;
}

std::vector<PatchId> PatchGrid::ids() const {
  std::vector<PatchId> out;
  out.reserve(patches.size());
  for (const auto& [id, patch] : patches) out.push_back(id);
  return out;
}

PatchGrid partition(const PointCloud3& cloud, double step, const Point2& origin) {
  if (cloud.empty()) throw ParameterError("partition: empty cloud");
  if (!(step > 0.0)) throw ParameterError("partition: step must be positive");

  PatchGrid grid;
  grid.step = step;
  grid.origin = origin;
  for (const auto& p : cloud.points) {
    const PatchId id{static_cast<int>(std::floor((p.y() - origin.y()) / step)),
                     static_cast<int>(std::floor((p.x() - origin.x()) / step))};
    Patch& patch = grid.patches[id];
    patch.id = id;
    patch.points.points.push_back(p);
  }
  for (auto& [id, patch] : grid.patches) patch.centroid = centroid(patch.points);
  return grid;
}

PatchGrid partition(const PointCloud3& cloud, double step) {
  if (cloud.empty()) throw ParameterError("partition: empty cloud");
  const Eigen::AlignedBox3d box = bounds(cloud);
  return partition(cloud, step, box.min().head<2>());
}

double default_grid_step(const PointCloud3& cloud, double ratio) {
  const Eigen::AlignedBox3d box = bounds(cloud);
  const Eigen::Vector3d extent = box.sizes();
  const double step = std::max(extent.x(), extent.y()) * ratio;
  if (!(step > 0.0)) throw ParameterError("default_grid_step: cloud has no X-Y extent");
  return step;
}

std::vector<const Patch*> neighbors(const PatchGrid& grid, const PatchId& id) {
  grid.at(id);
  std::vector<const Patch*> out;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const auto it = grid.patches.find(PatchId{id.row + dr, id.col + dc});
      if (it != grid.patches.end()) out.push_back(&it->second);
    }
  }
  return out;
}

PointCloud3 splice_with_neighbors(const PatchGrid& grid, const PatchId& id, std::size_t min_neighbor_points) {
  const Patch& center = grid.at(id);
  PointCloud3 out = center.points;
  for (const Patch* n : neighbors(grid, id)) {
    if (n->size() > min_neighbor_points) {
      out.points.insert(out.points.end(), n->points.points.begin(), n->points.points.end());
    }
  }
  return out;
}

}  // namespace hybridfusion
