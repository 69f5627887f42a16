#include "hybridfusion/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

double safe_pearson(const CenteredVector& a, const CenteredVector& b) {
  try {
    return pearson(a, b);
  } catch (const SimilarityError&) {
    return -1.0;
  }
}

const CenteredVector& cached(const DescriptorCache& cache, const PatchId& id) {
  const auto it = cache.find(id);
  if (it == cache.end()) {
    throw LookupError("no cached descriptor for patch (" + std::to_string(id.row) + ", " +
                      std::to_string(id.col) + ")");
  }
  return it->second;
}

std::vector<PatchId> qualifying_neighbors(const PatchGrid& grid, const PatchId& id, std::size_t min_points) {
  std::vector<PatchId> out;
  for (const Patch* n : neighbors(grid, id)) {
    if (n->size() > min_points) out.push_back(n->id);
  }
  return out;
}

void sort_candidates(std::vector<Candidate>& c) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    return a.rho > b.rho || (a.rho == b.rho && a.id < b.id);
  });
}

}  // namespace

void SelectionParams::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ParameterError("lambda must lie in (0, 1)");
  if (!(phi > 0.0 && phi <= std::numbers::pi)) throw ParameterError("phi must lie in (0, pi]");
  if (!(rho_min >= -1.0 && rho_min <= 1.0)) throw ParameterError("rho_min must lie in [-1, 1]");
  if (!(neighbor_rho_min >= -1.0 && neighbor_rho_min <= 1.0)) {
    throw ParameterError("neighbor_rho_min must lie in [-1, 1]");
  }
}

std::vector<PatchId> select_salient(const PatchGrid& lidar_grid, std::size_t eta) {
  std::vector<PatchId> out;
  for (const auto& [id, patch] : lidar_grid.patches) {
    if (patch.size() > eta) out.push_back(id);
  }
  return out;
}

double ray_angle(const Point3& origin, const Point3& reference, const Point3& target) {
  const Point2 a = (reference - origin).head<2>();
  const Point2 b = (target - origin).head<2>();
  const double cross = a.x() * b.y() - a.y() * b.x();
  return std::atan2(cross, a.dot(b));
}

std::vector<PatchId> annulus_candidates(const PatchGrid& visual_grid, const Point3& gnss_origin,
                                        const Point3& lidar_centroid, double lambda, double phi) {
  const Point2 o = gnss_origin.head<2>();
  const double e = (lidar_centroid.head<2>() - o).norm();
  if (!(e > 0.0)) throw GeometryError("annulus_candidates: LiDAR centroid coincides with the GNSS origin");
  const double outer = (1.0 + lambda) * e;
  const double inner = (1.0 - lambda) * e;
  const double outer2 = outer * outer;
  const double inner2 = inner * inner;

  std::vector<PatchId> out;
  for (const auto& [id, patch] : visual_grid.patches) {
    if ((patch.centroid.head<2>() - o).squaredNorm() == 0.0) continue;
    if (std::abs(ray_angle(gnss_origin, lidar_centroid, patch.centroid)) > phi) continue;
    const bool in_ring = std::any_of(patch.points.points.begin(), patch.points.points.end(), [&](const Point3& p) {
      const double d2 = (p.head<2>() - o).squaredNorm();
      return d2 >= inner2 && d2 <= outer2;
    });
    if (in_ring) out.push_back(id);
  }
  return out;
}

CandidateSet descriptor_filter(const CenteredVector& lidar_descriptor, const CandidateSet& candidates,
                               const DescriptorCache& visual_descriptors, double rho_min) {
  CandidateSet out;
  out.lidar_patch_id = candidates.lidar_patch_id;
  for (const Candidate& c : candidates.candidates) {
    const double rho = safe_pearson(lidar_descriptor, cached(visual_descriptors, c.id));
    if (rho > rho_min) out.candidates.push_back({c.id, rho});
  }
  sort_candidates(out.candidates);
  return out;
}

std::optional<double> neighbor_similarity(const PatchId& lidar_id, const PatchId& visual_id,
                                          const PatchGrid& lidar_grid, const PatchGrid& visual_grid,
                                          const DescriptorCache& lidar_descriptors,
                                          const DescriptorCache& visual_descriptors,
                                          std::size_t neighbor_min_points) {
  const auto lidar_nbrs = qualifying_neighbors(lidar_grid, lidar_id, neighbor_min_points);
  const auto visual_nbrs = qualifying_neighbors(visual_grid, visual_id, neighbor_min_points);
  if (lidar_nbrs.empty() || visual_nbrs.empty()) return std::nullopt;

  double total = 0.0;
  for (const PatchId& ln : lidar_nbrs) {
    const CenteredVector& ld = cached(lidar_descriptors, ln);
    double best = -1.0;
    for (const PatchId& vn : visual_nbrs) best = std::max(best, safe_pearson(ld, cached(visual_descriptors, vn)));
    total += best;
  }
  return total / static_cast<double>(lidar_nbrs.size());
}

CandidateSet neighbor_filter(const PatchId& lidar_id, const CandidateSet& candidates,
                             const PatchGrid& lidar_grid, const PatchGrid& visual_grid,
                             const DescriptorCache& lidar_descriptors, const DescriptorCache& visual_descriptors,
                             const SelectionParams& params) {
  CandidateSet out;
  out.lidar_patch_id = candidates.lidar_patch_id;
  for (const Candidate& c : candidates.candidates) {
    const auto sim = neighbor_similarity(lidar_id, c.id, lidar_grid, visual_grid, lidar_descriptors,
                                         visual_descriptors, params.neighbor_min_points);
    if (!sim || *sim >= params.neighbor_rho_min) out.candidates.push_back(c);
  }
  return out;
}

}  // namespace hybridfusion
