#pragma once

#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "hybridfusion/descriptor.hpp"
#include "hybridfusion/patch_grid.hpp"

namespace hybridfusion {

struct SelectionParams {
  /// Saliency threshold: a LiDAR patch needs strictly more points than this.
  std::size_t eta = 200;
  /// Annulus half-width as a fraction of the origin-to-centroid distance.
  double lambda = 0.3;
  /// Angular window around the origin-to-centroid ray, radians.
  double phi = std::numbers::pi / 3.0;
  double rho_min = 0.6;
  double neighbor_rho_min = 0.5;
  /// Neighbors need strictly more points than this to take part.
  std::size_t neighbor_min_points = 200;

  /// Throws ParameterError when a field is out of range.
  void validate() const;
};

struct Candidate {
  PatchId id;
  double rho = 0.0;
};

/// Visual candidates for one LiDAR patch, sorted by rho descending (ties by id).
struct CandidateSet {
  PatchId lidar_patch_id;
  std::vector<Candidate> candidates;

  bool empty() const { return candidates.empty(); }
  std::size_t size() const { return candidates.size(); }
};

/// Centered descriptors keyed by patch id.
using DescriptorCache = std::map<PatchId, CenteredVector>;

/// Patches holding strictly more than `eta` points, in id order.
std::vector<PatchId> select_salient(const PatchGrid& lidar_grid, std::size_t eta);

/// Visual patches with at least one point in the X-Y ring
/// [(1 - lambda) E, (1 + lambda) E] around `gnss_origin` whose centroid lies
/// within `phi` of the origin-to-LiDAR-centroid ray. E is the X-Y distance
/// from the origin to `lidar_centroid`; throws GeometryError when E == 0.
std::vector<PatchId> annulus_candidates(const PatchGrid& visual_grid, const Point3& gnss_origin,
                                        const Point3& lidar_centroid, double lambda, double phi);

/// Signed X-Y angle from the origin->reference ray to the origin->target ray, in (-pi, pi].
double ray_angle(const Point3& origin, const Point3& reference, const Point3& target);

/// Keep candidates whose correlation with the LiDAR descriptor is strictly
/// above `rho_min`. Zero-variance descriptors count as non-matches.
CandidateSet descriptor_filter(const CenteredVector& lidar_descriptor, const CandidateSet& candidates,
                               const DescriptorCache& visual_descriptors, double rho_min);

/// Average, over the LiDAR patch's qualifying neighbors, of each neighbor's
/// best correlation against any qualifying neighbor of the candidate. Returns
/// nullopt when either side has no qualifying neighbor.
std::optional<double> neighbor_similarity(const PatchId& lidar_id, const PatchId& visual_id,
                                          const PatchGrid& lidar_grid, const PatchGrid& visual_grid,
                                          const DescriptorCache& lidar_descriptors,
                                          const DescriptorCache& visual_descriptors,
                                          std::size_t neighbor_min_points);

/// Drop candidates whose neighbor_similarity is below `params.neighbor_rho_min`.
CandidateSet neighbor_filter(const PatchId& lidar_id, const CandidateSet& candidates,
                             const PatchGrid& lidar_grid, const PatchGrid& visual_grid,
                             const DescriptorCache& lidar_descriptors, const DescriptorCache& visual_descriptors,
                             const SelectionParams& params);

}  // namespace hybridfusion
