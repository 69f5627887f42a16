#pragma once

#include <numbers>
#include <vector>

#include "hybridfusion/cloud.hpp"
#include "hybridfusion/patch_grid.hpp"

namespace hybridfusion {

/// Pose estimated for one salient LiDAR patch.
struct PatchTransform {
  PatchId lidar_patch_id;
  RigidTransform3 transform;
  /// Mean nearest boundary distance after registration, meters.
  double match_score = 0.0;
  PatchId matched_visual_patch_id;
};

struct ClusterParams {
  double epsilon = 2.0;
  double omega = 5.0 * std::numbers::pi / 180.0;

  void validate() const;
};

struct TransformCluster {
  std::vector<PatchTransform> members;
  RigidTransform3 representative;

  std::size_t size() const { return members.size(); }
  double mean_match_score() const;
};

/// 2 acos(min(1, |<a, b>|)), in [0, pi]. Non-unit inputs are normalized and,
/// when `normalized` is given, it is set to true.
double quaternion_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, bool* normalized = nullptr);

/// True when translations differ by less than epsilon and rotations by less than omega.
bool same_cluster(const RigidTransform3& a, const RigidTransform3& b, const ClusterParams& params);

/// Greedy clustering in input order: each transform joins the first cluster
/// whose seed (first member) it matches, otherwise it seeds a new cluster.
/// Representatives are the seeds.
std::vector<TransformCluster> cluster_transforms(const std::vector<PatchTransform>& transforms,
                                                 const ClusterParams& params);

/// Mean translation and incremental-slerp rotation of the given transforms, in order.
RigidTransform3 average_transforms(const std::vector<RigidTransform3>& transforms);

struct FusionResult {
  RigidTransform3 transform;
  std::vector<TransformCluster> clusters;
  std::size_t winner = 0;
};

/// Cluster (members ordered by LiDAR patch id), pick the largest cluster
/// (ties: lower mean match score) and average it. Throws FusionError on empty input.
FusionResult fuse_detailed(const std::vector<PatchTransform>& transforms, const ClusterParams& params);
RigidTransform3 fuse(const std::vector<PatchTransform>& transforms, const ClusterParams& params);

}  // namespace hybridfusion
