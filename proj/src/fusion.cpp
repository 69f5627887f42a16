#include "hybridfusion/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

void ClusterParams::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("cluster: epsilon must be positive");
  if (!(omega > 0.0)) throw ParameterError("cluster: omega must be positive");
}

double TransformCluster::mean_match_score() const {
  if (members.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : members) sum += m.match_score;
  return sum / static_cast<double>(members.size());
}

double quaternion_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, bool* normalized) {
  Eigen::Quaterniond qa = a;
  Eigen::Quaterniond qb = b;
  const bool fix = std::abs(qa.norm() - 1.0) > 1e-9 || std::abs(qb.norm() - 1.0) > 1e-9;
  if (fix) {
    qa.normalize();
    qb.normalize();
  }
  if (normalized != nullptr) *normalized = fix;
  return 2.0 * std::acos(std::min(1.0, std::abs(qa.dot(qb))));
}

bool same_cluster(const RigidTransform3& a, const RigidTransform3& b, const ClusterParams& params) {
  return (a.translation() - b.translation()).norm() < params.epsilon &&
         std::abs(quaternion_angle(a.rotation(), b.rotation())) < params.omega;
}

std::vector<TransformCluster> cluster_transforms(const std::vector<PatchTransform>& transforms,
                                                 const ClusterParams& params) {
  params.validate();
  std::vector<TransformCluster> clusters;
  for (const PatchTransform& t : transforms) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const TransformCluster& c) {
      return same_cluster(c.members.front().transform, t.transform, params);
    });
    if (it == clusters.end()) {
      clusters.push_back(TransformCluster{{t}, t.transform});
    } else {
      it->members.push_back(t);
    }
  }
  return clusters;
}

RigidTransform3 average_transforms(const std::vector<RigidTransform3>& transforms) {
  if (transforms.empty()) throw FusionError("average_transforms: empty input");
  Point3 translation = Point3::Zero();
  Eigen::Quaterniond mean = transforms.front().rotation();
  for (std::size_t k = 0; k < transforms.size(); ++k) {
    translation += transforms[k].translation();
    if (k == 0) continue;
    Eigen::Quaterniond q = transforms[k].rotation();
    if (mean.dot(q) < 0.0) q.coeffs() = -q.coeffs();
    mean = mean.slerp(1.0 / static_cast<double>(k + 1), q).normalized();
  }
  return {mean, translation / static_cast<double>(transforms.size())};
}

FusionResult fuse_detailed(const std::vector<PatchTransform>& transforms, const ClusterParams& params) {
  if (transforms.empty()) throw FusionError("fuse: no patch transforms");
  std::vector<PatchTransform> ordered = transforms;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const PatchTransform& a, const PatchTransform& b) { return a.lidar_patch_id < b.lidar_patch_id; });

  FusionResult result;
  result.clusters = cluster_transforms(ordered, params);
  for (std::size_t i = 1; i < result.clusters.size(); ++i) {
    const TransformCluster& c = result.clusters[i];
    const TransformCluster& best = result.clusters[result.winner];
    if (c.size() > best.size() || (c.size() == best.size() && c.mean_match_score() < best.mean_match_score())) {
      result.winner = i;
    }
  }
  std::vector<RigidTransform3> members;
  for (const auto& m : result.clusters[result.winner].members) members.push_back(m.transform);
  result.transform = average_transforms(members);
  return result;
}

RigidTransform3 fuse(const std::vector<PatchTransform>& transforms, const ClusterParams& params) {
  return fuse_detailed(transforms, params).transform;
}

}  // namespace hybridfusion
