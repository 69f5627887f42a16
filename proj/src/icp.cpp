#include "hybridfusion/icp.hpp"

#include <Eigen/Geometry>

#include <cmath>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/spatial_index.hpp"

namespace hybridfusion {

namespace {

struct Matches {
  Eigen::Matrix3Xd source;
  Eigen::Matrix3Xd target;
  double objective = 0.0;
};

Matches match(const PointCloud3& source, const SpatialIndex& index, const RigidTransform3& pose, double max_dist) {
  const double cap = max_dist * max_dist;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(source.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Neighbor n = index.nearest(pose.apply(source[i]));
    if (n.squared_distance <= cap) {
      pairs.emplace_back(i, n.index);
      sum += n.squared_distance;
    } else {
      sum += cap;
    }
  }
  Matches m;
  m.objective = sum / static_cast<double>(source.size());
  m.source.resize(3, static_cast<Eigen::Index>(pairs.size()));
  m.target.resize(3, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    m.source.col(static_cast<Eigen::Index>(k)) = pose.apply(source[pairs[k].first]);
    m.target.col(static_cast<Eigen::Index>(k)) = index.point(pairs[k].second);
  }
  return m;
}

}  // namespace

RegistrationResult3 icp_register(const PointCloud3& source, const PointCloud3& target, const RigidTransform3& init,
                                 std::size_t max_iterations, double max_corr_dist) {
  if (source.empty() || target.empty()) throw ParameterError("icp_register: empty cloud");
  if (!(max_corr_dist > 0.0)) throw ParameterError("icp_register: max_corr_dist must be positive");

  const SpatialIndex index = make_index(target);
  RegistrationResult3 result;
  result.transform = init;
  Matches current = match(source, index, init, max_corr_dist);
  result.history.push_back(current.objective);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    if (current.source.cols() < 3) break;
    result.iterations = iter + 1;
    const Eigen::Matrix4d delta_m = Eigen::umeyama(current.source, current.target, false);
    const RigidTransform3 delta(Eigen::Matrix3d(delta_m.topLeftCorner<3, 3>()), delta_m.topRightCorner<3, 1>());
    const RigidTransform3 candidate = compose(delta, result.transform);
    Matches next = match(source, index, candidate, max_corr_dist);
    if (next.objective > current.objective) {
      result.converged = true;
      break;
    }
    result.transform = candidate;
    const bool small = delta.translation().norm() < 1e-8 && delta.angle() < 1e-8;
    const bool flat = current.objective - next.objective <= 1e-12 * std::max(1.0, current.objective);
    current = std::move(next);
    result.history.push_back(current.objective);
    if (small || flat) {
      result.converged = true;
      break;
    }
  }
  result.final_score = std::sqrt(current.objective);
  if (current.source.cols() == 0) result.converged = false;
  return result;
}

}  // namespace hybridfusion
