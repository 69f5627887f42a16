#pragma once

#include "hybridfusion/cloud.hpp"
#include "hybridfusion/ndt.hpp"

namespace hybridfusion {

/// Point-to-point ICP with a closed-form (Umeyama, no scale) rigid fit.
///
/// The tracked objective is the mean over all source points of
/// min(d^2, max_corr_dist^2), which cannot increase between iterations;
/// `final_score` reports its square root. Returns converged == false when no
/// correspondence falls within `max_corr_dist`.
RegistrationResult3 icp_register(const PointCloud3& source, const PointCloud3& target, const RigidTransform3& init,
                                 std::size_t max_iterations = 50, double max_corr_dist = 2.0);

}  // namespace hybridfusion
