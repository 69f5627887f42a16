#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

struct NdtParams {
  double cell_size = 2.0;
  std::size_t max_iterations = 50;
  /// Iteration stops once the applied step (meters and radians mixed) is shorter.
  double step_epsilon = 1e-4;
  /// Probability mass every source point receives regardless of fit.
  double outlier_floor = 0.05;
  std::size_t min_points_per_cell = 5;

  void validate() const;
};

template <int Dim>
struct NdtCell {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  using Mat = Eigen::Matrix<double, Dim, Dim>;

  Vec mean = Vec::Zero();
  Mat covariance = Mat::Identity();
  Mat inverse_covariance = Mat::Identity();
  std::size_t count = 0;
};

/// Voxelized Gaussian field. Cells are keyed by floor(x / cell_size).
template <int Dim>
class NdtGrid {
 public:
  using Vec = Eigen::Matrix<double, Dim, 1>;
  using Key = std::array<std::int64_t, Dim>;

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = 0;
      for (std::int64_t v : k) h = h * 1000003u ^ static_cast<std::size_t>(v + 0x9e3779b97f4a7c15LL);
      return h;
    }
  };

  NdtGrid() = default;
  NdtGrid(double cell_size, std::unordered_map<Key, NdtCell<Dim>, KeyHash> cells)
      : cell_size_(cell_size), cells_(std::move(cells)) {}

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return cells_.size(); }
  Key key_of(const Vec& p) const;
  /// Cell containing `p`, or nullptr.
  const NdtCell<Dim>* find(const Vec& p) const;
  /// Cells sorted by key.
  std::vector<std::pair<Key, const NdtCell<Dim>*>> sorted_cells() const;

 private:
  double cell_size_ = 0.0;
  std::unordered_map<Key, NdtCell<Dim>, KeyHash> cells_;
};

using NdtGrid2 = NdtGrid<2>;
using NdtGrid3 = NdtGrid<3>;

/// Per-cell mean and (n - 1)-normalized covariance; cells with fewer than
/// `min_points_per_cell` members are dropped. Eigenvalues are floored at
/// 1e-3 of the largest one (and at 1e-6 * cell_size^2 in absolute terms).
/// Throws ParameterError on empty input or cell_size <= 0, GridError when no
/// cell qualifies.
NdtGrid2 build_ndt_grid(const std::vector<Point2>& target, double cell_size, std::size_t min_points_per_cell = 5);
NdtGrid3 build_ndt_grid(const PointCloud3& target, double cell_size, std::size_t min_points_per_cell = 5);

/// Sum over source points of -(c + (1 - c) exp(-0.5 q' S^-1 q)), q the offset of the
/// transformed point from its cell mean; points outside every cell add -c.
/// Lower is better; the value lies in [-n, 0].
double ndt_score(const NdtGrid2& grid, const std::vector<Point2>& source, const RigidTransform2& pose,
                 double outlier_floor);
double ndt_score(const NdtGrid3& grid, const PointCloud3& source, const RigidTransform3& pose, double outlier_floor);

/// Score with gradient and Hessian over the pose parameters:
/// (x, y, yaw) in 2D, (x, y, z, roll, pitch, yaw) in 3D.
template <int P>
struct ScoreDerivatives {
  double score = 0.0;
  Eigen::Matrix<double, P, 1> gradient = Eigen::Matrix<double, P, 1>::Zero();
  Eigen::Matrix<double, P, P> hessian = Eigen::Matrix<double, P, P>::Zero();
};

ScoreDerivatives<3> ndt_derivatives(const NdtGrid2& grid, const std::vector<Point2>& source,
                                    const Eigen::Vector3d& pose, double outlier_floor);
ScoreDerivatives<6> ndt_derivatives(const NdtGrid3& grid, const PointCloud3& source,
                                    const Eigen::Matrix<double, 6, 1>& pose, double outlier_floor);

Eigen::Vector3d to_parameters(const RigidTransform2& t);
RigidTransform2 from_parameters(const Eigen::Vector3d& p);
Eigen::Matrix<double, 6, 1> to_parameters(const RigidTransform3& t);
RigidTransform3 from_parameters(const Eigen::Matrix<double, 6, 1>& p);

template <typename Transform>
struct RegistrationResult {
  Transform transform;
  double final_score = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// Objective after each accepted iteration (first entry: initial pose).
  std::vector<double> history;
};

using RegistrationResult2 = RegistrationResult<RigidTransform2>;
using RegistrationResult3 = RegistrationResult<RigidTransform3>;

/// Newton iterations minimizing ndt_score. The returned transform maps source
/// into the target frame.
RegistrationResult2 register_2d(const std::vector<Point2>& source, const std::vector<Point2>& target,
                                const RigidTransform2& init, const NdtParams& params);
RegistrationResult2 register_2d(const std::vector<Point2>& source, const NdtGrid2& target_grid,
                                const RigidTransform2& init, const NdtParams& params);
RegistrationResult3 register_3d(const PointCloud3& source, const PointCloud3& target, const RigidTransform3& init,
                                const NdtParams& params);
RegistrationResult3 register_3d(const PointCloud3& source, const NdtGrid3& target_grid, const RigidTransform3& init,
                                const NdtParams& params);

/// Outcome of a multi-start boundary registration.
struct BoundaryMatch2 {
  RigidTransform2 transform;
  /// Mean nearest distance from the transformed source to the target, meters.
  double match_score = 0.0;
};

/// Boundary-to-boundary 2D registration. Every init is refined coarse to fine
/// over cells params.cell_size * 2^(levels - 1), ..., params.cell_size (coarse
/// levels without any qualifying cell are skipped); the refined pose with the
/// smallest match score wins, ties going to the earlier init. Returns nullopt
/// for an empty init list. Throws GridError when the finest grid is empty.
std::optional<BoundaryMatch2> register_boundary_2d(const std::vector<Point2>& source, const std::vector<Point2>& target,
                                                   const std::vector<RigidTransform2>& inits, const NdtParams& params,
                                                   std::size_t levels);

}  // namespace hybridfusion
