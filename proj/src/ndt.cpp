#include "hybridfusion/ndt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/spatial_index.hpp"

namespace hybridfusion {

void NdtParams::validate() const {
  if (!(cell_size > 0.0)) throw ParameterError("ndt: cell_size must be positive");
  if (max_iterations < 1) throw ParameterError("ndt: max_iterations must be at least 1");
  if (!(step_epsilon > 0.0)) throw ParameterError("ndt: step_epsilon must be positive");
  if (!(outlier_floor >= 0.0 && outlier_floor < 1.0)) throw ParameterError("ndt: outlier_floor must lie in [0, 1)");
}

template <int Dim>
typename NdtGrid<Dim>::Key NdtGrid<Dim>::key_of(const Vec& p) const {
  Key k{};
  for (int i = 0; i < Dim; ++i) k[i] = static_cast<std::int64_t>(std::floor(p[i] / cell_size_));
  return k;
}

template <int Dim>
const NdtCell<Dim>* NdtGrid<Dim>::find(const Vec& p) const {
  const auto it = cells_.find(key_of(p));
  return it == cells_.end() ? nullptr : &it->second;
}

template <int Dim>
std::vector<std::pair<typename NdtGrid<Dim>::Key, const NdtCell<Dim>*>> NdtGrid<Dim>::sorted_cells() const {
  std::vector<std::pair<Key, const NdtCell<Dim>*>> out;
  out.reserve(cells_.size());
  for (const auto& [k, c] : cells_) out.emplace_back(k, &c);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

template class NdtGrid<2>;
template class NdtGrid<3>;

namespace {

template <int Dim>
NdtGrid<Dim> build_grid(const std::vector<Eigen::Matrix<double, Dim, 1>>& points, double cell_size,
                        std::size_t min_points) {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  using Grid = NdtGrid<Dim>;
  if (points.empty()) throw ParameterError("build_ndt_grid: empty target");
  if (!(cell_size > 0.0)) throw ParameterError("build_ndt_grid: cell_size must be positive");

  const Grid keyer(cell_size, {});
  std::unordered_map<typename Grid::Key, std::vector<std::size_t>, typename Grid::KeyHash> members;
  for (std::size_t i = 0; i < points.size(); ++i) members[keyer.key_of(points[i])].push_back(i);

  std::unordered_map<typename Grid::Key, NdtCell<Dim>, typename Grid::KeyHash> cells;
  const double absolute_floor = 1e-6 * cell_size * cell_size;
  for (const auto& [key, idx] : members) {
    if (idx.size() < std::max<std::size_t>(min_points, 2)) continue;
    NdtCell<Dim> cell;
    cell.count = idx.size();
    Vec sum = Vec::Zero();
    for (std::size_t i : idx) sum += points[i];
    cell.mean = sum / static_cast<double>(idx.size());
    Mat cov = Mat::Zero();
    for (std::size_t i : idx) {
      const Vec d = points[i] - cell.mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(idx.size() - 1);

    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    Vec values = eig.eigenvalues();
    const double floor_value = std::max(1e-3 * values.maxCoeff(), absolute_floor);
    bool clamped = false;
    for (int i = 0; i < Dim; ++i) {
      if (values[i] < floor_value) {
        values[i] = floor_value;
        clamped = true;
      }
    }
    if (clamped) cov = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    cell.covariance = cov;
    cell.inverse_covariance = eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    cells.emplace(key, cell);
  }
  if (cells.empty()) throw GridError("build_ndt_grid: no cell holds enough points");
  return Grid(cell_size, std::move(cells));
}

/// (x, y, yaw) pose acting on 2D points.
struct PlanarModel {
  static constexpr int kParams = 3;
  Eigen::Matrix2d r;
  Eigen::Matrix2d dr;
  Eigen::Vector2d t;

  explicit PlanarModel(const Eigen::Vector3d& p) {
    const double c = std::cos(p[2]);
    const double s = std::sin(p[2]);
    r << c, -s, s, c;
    dr << -s, -c, c, -s;
    t = p.head<2>();
  }

  Eigen::Vector2d apply(const Eigen::Vector2d& x) const { return r * x + t; }

  void jacobian(const Eigen::Vector2d& x, Eigen::Matrix<double, 2, 3>& j) const {
    j.leftCols<2>().setIdentity();
    j.col(2) = dr * x;
  }

  /// Second derivative of the transformed point w.r.t. params a and b.
  Eigen::Vector2d second(const Eigen::Vector2d& x, int a, int b) const {
    if (a == 2 && b == 2) return -(r * x);
    return Eigen::Vector2d::Zero();
  }
};

/// (x, y, z, roll, pitch, yaw) pose, R = Rz(yaw) Ry(pitch) Rx(roll).
struct SpatialModel {
  static constexpr int kParams = 6;
  Eigen::Matrix3d r;
  std::array<Eigen::Matrix3d, 3> dr;
  std::array<std::array<Eigen::Matrix3d, 3>, 3> d2r;
  Eigen::Vector3d t;

  explicit SpatialModel(const Eigen::Matrix<double, 6, 1>& p) {
    t = p.head<3>();
    const double ca = std::cos(p[3]), sa = std::sin(p[3]);
    const double cb = std::cos(p[4]), sb = std::sin(p[4]);
    const double cg = std::cos(p[5]), sg = std::sin(p[5]);
    Eigen::Matrix3d rx, ry, rz, drx, dry, drz, ddrx, ddry, ddrz;
    rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
    drx << 0, 0, 0, 0, -sa, -ca, 0, ca, -sa;
    ddrx << 0, 0, 0, 0, -ca, sa, 0, -sa, -ca;
    ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
    dry << -sb, 0, cb, 0, 0, 0, -cb, 0, -sb;
    ddry << -cb, 0, -sb, 0, 0, 0, sb, 0, -cb;
    rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    drz << -sg, -cg, 0, cg, -sg, 0, 0, 0, 0;
    ddrz << -cg, sg, 0, -sg, -cg, 0, 0, 0, 0;
    r = rz * ry * rx;
    dr[0] = rz * ry * drx;
    dr[1] = rz * dry * rx;
    dr[2] = drz * ry * rx;
    d2r[0][0] = rz * ry * ddrx;
    d2r[0][1] = d2r[1][0] = rz * dry * drx;
    d2r[0][2] = d2r[2][0] = drz * ry * drx;
    d2r[1][1] = rz * ddry * rx;
    d2r[1][2] = d2r[2][1] = drz * dry * rx;
    d2r[2][2] = ddrz * ry * rx;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return r * x + t; }

  void jacobian(const Eigen::Vector3d& x, Eigen::Matrix<double, 3, 6>& j) const {
    j.leftCols<3>().setIdentity();
    for (int i = 0; i < 3; ++i) j.col(3 + i) = dr[i] * x;
  }

  Eigen::Vector3d second(const Eigen::Vector3d& x, int a, int b) const {
    if (a < 3 || b < 3) return Eigen::Vector3d::Zero();
    return d2r[a - 3][b - 3] * x;
  }
};

template <int Dim, typename Model>
ScoreDerivatives<Model::kParams> evaluate(const NdtGrid<Dim>& grid,
                                          const std::vector<Eigen::Matrix<double, Dim, 1>>& source,
                                          const Model& model, double c, bool with_derivatives) {
  constexpr int P = Model::kParams;
  using Vec = Eigen::Matrix<double, Dim, 1>;
  ScoreDerivatives<P> out;
  Eigen::Matrix<double, Dim, P> j;
  for (const Vec& x : source) {
    const Vec xt = model.apply(x);
    const NdtCell<Dim>* cell = grid.find(xt);
    if (cell == nullptr) {
      out.score -= c;
      continue;
    }
    const Vec q = xt - cell->mean;
    const Vec aq = cell->inverse_covariance * q;
    const double m = q.dot(aq);
    const double s = (1.0 - c) * std::exp(-0.5 * m);
    out.score -= c + s;
    if (!with_derivatives || s == 0.0) continue;

    model.jacobian(x, j);
    const Eigen::Matrix<double, P, 1> qaj = j.transpose() * aq;
    out.gradient += s * qaj;
    const Eigen::Matrix<double, Dim, P> aj = cell->inverse_covariance * j;
    Eigen::Matrix<double, P, P> h = -qaj * qaj.transpose() + j.transpose() * aj;
    for (int a = Dim; a < P; ++a) {
      for (int b = Dim; b < P; ++b) h(a, b) += aq.dot(model.second(x, a, b));
    }
    out.hessian += s * h;
  }
  return out;
}

template <int Dim, typename Model>
RegistrationResult<Eigen::Matrix<double, Model::kParams, 1>> newton(
    const NdtGrid<Dim>& grid, const std::vector<Eigen::Matrix<double, Dim, 1>>& source,
    Eigen::Matrix<double, Model::kParams, 1> pose, const NdtParams& params) {
  constexpr int P = Model::kParams;
  using PVec = Eigen::Matrix<double, P, 1>;
  using PMat = Eigen::Matrix<double, P, P>;
  const double c = params.outlier_floor;
  const double max_translation = 0.5 * grid.cell_size();
  constexpr double kMaxRotation = 0.2;

  RegistrationResult<PVec> result;
  ScoreDerivatives<P> cur = evaluate(grid, source, Model(pose), c, true);
  result.history.push_back(cur.score);

  for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
    result.iterations = iter + 1;

    // Minimizing: make the Hessian positive definite before solving.
    PMat h = cur.hessian;
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    double damping = 0.0;
    Eigen::LLT<PMat> llt;
    for (int attempt = 0; attempt < 60; ++attempt) {
      llt.compute(h + damping * PMat::Identity());
      if (llt.info() == Eigen::Success) break;
      damping = damping == 0.0 ? 1e-6 * scale : damping * 10.0;
    }
    PVec step = -llt.solve(cur.gradient);
    if (!step.allFinite()) step.setZero();

    const double t_norm = step.template head<Dim>().norm();
    const double r_norm = step.template tail<P - Dim>().norm();
    double shrink = 1.0;
    if (t_norm > max_translation) shrink = std::min(shrink, max_translation / t_norm);
    if (r_norm > kMaxRotation) shrink = std::min(shrink, kMaxRotation / r_norm);
    step *= shrink;

    // Backtrack until the objective does not increase; fall back to steepest
    // descent when the Newton direction fails.
    const auto backtrack = [&](const PVec& direction, double& alpha) {
      alpha = 1.0;
      for (int attempt = 0; attempt < 12; ++attempt) {
        if (evaluate(grid, source, Model(pose + alpha * direction), c, false).score < cur.score) return true;
        alpha *= 0.5;
      }
      return false;
    };
    double alpha = 1.0;
    bool accepted = backtrack(step, alpha);
    if (!accepted) {
      PVec descent = -cur.gradient;
      const double dt = descent.template head<Dim>().norm();
      const double dr = descent.template tail<P - Dim>().norm();
      double limit = std::numeric_limits<double>::infinity();
      if (dt > 0.0) limit = std::min(limit, max_translation / dt);
      if (dr > 0.0) limit = std::min(limit, kMaxRotation / dr);
      if (std::isfinite(limit)) {
        step = descent * limit;
        accepted = backtrack(step, alpha);
      }
    }
    const double applied = accepted ? (alpha * step).norm() : 0.0;
    if (accepted && applied > 0.0) {
      pose += alpha * step;
      cur = evaluate(grid, source, Model(pose), c, true);
      result.history.push_back(cur.score);
    }
    if (applied < params.step_epsilon) {
      result.converged = true;
      break;
    }
  }
  result.transform = pose;
  result.final_score = cur.score;
  return result;
}

}  // namespace

NdtGrid2 build_ndt_grid(const std::vector<Point2>& target, double cell_size, std::size_t min_points_per_cell) {
  return build_grid<2>(target, cell_size, min_points_per_cell);
}

NdtGrid3 build_ndt_grid(const PointCloud3& target, double cell_size, std::size_t min_points_per_cell) {
  return build_grid<3>(target.points, cell_size, min_points_per_cell);
}

Eigen::Vector3d to_parameters(const RigidTransform2& t) {
  return {t.translation().x(), t.translation().y(), t.angle()};
}

RigidTransform2 from_parameters(const Eigen::Vector3d& p) { return {p[2], p.head<2>()}; }

Eigen::Matrix<double, 6, 1> to_parameters(const RigidTransform3& t) {
  Eigen::Matrix<double, 6, 1> p;
  p.head<3>() = t.translation();
  p.tail<3>() = t.euler();
  return p;
}

RigidTransform3 from_parameters(const Eigen::Matrix<double, 6, 1>& p) {
  return RigidTransform3::from_euler(p[3], p[4], p[5], p.head<3>());
}

double ndt_score(const NdtGrid2& grid, const std::vector<Point2>& source, const RigidTransform2& pose,
                 double outlier_floor) {
  return evaluate(grid, source, PlanarModel(to_parameters(pose)), outlier_floor, false).score;
}

double ndt_score(const NdtGrid3& grid, const PointCloud3& source, const RigidTransform3& pose, double outlier_floor) {
  return evaluate(grid, source.points, SpatialModel(to_parameters(pose)), outlier_floor, false).score;
}

ScoreDerivatives<3> ndt_derivatives(const NdtGrid2& grid, const std::vector<Point2>& source,
                                    const Eigen::Vector3d& pose, double outlier_floor) {
  return evaluate(grid, source, PlanarModel(pose), outlier_floor, true);
}

ScoreDerivatives<6> ndt_derivatives(const NdtGrid3& grid, const PointCloud3& source,
                                    const Eigen::Matrix<double, 6, 1>& pose, double outlier_floor) {
  return evaluate(grid, source.points, SpatialModel(pose), outlier_floor, true);
}

RegistrationResult2 register_2d(const std::vector<Point2>& source, const NdtGrid2& target_grid,
                                const RigidTransform2& init, const NdtParams& params) {
  params.validate();
  if (source.empty()) throw ParameterError("register_2d: empty source");
  auto raw = newton<2, PlanarModel>(target_grid, source, to_parameters(init), params);
  return {from_parameters(raw.transform), raw.final_score, raw.converged, raw.iterations, std::move(raw.history)};
}

RegistrationResult2 register_2d(const std::vector<Point2>& source, const std::vector<Point2>& target,
                                const RigidTransform2& init, const NdtParams& params) {
  params.validate();
  if (target.empty()) throw ParameterError("register_2d: empty target");
  return register_2d(source, build_ndt_grid(target, params.cell_size, params.min_points_per_cell), init, params);
}

RegistrationResult3 register_3d(const PointCloud3& source, const NdtGrid3& target_grid, const RigidTransform3& init,
                                const NdtParams& params) {
  params.validate();
  if (source.empty()) throw ParameterError("register_3d: empty source");
  auto raw = newton<3, SpatialModel>(target_grid, source.points, to_parameters(init), params);
  return {from_parameters(raw.transform), raw.final_score, raw.converged, raw.iterations, std::move(raw.history)};
}

RegistrationResult3 register_3d(const PointCloud3& source, const PointCloud3& target, const RigidTransform3& init,
                                const NdtParams& params) {
  params.validate();
  if (target.empty()) throw ParameterError("register_3d: empty target");
  return register_3d(source, build_ndt_grid(target, params.cell_size, params.min_points_per_cell), init, params);
}

std::optional<BoundaryMatch2> register_boundary_2d(const std::vector<Point2>& source, const std::vector<Point2>& target,
                                                   const std::vector<RigidTransform2>& inits, const NdtParams& params,
                                                   std::size_t levels) {
  params.validate();
  if (levels == 0) throw ParameterError("register_boundary_2d: levels must be positive");
  if (source.empty()) throw ParameterError("register_boundary_2d: empty source");
  std::vector<NdtParams> schedule;
  std::vector<NdtGrid2> grids;
  for (std::size_t i = levels; i-- > 0;) {
    NdtParams level = params;
    level.cell_size = params.cell_size * static_cast<double>(std::size_t{1} << i);
    try {
      grids.push_back(build_ndt_grid(target, level.cell_size, level.min_points_per_cell));
      schedule.push_back(level);
    } catch (const GridError&) {
      if (i == 0) throw;
    }
  }
  const SpatialIndex2 index(target);
  std::optional<BoundaryMatch2> best;
  for (const RigidTransform2& init : inits) {
    RigidTransform2 t = init;
    for (std::size_t i = 0; i < grids.size(); ++i) t = register_2d(source, grids[i], t, schedule[i]).transform;
    const double score = avg_nearest_distance(apply_transform(source, t), index);
    if (!best || score < best->match_score) best = BoundaryMatch2{t, score};
  }
  return best;
}

}  // namespace hybridfusion
