#include <doctest.h>

#include <numbers>

#include "hybridfusion/candidates.hpp"
#include "hybridfusion/errors.hpp"
#include "test_support.hpp"

using namespace hybridfusion;
using testing_support::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

PatchGrid grid_with_sizes(const std::vector<std::size_t>& sizes) {
  PointCloud3 cloud;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t k = 0; k < sizes[c]; ++k) cloud.points.emplace_back(c + 0.5, 0.5, static_cast<double>(k));
  }
  return partition(cloud, 1.0, Point2::Zero());
}

/// Unit-norm centered vector orthogonal to `u` (also centered and unit).
std::vector<double> orthogonal_to(const std::vector<double>& u, Rng& rng) {
  std::vector<double> v(u.size());
  for (auto& x : v) x = rng.uniform(-1, 1);
  const CenteredVector cv = CenteredVector::from(v);
  v = cv.values;
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * u[i];
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] -= dot * u[i];
    norm += v[i] * v[i];
  }
  for (auto& x : v) x /= std::sqrt(norm);
  return v;
}

std::vector<double> unit_centered(Rng& rng) {
  std::vector<double> u(640);
  for (auto& x : u) x = rng.uniform(0, 1);
  CenteredVector c = CenteredVector::from(u);
  for (auto& x : c.values) x /= c.norm;
  return c.values;
}

/// Vector whose Pearson correlation with `u` is `rho`.
std::vector<double> with_correlation(const std::vector<double>& u, const std::vector<double>& v, double rho) {
  std::vector<double> out(u.size());
  const double s = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = 5.0 + 2.0 * (rho * u[i] + s * v[i]);
  return out;
}

}  // namespace

TEST_CASE("salient patches have strictly more than eta points") {
  const PatchGrid grid = grid_with_sizes({5, 50, 500});
  CHECK(select_salient(grid, 100).size() == 1);
  CHECK(select_salient(grid, 0).size() == 3);
  CHECK(select_salient(grid, 50).size() == 1);
  CHECK(select_salient(grid, 49).size() == 2);

  Rng rng(13);
  const PatchGrid random = partition(rng.cloud(5000, 0, 50), 5.0);
  std::vector<std::size_t> counts;
  for (const auto& [id, p] : random.patches) counts.push_back(p.size());
  std::nth_element(counts.begin(), counts.begin() + counts.size() / 2, counts.end());
  const std::size_t eta = counts[counts.size() / 2];
  std::vector<PatchId> expected;
  for (const auto& [id, p] : random.patches) {
    if (p.size() > eta) expected.push_back(id);
  }
  CHECK(select_salient(random, eta) == expected);
}

TEST_CASE("annulus ring arithmetic") {
  PointCloud3 cloud({Point3(10, 0, 0), Point3(10.2, 0.2, 0), Point3(20, 0.5, 0), Point3(20.5, 0.1, 0)});
  const PatchGrid grid = partition(cloud, 1.0, Point2::Zero());
  const auto ids = annulus_candidates(grid, Point3::Zero(), Point3(10, 0, 5), 0.2, kPi / 4);
  REQUIRE(ids.size() == 1);
  CHECK(ids[0] == PatchId{0, 10});
  CHECK_THROWS_AS(annulus_candidates(grid, Point3(1, 1, 0), Point3(1, 1, 9), 0.2, 1.0), GeometryError);
}

TEST_CASE("annulus membership matches the geometric oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud3 cloud;
    for (int patch = 0; patch < 200; ++patch) {
      const Point2 c = rng.point2(-60, 60);
      const int n = rng.integer(1, 30);
      for (int k = 0; k < n; ++k) cloud.points.emplace_back(c.x() + rng.uniform(-2, 2), c.y() + rng.uniform(-2, 2), 0);
    }
    const PatchGrid grid = partition(cloud, 4.0);
    const Point3 origin(rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0);
    const Point3 lidar(rng.uniform(-40, 40), rng.uniform(-40, 40), 3.0);
    const auto got = annulus_candidates(grid, origin, lidar, 0.3, kPi / 4);
    const auto expected = testing_support::annulus_members(grid, origin, lidar, 0.3, kPi / 4);
    CHECK(std::set<PatchId>(got.begin(), got.end()) == expected);
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("annulus is monotone in lambda and phi and rotation invariant") {
  Rng rng(19);
  const PatchGrid grid = partition(rng.cloud(6000, -50, 50), 5.0);
  const Point3 origin(1.0, -2.0, 0.0);
  const Point3 lidar(25.0, 10.0, 0.0);
  const auto as_set = [](const std::vector<PatchId>& v) { return std::set<PatchId>(v.begin(), v.end()); };
  const auto includes = [](const std::set<PatchId>& big, const std::set<PatchId>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
  };
  const auto small_lambda = as_set(annulus_candidates(grid, origin, lidar, 0.1, 0.8));
  const auto large_lambda = as_set(annulus_candidates(grid, origin, lidar, 0.4, 0.8));
  const auto large_phi = as_set(annulus_candidates(grid, origin, lidar, 0.1, 1.6));
  CHECK(includes(large_lambda, small_lambda));
  CHECK(includes(large_phi, small_lambda));

  // Rotate every patch's points (not the binning) and the query about the origin.
  const RigidTransform3 rot = compose(RigidTransform3(Eigen::Quaterniond::Identity(), origin),
                                      compose(RigidTransform3::from_yaw(0.7),
                                              RigidTransform3(Eigen::Quaterniond::Identity(), -origin)));
  PatchGrid rotated = grid;
  for (auto& [id, patch] : rotated.patches) {
    patch.points = apply_transform(patch.points, rot);
    patch.centroid = rot.apply(patch.centroid);
  }
  CHECK(as_set(annulus_candidates(rotated, origin, rot.apply(lidar), 0.3, 0.8)) ==
        as_set(annulus_candidates(grid, origin, lidar, 0.3, 0.8)));
}

TEST_CASE("descriptor filter keeps strictly higher correlations") {
  Rng rng(23);
  const auto u = unit_centered(rng);
  const auto v = orthogonal_to(u, rng);
  const CenteredVector lidar = CenteredVector::from(u);
  DescriptorCache cache;
  CandidateSet set;
  const std::vector<double> rhos{0.59, 0.9, -0.2, 0.61};
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const PatchId id{0, static_cast<int>(i)};
    cache[id] = CenteredVector::from(with_correlation(u, v, rhos[i]));
    set.candidates.push_back({id, 0.0});
  }
  const CandidateSet out = descriptor_filter(lidar, set, cache, 0.6);
  REQUIRE(out.size() == 2);
  CHECK(out.candidates[0].id == PatchId{0, 1});
  CHECK(out.candidates[0].rho == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(out.candidates[1].id == PatchId{0, 3});
  CHECK(out.candidates[1].rho == doctest::Approx(0.61).epsilon(1e-9));

  // A correlation equal to the threshold is removed.
  const double exact = pearson(lidar, cache.at(PatchId{0, 1}));
  CHECK(descriptor_filter(lidar, set, cache, exact).size() == 0);
  // The identical descriptor is retained.
  cache[PatchId{0, 0}] = lidar;
  CHECK(descriptor_filter(lidar, set, cache, 0.6).candidates.front().rho == doctest::Approx(1.0));

  // Zero-variance candidates never survive; unknown ids are lookup errors.
  cache[PatchId{0, 2}] = CenteredVector::from(std::vector<double>(640, 1.0));
  CHECK(descriptor_filter(lidar, set, cache, -0.9).size() == 3);
  set.candidates.push_back({PatchId{9, 9}, 0.0});
  CHECK_THROWS_AS(descriptor_filter(lidar, set, cache, 0.6), LookupError);
}

TEST_CASE("neighbor filter matches the max-per-neighbor oracle") {
  Rng rng(29);
  const std::size_t min_points = 2;
  // Two 3x3 grids with three points per cell.
  const auto make_grid = [](double x0) {
    PointCloud3 cloud;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        for (int k = 0; k < 3; ++k) cloud.points.emplace_back(x0 + col + 0.5, row + 0.5, k);
      }
    }
    return partition(cloud, 1.0, Point2(x0, 0.0));
  };
  const PatchGrid lidar_grid = make_grid(0.0);
  const PatchGrid visual_grid = make_grid(100.0);

  for (int trial = 0; trial < 20; ++trial) {
    DescriptorCache lidar_cache, visual_cache;
    std::map<PatchId, std::vector<double>> lidar_raw, visual_raw;
    for (const PatchId& id : lidar_grid.ids()) {
      std::vector<double> x(640);
      for (auto& v : x) v = rng.uniform(0, 1);
      lidar_raw[id] = x;
      lidar_cache[id] = CenteredVector::from(x);
    }
    for (const PatchId& id : visual_grid.ids()) {
      std::vector<double> x = lidar_raw[lidar_grid.ids()[rng.index(9)]];
      for (auto& v : x) v += rng.uniform(0, 1.5);
      visual_raw[id] = x;
      visual_cache[id] = CenteredVector::from(x);
    }
    const PatchId lidar_id{1, 1};
    CandidateSet set;
    set.lidar_patch_id = lidar_id;
    for (const PatchId& id : visual_grid.ids()) set.candidates.push_back({id, 0.5});

    SelectionParams params;
    params.neighbor_min_points = min_points;
    params.neighbor_rho_min = 0.3;
    const CandidateSet out =
        neighbor_filter(lidar_id, set, lidar_grid, visual_grid, lidar_cache, visual_cache, params);

    std::vector<PatchId> expected;
    for (const PatchId& cid : visual_grid.ids()) {
      double sum = 0.0;
      std::size_t n = 0;
      std::vector<PatchId> cand_nbrs;
      for (const Patch* p : neighbors(visual_grid, cid)) cand_nbrs.push_back(p->id);
      for (const Patch* ln : neighbors(lidar_grid, lidar_id)) {
        double best = -2.0;
        for (const PatchId& vn : cand_nbrs) {
          best = std::max(best, testing_support::pearson_reference(lidar_raw[ln->id], visual_raw[vn]));
        }
        sum += best;
        ++n;
      }
      const double avg = sum / static_cast<double>(n);
      const auto sim = neighbor_similarity(lidar_id, cid, lidar_grid, visual_grid, lidar_cache, visual_cache,
                                           min_points);
      REQUIRE(sim.has_value());
      CHECK(std::abs(*sim - avg) < 1e-9);
      if (avg >= params.neighbor_rho_min) expected.push_back(cid);
    }
    std::vector<PatchId> got;
    for (const auto& c : out.candidates) got.push_back(c.id);
    std::sort(got.begin(), got.end());
    CHECK(got == expected);
  }
}

TEST_CASE("neighbor filter is vacuous without qualifying neighbors and permutation free") {
  PointCloud3 lone({Point3(0.5, 0.5, 0), Point3(0.5, 0.5, 1), Point3(0.5, 0.5, 2)});
  const PatchGrid lidar_grid = partition(lone, 1.0, Point2::Zero());
  const PatchGrid visual_grid = partition(lone, 1.0, Point2::Zero());
  DescriptorCache cache;
  Rng rng(31);
  std::vector<double> x(640);
  for (auto& v : x) v = rng.uniform(0, 1);
  cache[PatchId{0, 0}] = CenteredVector::from(x);
  CandidateSet set;
  set.candidates.push_back({PatchId{0, 0}, 0.9});
  SelectionParams params;
  params.neighbor_min_points = 2;
  const CandidateSet out = neighbor_filter(PatchId{0, 0}, set, lidar_grid, visual_grid, cache, cache, params);
  CHECK(out.size() == 1);
  CHECK_FALSE(neighbor_similarity(PatchId{0, 0}, PatchId{0, 0}, lidar_grid, visual_grid, cache, cache, 2));
}

TEST_CASE("selection params validation") {
  SelectionParams p;
  CHECK_NOTHROW(p.validate());
  p.lambda = 1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = SelectionParams{};
  p.phi = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = SelectionParams{};
  p.rho_min = 1.5;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("ray angle is signed") {
  CHECK(ray_angle(Point3::Zero(), Point3(1, 0, 0), Point3(0, 1, 0)) == doctest::Approx(kPi / 2));
  CHECK(ray_angle(Point3::Zero(), Point3(1, 0, 0), Point3(0, -1, 0)) == doctest::Approx(-kPi / 2));
}
