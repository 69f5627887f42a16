#include <doctest.h>

#include "hybridfusion/boundary.hpp"
#include "hybridfusion/errors.hpp"
#include "hybridfusion/evaluation.hpp"
#include "test_support.hpp"

using namespace hybridfusion;
using testing_support::Rng;

TEST_CASE("octree volume: trivial clouds") {
  CHECK(octree_volume(PointCloud3({Point3(3, 4, 5)}), 1.0) == doctest::Approx(1.0));
  PointCloud3 corners;
  for (int i = 0; i < 8; ++i) corners.points.emplace_back(0.5 + (i & 1), 0.5 + ((i >> 1) & 1), 0.5 + ((i >> 2) & 1));
  CHECK(octree_volume(corners, 1.0) == doctest::Approx(8.0));
  CHECK(octree_volume(corners, 0.5) == doctest::Approx(8.0 * 0.125));
  CHECK_THROWS_AS(octree_volume(PointCloud3{}, 1.0), MetricError);
  CHECK_THROWS_AS(octree_volume(corners, 0.0), ParameterError);
}

TEST_CASE("octree leaf count matches distinct voxel oracle") {
  Rng rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    const double res = rng.uniform(0.2, 1.5);
    PointCloud3 cloud = rng.cloud(static_cast<std::size_t>(rng.integer(1, 10000)), -20, 20);
    // Some exact duplicates and points on leaf faces.
    for (int i = 0; i < 20; ++i) cloud.points.push_back(cloud.points[rng.index(cloud.size())]);
    const OctreeWrap tree(cloud, res);
    CHECK(tree.occupied_leaf_count() == testing_support::distinct_voxels(cloud, res));
    CHECK(tree.volume() == doctest::Approx(testing_support::distinct_voxels(cloud, res) * res * res * res).epsilon(1e-12));
    const Eigen::AlignedBox3d box = bounds(cloud);
    CHECK(tree.root_edge() > (box.max() - box.min()).maxCoeff());
  }
}

TEST_CASE("supplement degree") {
  CHECK(std::abs(supplement_degree_from_volumes(287.57, 217.49) - 0.3221) < 5e-4);
  CHECK_THROWS_AS(supplement_degree_from_volumes(1.0, 0.0), MetricError);

  Rng rng(93);
  const PointCloud3 g = rng.cloud(3000, 0, 10);
  CHECK(supplement_degree(g, g, 0.5) == doctest::Approx(0.0));

  // A disjoint copy of equal occupancy doubles the volume.
  PointCloud3 both = g;
  for (const Point3& p : g.points) both.points.push_back(p + Point3(1000, 0, 0));
  CHECK(supplement_degree(both, g, 0.5) == doctest::Approx(1.0).epsilon(0.05));

  // Adding points never lowers the fused volume.
  PointCloud3 grow = g;
  double last = supplement_degree(grow, g, 0.5);
  for (int step = 0; step < 5; ++step) {
    for (int i = 0; i < 200; ++i) grow.points.push_back(rng.point(-10, 20));
    const double now = supplement_degree(grow, g, 0.5);
    CHECK(now >= last);
    last = now;
  }
}

TEST_CASE("boundary accuracy matches the oracle composition") {
  const PointCloud3 g = testing_support::box_building(Point2(0, 0), 12, 8, 8, 0.3);
  const PointCloud3 l = apply_transform(g, RigidTransform3::from_yaw(0.03, Point3(0.4, -0.2, 0.0)));
  const BoundaryParams params;
  const auto a = extract_boundary(l, params);
  const auto b = extract_boundary(g, params);
  CHECK(boundary_accuracy(l, g, params) ==
        doctest::Approx(testing_support::avg_nearest_reference(a, b)).epsilon(1e-9));
  CHECK(boundary_accuracy(g, g, params) == doctest::Approx(0.0));
  CHECK_THROWS_AS(boundary_accuracy(PointCloud3{}, g, params), MetricError);
}

TEST_CASE("boundary accuracy of a diagonally shifted footprint") {
  const PointCloud3 g = testing_support::box_building(Point2(0, 0), 12, 8, 8, 0.25);
  const BoundaryParams params;
  for (double d : {0.3, 0.6, 1.0}) {
    const PointCloud3 l = apply_transform(g, RigidTransform3(Eigen::Quaterniond::Identity(), Point3(d, d, 0)));
    const auto outline = testing_support::rectangle_outline(Point2(0, 0), 12, 8, 0.01);
    const auto shifted = testing_support::rectangle_outline(Point2(d, d), 12, 8, 0.01);
    const double expected = testing_support::avg_nearest_reference(shifted, outline);
    CHECK(std::abs(boundary_accuracy(l, g, params) - expected) < 0.15);
  }
}

TEST_CASE("evaluate bundles the metrics") {
  const PointCloud3 g = testing_support::box_building(Point2(0, 0), 10, 10, 6, 0.4);
  const PointCloud3 extra = testing_support::box_building(Point2(30, 0), 10, 10, 6, 0.4);
  PointCloud3 fused = g;
  fused.points.insert(fused.points.end(), extra.points.begin(), extra.points.end());
  const auto report = evaluate(fused, g, g, 0.5, BoundaryParams{});
  CHECK(report.resolution == 0.5);
  CHECK(report.volume_reference == doctest::Approx(octree_volume(g, 0.5)));
  CHECK(report.supplement_degree > 0.5);
  CHECK(report.accuracy == doctest::Approx(0.0));
  CHECK_FALSE(report.baseline_accuracy.has_value());
}
