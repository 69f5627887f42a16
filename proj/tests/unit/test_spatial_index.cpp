#include <doctest.h>

#include <algorithm>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/spatial_index.hpp"
#include "test_support.hpp"

using namespace hybridfusion;
using testing_support::Rng;

TEST_CASE("kd-tree nearest and k-nearest agree with brute force") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud3 cloud = rng.cloud(static_cast<std::size_t>(rng.integer(1, 3000)), -20.0, 20.0);
    const SpatialIndex index = make_index(cloud);
    for (int q = 0; q < 50; ++q) {
      const Point3 query = rng.point(-25.0, 25.0);
      std::vector<Neighbor> all;
      for (std::size_t i = 0; i < cloud.size(); ++i) all.push_back({i, (cloud[i] - query).squaredNorm()});
      std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.squared_distance < b.squared_distance ||
               (a.squared_distance == b.squared_distance && a.index < b.index);
      });
      const Neighbor nn = index.nearest(query);
      CHECK(nn.squared_distance == all.front().squared_distance);

      const std::size_t k = std::min<std::size_t>(cloud.size(), 12);
      const auto knn = index.k_nearest(query, k);
      REQUIRE(knn.size() == k);
      for (std::size_t i = 0; i < k; ++i) CHECK(knn[i].squared_distance == all[i].squared_distance);

      const double radius = rng.uniform(0.5, 6.0);
      std::vector<std::size_t> expected;
      for (const auto& n : all) {
        if (n.squared_distance <= radius * radius) expected.push_back(n.index);
      }
      std::sort(expected.begin(), expected.end());
      CHECK(index.radius_search(query, radius) == expected);
    }
  }
}

TEST_CASE("kd-tree handles duplicates and tiny sets") {
  const PointCloud3 same({Point3(1, 1, 1), Point3(1, 1, 1), Point3(1, 1, 1)});
  const SpatialIndex index = make_index(same);
  const auto knn = index.k_nearest(Point3(0, 0, 0), 5);
  REQUIRE(knn.size() == 3);
  CHECK(knn[0].index == 0);
  CHECK(knn[2].index == 2);
  CHECK_THROWS_AS(SpatialIndex().nearest(Point3::Zero()), MetricError);
  CHECK(SpatialIndex().k_nearest(Point3::Zero(), 3).empty());
}

TEST_CASE("avg nearest distance matches the O(nm) oracle") {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud3 src = rng.cloud(static_cast<std::size_t>(rng.integer(1, 1500)), -10.0, 10.0);
    const PointCloud3 dst = rng.cloud(static_cast<std::size_t>(rng.integer(1, 1500)), -8.0, 12.0);
    const double got = avg_nearest_distance(src, make_index(dst));
    CHECK(std::abs(got - testing_support::avg_nearest_reference(src.points, dst.points)) < 1e-9);

    std::vector<Point2> a, b;
    for (int i = 0; i < 400; ++i) a.push_back(rng.point2(-5, 5));
    for (int i = 0; i < 300; ++i) b.push_back(rng.point2(-5, 5));
    CHECK(std::abs(avg_nearest_distance(a, SpatialIndex2(b)) - testing_support::avg_nearest_reference(a, b)) < 1e-9);
  }
}

TEST_CASE("avg nearest distance is zero on itself and rejects empty sides") {
  Rng rng(9);
  const PointCloud3 cloud = rng.cloud(500, 0, 1);
  CHECK(avg_nearest_distance(cloud, make_index(cloud)) == 0.0);
  CHECK_THROWS_AS(avg_nearest_distance(PointCloud3{}, make_index(cloud)), MetricError);
  CHECK_THROWS_AS(avg_nearest_distance(cloud, make_index(PointCloud3{})), MetricError);
}
