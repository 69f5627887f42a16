#include <doctest.h>

#include <numbers>

#include "hybridfusion/boundary.hpp"
#include "hybridfusion/errors.hpp"
#include "hybridfusion/evaluation.hpp"
#include "hybridfusion/pipeline.hpp"
#include "hybridfusion/spatial_index.hpp"
#include "hybridfusion/synth.hpp"
#include "test_support.hpp"

using namespace hybridfusion;
using testing_support::Rng;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double translation_error(const RigidTransform3& a, const RigidTransform3& b) {
  return (a.translation() - b.translation()).norm();
}

double rotation_error(const RigidTransform3& a, const RigidTransform3& b) {
  return compose(a, b.inverse()).angle();
}

PointCloud3 merged(const std::vector<PointCloud3>& parts) {
  PointCloud3 out;
  for (const auto& p : parts) out.points.insert(out.points.end(), p.points.begin(), p.points.end());
  return out;
}

}  // namespace

TEST_CASE("initial guesses") {
  const Point3 origin(10, 10, 0);
  const auto plain = initial_guesses_2d(origin, Point3(20, 10, 0), Point3(10, 20, 0));
  REQUIRE(plain.size() == 2);
  CHECK(plain[0].angle() == 0.0);
  CHECK(plain[0].translation().norm() == 0.0);
  CHECK(plain[1].angle() == doctest::Approx(std::numbers::pi / 2));
  // Rotation is about the GNSS origin, which stays fixed.
  CHECK((plain[1].apply(Point2(10, 10)) - Point2(10, 10)).norm() < 1e-12);
  CHECK((plain[1].apply(Point2(20, 10)) - Point2(10, 20)).norm() < 1e-12);

  const auto swept = initial_guesses_2d(origin, Point3(20, 10, 0), Point3(20, 10, 0), 10 * kDeg, 5 * kDeg);
  REQUIRE(swept.size() == 5);
  CHECK(swept[0].angle() == 0.0);
  for (const auto& t : swept) CHECK((t.apply(Point2(10, 10)) - Point2(10, 10)).norm() < 1e-9);
  CHECK(swept.back().angle() == doctest::Approx(-10 * kDeg));

  const PipelineParams defaults;
  const auto full = initial_guesses_2d(origin, Point3(20, 10, 0), Point3(20, 10, 0), defaults.yaw_search,
                                       defaults.yaw_step);
  REQUIRE(full.size() == 13);
  CHECK(full.back().angle() == doctest::Approx(-30 * kDeg));
}

TEST_CASE("pipeline params validation") {
  PipelineParams p;
  CHECK_NOTHROW(p.validate());
  p.ndt_2d_levels = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = PipelineParams{};
  p.yaw_search = 0.3;
  p.yaw_step = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = PipelineParams{};
  p.match_dist = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("ground level offset") {
  const PointCloud3 g = testing_support::box_building(Point2(0, 0), 10, 10, 6, 0.5);
  const PointCloud3 l = apply_transform(g, RigidTransform3(Eigen::Quaterniond::Identity(), Point3(0, 0, -2.5)));
  CHECK(ground_level_offset(g, l, 0.05) == doctest::Approx(2.5));
  CHECK(ground_level_offset(g, g, 0.05) == doctest::Approx(0.0));
}

TEST_CASE("register_patch: two-candidate harness and disjoint candidates") {
  Rng rng(111);
  const PointCloud3 building = testing_support::box_building(Point2(10.7, 11.3), 10, 8, 8, 0.3);
  PointCloud3 noisy = building;
  for (auto& p : noisy.points) p += Point3(rng.gaussian(0.02), rng.gaussian(0.02), rng.gaussian(0.02));
  const PointCloud3 far_building = testing_support::box_building(Point2(500.7, 11.3), 10, 8, 8, 0.3);
  const PointCloud3 perturbed =
      apply_transform(testing_support::box_building(Point2(40.7, 11.3), 10, 8, 8, 0.3),
                      RigidTransform3::from_yaw(0.05, Point3(0.3, 0.2, 0.0)));

  const double step = 30.0;
  const Point2 origin(-5.0, -5.0);
  const PatchGrid lidar_grid = partition(noisy, step, origin);
  const PatchGrid visual_grid = partition(merged({building, perturbed, far_building}), step, origin);
  const PatchId lidar_id{0, 0};
  REQUIRE(lidar_grid.contains(lidar_id));
  const PatchId exact_id{0, 0};
  const PatchId perturbed_id{0, 1};
  const PatchId far_id{0, 16};
  REQUIRE(visual_grid.contains(perturbed_id));
  REQUIRE(visual_grid.contains(far_id));

  PipelineParams params;
  params.selection.neighbor_min_points = 1000000;
  const PatchContext context{lidar_grid, visual_grid, Point3(10, -20, 0)};

  CandidateSet both{lidar_id, {Candidate{perturbed_id, 0.9}, Candidate{exact_id, 0.8}}};
  const auto reg = register_patch(lidar_id, both, context, params);
  REQUIRE(reg.has_value());
  CHECK(reg->patch.matched_visual_patch_id == exact_id);
  CHECK(reg->patch.match_score < params.match_dist);
  CHECK(translation_error(reg->patch.transform, RigidTransform3::identity()) < 0.2);
  CHECK(rotation_error(reg->patch.transform, RigidTransform3::identity()) < 1.0 * kDeg);
  CHECK((reg->patch.transform.matrix() - compose(reg->transform_3d, reg->transform_2d.lift()).matrix()).norm() < 1e-9);

  CandidateSet disjoint{lidar_id, {Candidate{far_id, 0.9}}};
  CHECK_FALSE(register_patch(lidar_id, disjoint, context, params).has_value());
  CHECK_FALSE(register_patch(lidar_id, CandidateSet{lidar_id, {}}, context, params).has_value());
}

TEST_CASE("pipeline self-registration and cross-view recovery") {
  const SyntheticScene scene = synth_scene(four_building_scene(4));
  PipelineParams params;

  SUBCASE("subset of G under identity") {
    PointCloud3 subset;
    for (const Point3& p : scene.visual.points) {
      if (p.x() < 60.0) subset.points.push_back(p);
    }
    const PipelineResult r = run_pipeline(scene.visual, subset, Point3::Zero(), params);
    CHECK(translation_error(r.final_transform, RigidTransform3::identity()) < 0.2);
    CHECK(rotation_error(r.final_transform, RigidTransform3::identity()) < 1.0 * kDeg);
  }

  SUBCASE("cross-view pair") {
    const PipelineResult r = run_pipeline(scene.visual, scene.lidar, scene.gnss_origin, params);
    CHECK(translation_error(r.final_transform, scene.ground_truth) < 0.5);
    CHECK(rotation_error(r.final_transform, scene.ground_truth) < 2.0 * kDeg);
    CHECK(r.final_transform.rotation().w() >= 0.0);
    for (const auto& k : r.patch_transforms) CHECK(k.match_score < params.match_dist);
    CHECK(r.report.counts.registered == r.patch_transforms.size());
    CHECK(r.report.counts.winning_cluster <= r.report.counts.registered);

    // Frame sanity: better than the GNSS-only alignment.
    const BoundaryParams& bp = params.boundary;
    const double before = boundary_accuracy(apply_transform(scene.lidar, gnss_alignment(scene.gnss_origin)), scene.visual, bp);
    const double after = boundary_accuracy(apply_transform(scene.lidar, r.final_transform), scene.visual, bp);
    CHECK(after < before);
  }
}

TEST_CASE("pipeline failure when the GNSS origin is far off") {
  const SyntheticScene scene = synth_scene(four_building_scene(1));
  try {
    run_pipeline(scene.visual, scene.lidar, scene.gnss_origin + Point3(5000, 5000, 0), PipelineParams{});
    FAIL("expected PipelineFailure");
  } catch (const PipelineFailure& e) {
    CHECK(e.counts().salient > 0);
    CHECK(e.counts().with_annulus_candidates == 0);
    CHECK(e.counts().registered == 0);
  }
}
