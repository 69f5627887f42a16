#include <doctest.h>

#include <json.hpp>

#include "hybridfusion/errors.hpp"
#include "hybridfusion/report.hpp"

using namespace hybridfusion;

namespace {

PipelineResult sample_result() {
  PipelineResult r;
  // A quaternion with negative w on input; the stored form has w >= 0.
  const Eigen::Quaterniond q(-0.9, 0.1, -0.3, 0.2);
  r.final_transform = RigidTransform3(q.normalized(), Point3(5.25, -3.5, 0.125));
  r.fused = r.final_transform;
  r.patch_transforms.push_back(PatchTransform{PatchId{2, 3}, RigidTransform3::from_yaw(0.1), 0.25, PatchId{4, 5}});
  r.report.counts.salient = 7;
  r.report.counts.registered = 1;
  r.report.timings_ms = {{"partition", 12.5}};
  return r;
}

}  // namespace

TEST_CASE("transform.json content") {
  const PipelineResult r = sample_result();
  const std::string text = transform_json(r);
  const auto j = nlohmann::json::parse(text);
  CHECK(j["quaternion"]["w"].get<double>() >= 0.0);
  CHECK(j["translation"]["x"].get<double>() == 5.25);
  REQUIRE(j["patches"].size() == 1);
  CHECK(j["patches"][0]["lidar_patch"]["row"] == 2);
  CHECK(j["patches"][0]["lidar_patch"]["col"] == 3);
  CHECK(j["patches"][0]["match_score"].get<double>() == 0.25);
  CHECK(j["counts"]["salient"] == 7);
  CHECK(text.find("timings") == std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(transform_json(r) == text);
}

TEST_CASE("transform.json parses back") {
  const PipelineResult r = sample_result();
  const RigidTransform3 back = parse_transform_json(transform_json(r));
  CHECK((back.matrix() - r.final_transform.matrix()).norm() < 1e-12);
  CHECK_THROWS_AS(parse_transform_json("not json"), ConfigError);
  CHECK_THROWS_AS(parse_transform_json("{\"quaternion\": 3}"), ConfigError);
}

TEST_CASE("report, metrics and truth documents") {
  const PipelineResult r = sample_result();
  const auto report = nlohmann::json::parse(report_json(r, PipelineParams{}));
  CHECK(report.contains("timings_ms"));
  CHECK(report.contains("params"));

  EvaluationReport e;
  e.resolution = 0.5;
  e.volume_reference = 217.49;
  e.volume_fused = 287.57;
  e.supplement_degree = 0.3222;
  e.accuracy = 0.1;
  const auto m = nlohmann::json::parse(metrics_json(e));
  CHECK(m["volume_G"].get<double>() == 217.49);
  CHECK(m["volume_O"].get<double>() == 287.57);
  CHECK(m["supplement_degree"].get<double>() == 0.3222);
  CHECK(m["accuracy"].get<double>() == 0.1);
  CHECK_FALSE(m.contains("baseline_accuracy"));

  SyntheticScene s;
  s.ground_truth = RigidTransform3::from_yaw(0.2, Point3(1, 2, 3));
  s.gnss_origin = Point3(1.5, 2.5, 3.5);
  const auto t = nlohmann::json::parse(truth_json(s));
  CHECK(t["gnss_origin"][0].get<double>() == 1.5);
  CHECK(t.contains("ground_truth"));
}
