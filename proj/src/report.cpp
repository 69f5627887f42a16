#include "hybridfusion/report.hpp"

#include <fstream>
#include <json.hpp>
#include <numbers>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

using nlohmann::ordered_json;

ordered_json transform_object(const RigidTransform3& t) {
  const Eigen::Quaterniond q = t.rotation();
  const Point3 p = t.translation();
  return {{"quaternion", {{"w", q.w()}, {"x", q.x()}, {"y", q.y()}, {"z", q.z()}}},
          {"translation", {{"x", p.x()}, {"y", p.y()}, {"z", p.z()}}}};
}

ordered_json patch_id(const PatchId& id) { return {{"row", id.row}, {"col", id.col}}; }

ordered_json counts_object(const StageCounts& c) {
  return {{"lidar_patches", c.lidar_patches},
          {"visual_patches", c.visual_patches},
          {"salient", c.salient},
          {"with_annulus_candidates", c.with_annulus_candidates},
          {"annulus_candidates", c.annulus_candidates},
          {"with_descriptor_candidates", c.with_descriptor_candidates},
          {"descriptor_candidates", c.descriptor_candidates},
          {"with_neighbor_candidates", c.with_neighbor_candidates},
          {"neighbor_candidates", c.neighbor_candidates},
          {"registered", c.registered},
          {"clusters", c.clusters},
          {"winning_cluster", c.winning_cluster}};
}

ordered_json ndt_object(const NdtParams& p) {
  return {{"cell_size", p.cell_size},
          {"max_iterations", p.max_iterations},
          {"step_epsilon", p.step_epsilon},
          {"outlier_floor", p.outlier_floor},
          {"min_points_per_cell", p.min_points_per_cell}};
}

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string transform_json(const PipelineResult& result) {
  ordered_json j = transform_object(result.final_transform);
  j["method"] = "patch";
  ordered_json patches = ordered_json::array();
  for (const PatchTransform& p : result.patch_transforms) {
    ordered_json entry{{"lidar_patch", patch_id(p.lidar_patch_id)},
                       {"visual_patch", patch_id(p.matched_visual_patch_id)},
                       {"match_score", p.match_score}};
    entry.update(transform_object(p.transform));
    patches.push_back(std::move(entry));
  }
  j["patches"] = std::move(patches);
  j["counts"] = counts_object(result.report.counts);
  return dump(j);
}

std::string baseline_transform_json(const RegistrationResult3& result) {
  ordered_json j = transform_object(result.transform);
  j["method"] = "icp";
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["final_score"] = result.final_score;
  return dump(j);
}

std::string report_json(const PipelineResult& result, const PipelineParams& params) {
  const PipelineReport& r = result.report;
  ordered_json timings = ordered_json::object();
  for (const auto& [stage, ms] : r.timings_ms) timings[stage] = ms;
  ordered_json j{
      {"counts", counts_object(r.counts)},
      {"grid_step", r.grid_step},
      {"visual_points", r.visual_points},
      {"lidar_points", r.lidar_points},
      {"ground_offset", r.ground_offset},
      {"final_refinement", {{"converged", r.final_refinement_converged}, {"score", r.final_refinement_score}}},
      {"fused_before_refinement", transform_object(result.fused)},
      {"timings_ms", std::move(timings)},
      {"params",
       {{"seed", params.seed},
        {"workers", params.workers},
        {"match_dist", params.match_dist},
        {"grid_step_ratio", params.grid_step_ratio},
        {"voxel_leaf", params.voxel_leaf},
        {"esf_samples", params.esf_samples},
        {"ndt_2d_levels", params.ndt_2d_levels},
        {"yaw_search_deg", degrees(params.yaw_search)},
        {"yaw_step_deg", degrees(params.yaw_step)},
        {"level_ground", params.level_ground},
        {"selection",
         {{"eta", params.selection.eta},
          {"lambda", params.selection.lambda},
          {"phi_deg", degrees(params.selection.phi)},
          {"rho_min", params.selection.rho_min},
          {"neighbor_rho_min", params.selection.neighbor_rho_min},
          {"neighbor_min_points", params.selection.neighbor_min_points}}},
        {"boundary",
         {{"height", params.boundary.h},
          {"k", params.boundary.k},
          {"gap_threshold_deg", degrees(params.boundary.gap_threshold)},
          {"ground_percentile", params.boundary.ground_percentile},
          {"projection_leaf", params.boundary.projection_leaf}}},
        {"ndt2d", ndt_object(params.ndt_2d)},
        {"ndt3d", ndt_object(params.ndt_3d)},
        {"ndt_final", ndt_object(params.ndt_final)},
        {"fusion", {{"epsilon", params.cluster.epsilon}, {"omega_deg", degrees(params.cluster.omega)}}}}}};
  return dump(j);
}

std::string truth_json(const SyntheticScene& scene) {
  ordered_json j{{"ground_truth", transform_object(scene.ground_truth)},
                 {"gnss_origin", {scene.gnss_origin.x(), scene.gnss_origin.y(), scene.gnss_origin.z()}},
                 {"visual_points", scene.visual.size()},
                 {"lidar_points", scene.lidar.size()}};
  return dump(j);
}

std::string metrics_json(const EvaluationReport& report) {
  ordered_json j{{"resolution", report.resolution},
                 {"volume_G", report.volume_reference},
                 {"volume_O", report.volume_fused},
                 {"supplement_degree", report.supplement_degree},
                 {"accuracy", report.accuracy}};
  if (report.baseline_accuracy) j["baseline_accuracy"] = *report.baseline_accuracy;
  return dump(j);
}

RigidTransform3 parse_transform_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    const auto& q = j.at("quaternion");
    const auto& t = j.at("translation");
    const Eigen::Quaterniond rotation(q.at("w").get<double>(), q.at("x").get<double>(), q.at("y").get<double>(),
                                      q.at("z").get<double>());
    if (!(rotation.norm() > 0.0)) throw ConfigError("transform.json: zero quaternion");
    return {rotation.normalized(), Point3(t.at("x").get<double>(), t.at("y").get<double>(), t.at("z").get<double>())};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("transform.json: ") + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace hybridfusion
