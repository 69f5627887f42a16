#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "hybridfusion/cloud_io.hpp"
#include "hybridfusion/config.hpp"
#include "hybridfusion/errors.hpp"
#include "hybridfusion/evaluation.hpp"
#include "hybridfusion/pipeline.hpp"
#include "hybridfusion/report.hpp"
#include "hybridfusion/synth.hpp"

namespace fs = std::filesystem;
using namespace hybridfusion;

namespace {

constexpr int kExitPipelineFailure = 2;
constexpr int kExitIoOrConfig = 3;

Point3 parse_origin(const std::string& text) {
  Point3 p;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &p.x(), &p.y(), &p.z(), &tail) != 3 || !p.allFinite()) {
    throw ConfigError("--gnss-origin expects X,Y,Z, got '" + text + "'");
  }
  return p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

PointCloud3 merge(const PointCloud3& a, const PointCloud3& b) {
  PointCloud3 out = a;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  return out;
}

struct RegisterArgs {
  std::string visual;
  std::string lidar;
  std::string gnss_origin;
  std::string config;
  std::string out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

PipelineParams load_params(const RegisterArgs& args) {
  PipelineParams params = args.config.empty() ? PipelineParams{} : load_pipeline_config(args.config);
  if (args.workers) params.workers = *args.workers;
  if (args.seed) params.seed = *args.seed;
  params.validate();
  return params;
}

void write_registered(const fs::path& dir, const PointCloud3& visual, const PointCloud3& lidar,
                      const RigidTransform3& transform) {
  const PointCloud3 registered = apply_transform(lidar, transform);
  save_cloud(registered, dir / "L_reg.ply");
  save_cloud(merge(visual, registered), dir / "fused.ply");
}

int run_synth(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  SceneConfig config = load_scene_config(config_path);
  if (seed) config.seed = *seed;
  const SyntheticScene scene = synth_scene(config);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  save_cloud(scene.visual, dir / "G.ply");
  save_cloud(scene.lidar, dir / "L.ply");
  write_text_file(dir / "truth.json", truth_json(scene));
  std::cout << "wrote " << scene.visual.size() << " visual and " << scene.lidar.size() << " lidar points to "
            << dir.string() << "\n";
  return 0;
}

int run_register(const RegisterArgs& args) {
  const PipelineParams params = load_params(args);
  const Point3 origin = parse_origin(args.gnss_origin);
  const PointCloud3 visual = load_cloud(args.visual);
  const PointCloud3 lidar = load_cloud(args.lidar);
  const fs::path dir(args.out_dir);
  ensure_dir(dir);
  try {
    const PipelineResult result = run_pipeline(visual, lidar, origin, params);
    write_text_file(dir / "transform.json", transform_json(result));
    write_text_file(dir / "report.json", report_json(result, params));
    write_registered(dir, visual, lidar, result.final_transform);
    const auto& c = result.report.counts;
    std::cout << "registered " << c.registered << " of " << c.salient << " salient patches; " << c.clusters
              << " clusters, the largest holding " << c.winning_cluster << "\n";
    return 0;
  } catch (const PipelineFailure& e) {
    PipelineResult failed;
    failed.report.counts = e.counts();
    write_text_file(dir / "report.json", report_json(failed, params));
    throw;
  }
}

int run_baseline(const RegisterArgs& args, std::size_t max_iterations, double max_corr_dist) {
  const PipelineParams params = load_params(args);
  const Point3 origin = parse_origin(args.gnss_origin);
  const PointCloud3 visual = load_cloud(args.visual);
  const PointCloud3 lidar = load_cloud(args.lidar);
  const fs::path dir(args.out_dir);
  ensure_dir(dir);
  const RegistrationResult3 result = run_icp_baseline(visual, lidar, origin, params, max_iterations, max_corr_dist);
  const std::string text = baseline_transform_json(result);
  write_text_file(dir / "transform.json", text);
  write_text_file(dir / "report.json", text);
  write_registered(dir, visual, lidar, result.transform);
  std::cout << "icp " << (result.converged ? "converged" : "did not converge") << " after " << result.iterations
            << " iterations, rms " << result.final_score << " m\n";
  return 0;
}

int run_evaluate(const std::string& result_path, const std::string& reference_path, const std::string& registered_path,
                 double resolution, const std::string& config_path, const std::string& out_dir) {
  const PipelineParams params = config_path.empty() ? PipelineParams{} : load_pipeline_config(config_path);
  const PointCloud3 fused = load_cloud(result_path);
  const PointCloud3 reference = load_cloud(reference_path);
  const PointCloud3 registered = load_cloud(registered_path);
  const EvaluationReport report = evaluate(fused, reference, registered, resolution, params.boundary);
  const std::string text = metrics_json(report);
  const fs::path dir(out_dir.empty() ? fs::path(result_path).parent_path() : fs::path(out_dir));
  if (!dir.empty()) ensure_dir(dir);
  write_text_file(dir / "metrics.json", text);
  std::cout << text;
  return 0;
}

void add_register_options(CLI::App& cmd, RegisterArgs& args) {
  cmd.add_option("--visual", args.visual, "Over-view cloud (.ply or .pcd)")->required();
  cmd.add_option("--lidar", args.lidar, "Street-view cloud in its own frame")->required();
  cmd.add_option("--gnss-origin", args.gnss_origin, "LiDAR origin in the visual frame, X,Y,Z")->required();
  cmd.add_option("--config", args.config, "Pipeline config file");
  cmd.add_option("--out-dir", args.out_dir, "Output directory")->required();
  cmd.add_option("--workers", args.workers, "Worker threads (overrides the config)");
  cmd.add_option("--seed", args.seed, "Descriptor sampling seed (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-source point cloud registration and fusion"};
  app.require_subcommand(1);

  std::string scene_config;
  std::string synth_out;
  std::optional<std::uint64_t> synth_seed;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic over-view / street-view scene");
  synth->add_option("--config", scene_config, "Scene config file")->required();
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Scene seed (overrides the config)");

  RegisterArgs reg_args;
  CLI::App* reg = app.add_subcommand("register", "Register the LiDAR cloud into the visual cloud");
  add_register_options(*reg, reg_args);

  RegisterArgs icp_args;
  std::size_t icp_iterations = 50;
  double icp_corr = 2.0;
  CLI::App* icp = app.add_subcommand("baseline-icp", "Register with point-to-point ICP from the GNSS alignment");
  add_register_options(*icp, icp_args);
  icp->add_option("--max-iterations", icp_iterations, "ICP iteration cap");
  icp->add_option("--max-corr-dist", icp_corr, "Correspondence distance cutoff in meters");

  std::string result_path, reference_path, registered_path, eval_config, eval_out;
  double resolution = 0.5;
  CLI::App* eval = app.add_subcommand("evaluate", "Supplement degree and boundary accuracy of a fused result");
  eval->add_option("--result", result_path, "Fused cloud")->required();
  eval->add_option("--reference", reference_path, "Visual reference cloud")->required();
  eval->add_option("--registered-lidar", registered_path, "Registered LiDAR cloud")->required();
  eval->add_option("--resolution", resolution, "Octree leaf size in meters");
  eval->add_option("--config", eval_config, "Pipeline config (boundary settings)");
  eval->add_option("--out-dir", eval_out, "Where to write metrics.json (default: next to --result)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitIoOrConfig;
  }

  try {
    if (*synth) return run_synth(scene_config, synth_out, synth_seed);
    if (*reg) return run_register(reg_args);
    if (*icp) return run_baseline(icp_args, icp_iterations, icp_corr);
    if (*eval) return run_evaluate(result_path, reference_path, registered_path, resolution, eval_config, eval_out);
  } catch (const PipelineError& e) {
    std::cerr << "pipeline failure: " << e.what() << "\n";
    return kExitPipelineFailure;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIoOrConfig;
  } catch (const UnsupportedFormatError& e) {
    std::cerr << "unsupported format: " << e.what() << "\n";
    return kExitIoOrConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIoOrConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitIoOrConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitIoOrConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
