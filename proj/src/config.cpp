#include "hybridfusion/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

using boost::property_tree::ptree;

constexpr double kDeg = std::numbers::pi / 180.0;

ptree read_ini(std::string_view text) {
  std::istringstream in{std::string(text)};
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) throw ConfigError("config: key '" + name + "' outside any section");
  }
  return tree;
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double to_double(const std::string& value, const std::string& context) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError(context + ": expected a number, got '" + value + "'");
  }
  return out;
}

std::size_t to_count(const std::string& value, const std::string& context) {
  std::size_t out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(context + ": expected a non-negative integer, got '" + value + "'");
  return out;
}

bool to_bool(const std::string& value, const std::string& context) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(context + ": expected true or false, got '" + value + "'");
}

Point2 to_pair(const std::string& value, const std::string& context) {
  const auto comma = value.find(',');
  if (comma == std::string::npos) throw ConfigError(context + ": expected 'x,y', got '" + value + "'");
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  return {to_double(trim(value.substr(0, comma)), context), to_double(trim(value.substr(comma + 1)), context)};
}

using Setter = std::function<void(const std::string& value, const std::string& context)>;
using SectionBinding = std::map<std::string, Setter>;

Setter real(double& target, double scale = 1.0) {
  return [&target, scale](const std::string& v, const std::string& c) { target = to_double(v, c) * scale; };
}
Setter count(std::size_t& target) {
  return [&target](const std::string& v, const std::string& c) { target = to_count(v, c); };
}
Setter seed(std::uint64_t& target) {
  return [&target](const std::string& v, const std::string& c) { target = to_count(v, c); };
}
Setter flag(bool& target) {
  return [&target](const std::string& v, const std::string& c) { target = to_bool(v, c); };
}
Setter pair(Point2& target) {
  return [&target](const std::string& v, const std::string& c) { target = to_pair(v, c); };
}

void apply(const std::string& name, const ptree& section, const SectionBinding& binding) {
  for (const auto& [key, node] : section) {
    const auto it = binding.find(key);
    if (it == binding.end()) throw ConfigError("config: unknown key " + where(name, key));
    if (!node.empty()) throw ConfigError("config: nested value under " + where(name, key));
    it->second(node.data(), where(name, key));
  }
}

SectionBinding ndt_binding(NdtParams& p) {
  return {{"cell_size", real(p.cell_size)},
          {"max_iterations", count(p.max_iterations)},
          {"step_epsilon", real(p.step_epsilon)},
          {"outlier_floor", real(p.outlier_floor)},
          {"min_points_per_cell", count(p.min_points_per_cell)}};
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

PipelineParams parse_pipeline_config(std::string_view text) {
  PipelineParams p;
  std::map<std::string, SectionBinding> sections;
  sections["pipeline"] = {{"seed", seed(p.seed)},
                          {"workers", count(p.workers)},
                          {"match_dist", real(p.match_dist)},
                          {"grid_step_ratio", real(p.grid_step_ratio)},
                          {"voxel_leaf", real(p.voxel_leaf)},
                          {"esf_samples", count(p.esf_samples)},
                          {"ndt_2d_levels", count(p.ndt_2d_levels)},
                          {"yaw_search_deg", real(p.yaw_search, kDeg)},
                          {"yaw_step_deg", real(p.yaw_step, kDeg)},
                          {"level_ground", flag(p.level_ground)}};
  sections["selection"] = {{"eta", count(p.selection.eta)},
                           {"lambda", real(p.selection.lambda)},
                           {"phi_deg", real(p.selection.phi, kDeg)},
                           {"rho_min", real(p.selection.rho_min)},
                           {"neighbor_rho_min", real(p.selection.neighbor_rho_min)},
                           {"neighbor_min_points", count(p.selection.neighbor_min_points)}};
  sections["boundary"] = {{"height", real(p.boundary.h)},
                          {"k", count(p.boundary.k)},
                          {"gap_threshold_deg", real(p.boundary.gap_threshold, kDeg)},
                          {"ground_percentile", real(p.boundary.ground_percentile)},
                          {"projection_leaf", real(p.boundary.projection_leaf)}};
  sections["ndt2d"] = ndt_binding(p.ndt_2d);
  sections["ndt3d"] = ndt_binding(p.ndt_3d);
  sections["ndt_final"] = ndt_binding(p.ndt_final);
  sections["fusion"] = {{"epsilon", real(p.cluster.epsilon)}, {"omega_deg", real(p.cluster.omega, kDeg)}};

  for (const auto& [name, section] : read_ini(text)) {
    const auto it = sections.find(name);
    if (it == sections.end()) throw ConfigError("config: unknown section [" + name + "]");
    apply(name, section, it->second);
  }
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return p;
}

PipelineParams load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_text_file(path));
}

SceneConfig parse_scene_config(std::string_view text) {
  const ptree tree = read_ini(text);

  SceneConfig config;
  if (const auto scene = tree.get_child_optional("scene")) {
    if (const auto preset = scene->get_child_optional("preset")) {
      const std::string name = preset->data();
      if (name == "four_buildings") {
        config = four_building_scene(config.seed);
      } else if (name != "none") {
        throw ConfigError("config: unknown preset '" + name + "'");
      }
    }
  }

  std::string preset_name;
  SectionBinding scene{{"preset", [&](const std::string& v, const std::string&) { preset_name = v; }},
                       {"seed", seed(config.seed)},
                       {"overview_density", real(config.overview_density)},
                       {"overview_facade_fraction", real(config.overview_facade_fraction)},
                       {"overview_ground_density", real(config.overview_ground_density)},
                       {"ground_min", pair(config.ground_min)},
                       {"ground_max", pair(config.ground_max)},
                       {"street_density", real(config.street_density)},
                       {"street_ground_density", real(config.street_ground_density)},
                       {"street_start", pair(config.street_start)},
                       {"street_end", pair(config.street_end)},
                       {"street_half_width", real(config.street_half_width)},
                       {"lidar_range", real(config.lidar_range)},
                       {"noise_sigma", real(config.noise_sigma)},
                       {"gnss_noise_sigma", real(config.gnss_noise_sigma)}};

  Point3 t = config.ground_truth.translation();
  Eigen::Vector3d rpy = config.ground_truth.euler() / kDeg;
  bool truth_given = false;
  SectionBinding truth{{"x", real(t.x())},         {"y", real(t.y())},          {"z", real(t.z())},
                       {"roll_deg", real(rpy[0])}, {"pitch_deg", real(rpy[1])}, {"yaw_deg", real(rpy[2])}};

  std::vector<Building> buildings;
  for (const auto& [name, section] : tree) {
    if (name == "scene") {
      apply(name, section, scene);
    } else if (name == "truth") {
      apply(name, section, truth);
      truth_given = true;
    } else if (name.rfind("building", 0) == 0) {
      Building b;
      bool has_center = false;
      SectionBinding binding{{"center", [&](const std::string& v, const std::string& c) {
                                b.center = to_pair(v, c);
                                has_center = true;
                              }},
                             {"width", real(b.width)},
                             {"depth", real(b.depth)},
                             {"height", real(b.height)}};
      apply(name, section, binding);
      if (!has_center) throw ConfigError("config: [" + name + "] needs a center");
      buildings.push_back(b);
    } else {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  if (!buildings.empty()) config.buildings = std::move(buildings);
  if (truth_given) {
    config.ground_truth = RigidTransform3::from_euler(rpy[0] * kDeg, rpy[1] * kDeg, rpy[2] * kDeg, t);
  }
  config.validate();
  return config;
}

SceneConfig load_scene_config(const std::filesystem::path& path) { return parse_scene_config(read_text_file(path)); }

}  // namespace hybridfusion
