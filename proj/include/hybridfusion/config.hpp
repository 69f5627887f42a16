#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hybridfusion/pipeline.hpp"
#include "hybridfusion/synth.hpp"

namespace hybridfusion {

/// Parses pipeline settings from key = value text with [section] headers.
///
/// Sections and keys (angles in degrees):
///   [pipeline]  seed workers match_dist grid_step_ratio voxel_leaf esf_samples
///               ndt_2d_levels yaw_search_deg yaw_step_deg level_ground
///   [selection] eta lambda phi_deg rho_min neighbor_rho_min neighbor_min_points
///   [boundary]  height k gap_threshold_deg ground_percentile projection_leaf
///   [ndt2d] [ndt3d] [ndt_final]
///               cell_size max_iterations step_epsilon outlier_floor min_points_per_cell
///   [fusion]    epsilon omega_deg
/// Unset keys keep their defaults. Unknown sections or keys and malformed
/// values throw ConfigError.
PipelineParams parse_pipeline_config(std::string_view text);
PipelineParams load_pipeline_config(const std::filesystem::path& path);

/// Parses a synthetic scene description.
///
///   [scene]    preset (none | four_buildings) seed overview_density
///              overview_facade_fraction overview_ground_density ground_min
///              ground_max street_density street_ground_density street_start
///              street_end street_half_width lidar_range noise_sigma gnss_noise_sigma
///   [truth]    x y z roll_deg pitch_deg yaw_deg
///   [building<name>]  center width depth height   (one section per building)
/// Pairs such as `center` are written "x,y". Buildings listed in the file
/// replace the preset's.
SceneConfig parse_scene_config(std::string_view text);
SceneConfig load_scene_config(const std::filesystem::path& path);

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hybridfusion
