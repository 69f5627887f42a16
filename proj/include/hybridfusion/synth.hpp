#pragma once

#include <cstdint>
#include <vector>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

/// Axis-aligned box building standing on z = 0.
struct Building {
  Point2 center = Point2::Zero();
  double width = 10.0;   // along x
  double depth = 10.0;   // along y
  double height = 10.0;
};

/// Synthetic cross-view scene: an over-view (aerial) cloud G and a street-view
/// (ground LiDAR) cloud L of the same buildings.
struct SceneConfig {
  std::vector<Building> buildings;

  /// Over-view: roofs plus the upper `overview_facade_fraction` of every facade.
  double overview_density = 20.0;
  double overview_facade_fraction = 0.4;
  /// Open ground seen from above; 0 disables it.
  double overview_ground_density = 5.0;
  /// Ground rectangle [min, max] in X-Y.
  Point2 ground_min{-10.0, -30.0};
  Point2 ground_max{100.0, 30.0};

  /// Street-view: facades facing the street at full height plus a ground strip.
  double street_density = 30.0;
  double street_ground_density = 10.0;
  Point2 street_start{-10.0, 0.0};
  Point2 street_end{100.0, 0.0};
  double street_half_width = 8.0;
  /// Facades farther than this from every street point are not seen.
  double lidar_range = 45.0;

  double noise_sigma = 0.03;
  /// Maps the LiDAR frame into the visual frame.
  RigidTransform3 ground_truth = RigidTransform3::identity();
  double gnss_noise_sigma = 2.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError on zero buildings or non-positive sizes/densities.
  void validate() const;
};

struct SyntheticScene {
  PointCloud3 visual;
  /// Street-view cloud in its own frame.
  PointCloud3 lidar;
  RigidTransform3 ground_truth;
  /// True LiDAR origin in the visual frame plus GNSS noise.
  Point3 gnss_origin = Point3::Zero();
};

/// Deterministic for a fixed config.
SyntheticScene synth_scene(const SceneConfig& config);

/// Four buildings along a street, ground truth (5 m, 3 m, 0.5 m, yaw 15 deg),
/// GNSS noise sigma 2 m.
SceneConfig four_building_scene(std::uint64_t seed);

}  // namespace hybridfusion
