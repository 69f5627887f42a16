#include "hybridfusion/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

struct Facade {
  Point2 a;
  Point2 b;
  Point2 normal;  // outward
  double height;
};

std::vector<Facade> facades_of(const Building& bld) {
  const double hx = 0.5 * bld.width;
  const double hy = 0.5 * bld.depth;
  const Point2 c = bld.center;
  return {
      {c + Point2(-hx, -hy), c + Point2(hx, -hy), Point2(0, -1), bld.height},
      {c + Point2(hx, -hy), c + Point2(hx, hy), Point2(1, 0), bld.height},
      {c + Point2(hx, hy), c + Point2(-hx, hy), Point2(0, 1), bld.height},
      {c + Point2(-hx, hy), c + Point2(-hx, -hy), Point2(-1, 0), bld.height},
  };
}

bool inside_footprint(const SceneConfig& config, const Point2& p) {
  for (const Building& b : config.buildings) {
    if (std::abs(p.x() - b.center.x()) <= 0.5 * b.width && std::abs(p.y() - b.center.y()) <= 0.5 * b.depth) {
      return true;
    }
  }
  return false;
}

class Sampler {
 public:
  Sampler(std::uint64_t seed, double sigma) : rng_(seed), noise_(0.0, sigma > 0.0 ? sigma : 1.0), sigma_(sigma) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double gaussian(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }

  Point3 noisy(const Point3& p) {
    if (sigma_ <= 0.0) return p;
    return p + Point3(noise_(rng_), noise_(rng_), noise_(rng_));
  }

  /// Vertical rectangle over the facade between heights z0 and z1.
  void facade(const Facade& f, double z0, double z1, double density, PointCloud3& out) {
    const double length = (f.b - f.a).norm();
    const auto n = static_cast<std::size_t>(std::lround(density * length * (z1 - z0)));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = uniform(0.0, 1.0);
      const Point2 xy = f.a + t * (f.b - f.a);
      out.points.push_back(noisy(Point3(xy.x(), xy.y(), uniform(z0, z1))));
    }
  }

  void roof(const Building& b, double density, PointCloud3& out) {
    const auto n = static_cast<std::size_t>(std::lround(density * b.width * b.depth));
    for (std::size_t i = 0; i < n; ++i) {
      const double x = b.center.x() + uniform(-0.5, 0.5) * b.width;
      const double y = b.center.y() + uniform(-0.5, 0.5) * b.depth;
      out.points.push_back(noisy(Point3(x, y, b.height)));
    }
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  double sigma_;
};

bool street_visible(const SceneConfig& config, const Facade& f) {
  const Point2 mid = 0.5 * (f.a + f.b);
  const double length = (config.street_end - config.street_start).norm();
  const auto samples = static_cast<int>(std::ceil(length)) + 1;
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    const Point2 s = config.street_start + t * (config.street_end - config.street_start);
    const Point2 d = s - mid;
    const double dist = d.norm();
    if (dist > 0.0 && dist <= config.lidar_range && f.normal.dot(d) / dist > 0.3) return true;
  }
  return false;
}

}  // namespace

void SceneConfig::validate() const {
  if (buildings.empty()) throw ConfigError("scene: at least one building is required");
  for (const Building& b : buildings) {
    if (!(b.width > 0.0 && b.depth > 0.0 && b.height > 0.0)) throw ConfigError("scene: building sizes must be positive");
  }
  if (!(overview_density > 0.0 && street_density > 0.0)) throw ConfigError("scene: densities must be positive");
  if (overview_ground_density < 0.0 || street_ground_density < 0.0) {
    throw ConfigError("scene: ground densities must be non-negative");
  }
  if (!(overview_facade_fraction >= 0.0 && overview_facade_fraction <= 1.0)) {
    throw ConfigError("scene: overview_facade_fraction must lie in [0, 1]");
  }
  if (noise_sigma < 0.0 || gnss_noise_sigma < 0.0) throw ConfigError("scene: noise must be non-negative");
  if (!(street_half_width >= 0.0 && lidar_range > 0.0)) throw ConfigError("scene: bad street geometry");
  if (!(ground_max.x() > ground_min.x() && ground_max.y() > ground_min.y())) {
    throw ConfigError("scene: ground rectangle is empty");
  }
}

SyntheticScene synth_scene(const SceneConfig& config) {
  config.validate();
  Sampler sampler(config.seed, config.noise_sigma);
  SyntheticScene scene;
  scene.ground_truth = config.ground_truth;

  PointCloud3 lidar_world;
  for (const Building& b : config.buildings) {
    sampler.roof(b, config.overview_density, scene.visual);
    for (const Facade& f : facades_of(b)) {
      const double z0 = (1.0 - config.overview_facade_fraction) * f.height;
      if (z0 < f.height) sampler.facade(f, z0, f.height, config.overview_density, scene.visual);
      if (street_visible(config, f)) sampler.facade(f, 0.0, f.height, config.street_density, lidar_world);
    }
  }

  if (config.overview_ground_density > 0.0) {
    const Point2 size = config.ground_max - config.ground_min;
    const auto n = static_cast<std::size_t>(std::lround(config.overview_ground_density * size.x() * size.y()));
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p(sampler.uniform(config.ground_min.x(), config.ground_max.x()),
                     sampler.uniform(config.ground_min.y(), config.ground_max.y()));
      if (!inside_footprint(config, p)) scene.visual.points.push_back(sampler.noisy(Point3(p.x(), p.y(), 0.0)));
    }
  }

  if (config.street_ground_density > 0.0 && config.street_half_width > 0.0) {
    const Point2 axis = config.street_end - config.street_start;
    const double length = axis.norm();
    const Point2 dir = length > 0.0 ? Point2(axis / length) : Point2(1.0, 0.0);
    const Point2 side(-dir.y(), dir.x());
    const auto n = static_cast<std::size_t>(
        std::lround(config.street_ground_density * length * 2.0 * config.street_half_width));
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p = config.street_start + sampler.uniform(0.0, length) * dir +
                       sampler.uniform(-config.street_half_width, config.street_half_width) * side;
      if (!inside_footprint(config, p)) lidar_world.points.push_back(sampler.noisy(Point3(p.x(), p.y(), 0.0)));
    }
  }

  scene.lidar = apply_transform(lidar_world, config.ground_truth.inverse());
  scene.gnss_origin = config.ground_truth.translation();
  if (config.gnss_noise_sigma > 0.0) {
    for (int i = 0; i < 3; ++i) scene.gnss_origin[i] += sampler.gaussian(config.gnss_noise_sigma);
  }
  return scene;
}

SceneConfig four_building_scene(std::uint64_t seed) {
  SceneConfig config;
  config.buildings = {
      {{15.0, 15.0}, 16.0, 10.0, 15.0},
      {{45.0, 17.0}, 12.0, 14.0, 22.0},
      {{25.0, -16.0}, 14.0, 12.0, 12.0},
      {{70.0, -15.0}, 20.0, 10.0, 18.0},
  };
  config.ground_truth =
      RigidTransform3::from_yaw(15.0 * std::numbers::pi / 180.0, Point3(5.0, 3.0, 0.5));
  config.gnss_noise_sigma = 2.0;
  config.seed = seed;
  return config;
}

}  // namespace hybridfusion
