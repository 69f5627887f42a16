#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hybridfusion/cloud.hpp"

namespace hybridfusion {

/// Ensemble-of-shape-functions global descriptor: ten 64-bin histograms.
///
/// Layout (sub-histogram index):
///   0..2  D2 point-pair distance for lines inside / outside / mixed
///   3     D2 occupied fraction of mixed lines
///   4..6  D3 sqrt(triangle area) for triangles inside / outside / mixed
///   7..9  A3 triangle angle for triangles inside / outside / mixed
struct Descriptor640 {
  static constexpr std::size_t kHistograms = 10;
  static constexpr std::size_t kBinsPerHistogram = 64;
  static constexpr std::size_t kSize = kHistograms * kBinsPerHistogram;

  std::array<double, kSize> bins{};
  std::size_t sample_count = 0;

  std::span<const double> histogram(std::size_t i) const {
    return std::span<const double>(bins).subspan(i * kBinsPerHistogram, kBinsPerHistogram);
  }
};

/// 64^3 occupancy over the bounding cube of a point set.
class OccupancyGrid {
 public:
  static constexpr int kResolution = 64;

  explicit OccupancyGrid(const PointCloud3& cloud);

  /// Continuous voxel coordinates of `p` (each in [0, 64]).
  Eigen::Vector3d to_voxel(const Point3& p) const { return (p - min_) * scale_; }
  Eigen::Vector3i voxel_of(const Point3& p) const;
  bool occupied(int x, int y, int z) const;
  /// Edge length of the bounding cube.
  double cube_edge() const { return edge_; }

  /// Walk the voxels between two points; returns (occupied, visited) counts.
  std::pair<int, int> trace(const Point3& a, const Point3& b) const;

 private:
  Point3 min_;
  double edge_ = 0.0;
  double scale_ = 0.0;
  std::vector<std::uint8_t> cells_;
};

inline constexpr std::size_t kDefaultEsfSamples = 20000;

/// Deterministic for a fixed seed. Throws DescriptorError for fewer than 3 points.
Descriptor640 compute_esf(const PointCloud3& patch, std::size_t n_samples = kDefaultEsfSamples,
                          std::uint64_t seed = 0);

/// Mean-centered copy of a vector with its Euclidean norm, so repeated
/// correlations against the same descriptor skip the centering pass.
struct CenteredVector {
  std::vector<double> values;
  double norm = 0.0;

  static CenteredVector from(std::span<const double> x);
};

/// Pearson correlation coefficient. Throws SimilarityError on zero variance
/// or mismatched lengths.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(const CenteredVector& x, const CenteredVector& y);
double pearson(const Descriptor640& x, const Descriptor640& y);

}  // namespace hybridfusion
