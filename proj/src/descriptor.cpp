#include "hybridfusion/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

constexpr int kRes = OccupancyGrid::kResolution;
constexpr std::size_t kBins = Descriptor640::kBinsPerHistogram;

enum LineClass { kIn = 0, kOut = 1, kMixed = 2 };

std::size_t bin_of(double value, double upper) {
  if (!(upper > 0.0)) return 0;
  const double scaled = value / upper * static_cast<double>(kBins);
  const auto bin = static_cast<std::int64_t>(std::floor(scaled));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(bin, 0, kBins - 1));
}

void normalize(std::span<double> hist) {
  double sum = 0.0;
  for (double v : hist) sum += v;
  if (sum > 0.0) {
    for (double& v : hist) v /= sum;
  }
}

struct Sample {
  double sqrt_area;
  double angle;
  int triangle_class;
};

}  // namespace

OccupancyGrid::OccupancyGrid(const PointCloud3& cloud) : cells_(kRes * kRes * kRes, 0) {
  const Eigen::AlignedBox3d box = bounds(cloud);
  min_ = box.min();
  edge_ = box.sizes().maxCoeff();
  scale_ = edge_ > 0.0 ? kRes / edge_ : 0.0;
  for (const auto& p : cloud.points) {
    const Eigen::Vector3i v = voxel_of(p);
    cells_[(v.x() * kRes + v.y()) * kRes + v.z()] = 1;
  }
}

Eigen::Vector3i OccupancyGrid::voxel_of(const Point3& p) const {
  const Eigen::Vector3d v = to_voxel(p);
  Eigen::Vector3i out;
  for (int i = 0; i < 3; ++i) out[i] = std::clamp(static_cast<int>(std::floor(v[i])), 0, kRes - 1);
  return out;
}

bool OccupancyGrid::occupied(int x, int y, int z) const {
  if (x < 0 || y < 0 || z < 0 || x >= kRes || y >= kRes || z >= kRes) return false;
  return cells_[(x * kRes + y) * kRes + z] != 0;
}

std::pair<int, int> OccupancyGrid::trace(const Point3& a, const Point3& b) const {
  const Eigen::Vector3d va = to_voxel(a);
  const Eigen::Vector3d vb = to_voxel(b);
  const int steps = static_cast<int>(std::ceil((vb - va).cwiseAbs().maxCoeff())) + 1;
  int hits = 0;
  int visited = 0;
  Eigen::Vector3i last(-1, -1, -1);
  for (int s = 0; s < steps; ++s) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(s) / (steps - 1);
    const Eigen::Vector3d v = va + t * (vb - va);
    Eigen::Vector3i cell;
    for (int i = 0; i < 3; ++i) cell[i] = std::clamp(static_cast<int>(std::floor(v[i])), 0, kRes - 1);
    if (cell == last) continue;
    last = cell;
    ++visited;
    if (occupied(cell.x(), cell.y(), cell.z())) ++hits;
  }
  return {hits, visited};
}

Descriptor640 compute_esf(const PointCloud3& patch, std::size_t n_samples, std::uint64_t seed) {
  if (patch.size() < 3) throw DescriptorError("compute_esf: need at least 3 points");
  if (n_samples == 0) throw DescriptorError("compute_esf: n_samples must be positive");

  const OccupancyGrid grid(patch);
  const double max_distance = grid.cube_edge() * std::sqrt(3.0);

  Descriptor640 desc;
  desc.sample_count = n_samples;
  auto hist = [&](std::size_t h, std::size_t bin) -> double& { return desc.bins[h * kBins + bin]; };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, patch.size() - 1);

  std::vector<Sample> samples;
  samples.reserve(n_samples);
  double max_sqrt_area = 0.0;

  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t ia = pick(rng);
    const std::size_t ib = pick(rng);
    const std::size_t ic = pick(rng);
    const std::array<Point3, 3> tri{patch[ia], patch[ib], patch[ic]};

    int in_lines = 0;
    int out_lines = 0;
    for (int e = 0; e < 3; ++e) {
      const Point3& a = tri[e];
      const Point3& b = tri[(e + 1) % 3];
      const double d = (b - a).norm();
      const auto [hits, visited] = grid.trace(a, b);
      LineClass cls = kMixed;
      if (hits == visited) {
        cls = kIn;
        ++in_lines;
      } else if (hits == 0) {
        cls = kOut;
        ++out_lines;
      }
      hist(cls, bin_of(d, max_distance)) += 1.0;
      if (cls == kMixed) {
        hist(3, bin_of(static_cast<double>(hits) / visited, 1.0)) += 1.0;
      }
    }

    const Eigen::Vector3d u = tri[1] - tri[0];
    const Eigen::Vector3d v = tri[2] - tri[0];
    const double sqrt_area = std::sqrt(0.5 * u.cross(v).norm());
    const double nu = u.norm();
    const double nv = v.norm();
    double angle = 0.0;
    if (nu > 0.0 && nv > 0.0) angle = std::acos(std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0));
    const int tri_class = in_lines == 3 ? kIn : (out_lines == 3 ? kOut : kMixed);
    samples.push_back({sqrt_area, angle, tri_class});
    max_sqrt_area = std::max(max_sqrt_area, sqrt_area);
  }

  for (const Sample& s : samples) {
    hist(4 + s.triangle_class, bin_of(s.sqrt_area, max_sqrt_area)) += 1.0;
    hist(7 + s.triangle_class, bin_of(s.angle, std::numbers::pi)) += 1.0;
  }

  for (std::size_t h = 0; h < Descriptor640::kHistograms; ++h) {
    normalize(std::span<double>(desc.bins).subspan(h * kBins, kBins));
  }
  return desc;
}

CenteredVector CenteredVector::from(std::span<const double> x) {
  CenteredVector out;
  if (x.empty()) return out;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  out.values.reserve(x.size());
  double ss = 0.0;
  for (double v : x) {
    out.values.push_back(v - mean);
    ss += (v - mean) * (v - mean);
  }
  out.norm = std::sqrt(ss);
  return out;
}

double pearson(const CenteredVector& x, const CenteredVector& y) {
  if (x.values.size() != y.values.size()) throw SimilarityError("pearson: length mismatch");
  if (!(x.norm > 0.0) || !(y.norm > 0.0)) throw SimilarityError("pearson: zero-variance input");
  double cov = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) cov += x.values[i] * y.values[i];
  return std::clamp(cov / (x.norm * y.norm), -1.0, 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  return pearson(CenteredVector::from(x), CenteredVector::from(y));
}

double pearson(const Descriptor640& x, const Descriptor640& y) {
  return pearson(std::span<const double>(x.bins), std::span<const double>(y.bins));
}

}  // namespace hybridfusion
