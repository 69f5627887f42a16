#include "hybridfusion/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <tuple>

#include "hybridfusion/errors.hpp"

namespace hybridfusion {

namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

RigidTransform3::RigidTransform3(const Eigen::Quaterniond& rotation, const Point3& translation)
    : rotation_(canonical(rotation)), translation_(translation) {}

RigidTransform3::RigidTransform3(const Eigen::Matrix3d& rotation, const Point3& translation)
    : rotation_(canonical(Eigen::Quaterniond(rotation))), translation_(translation) {}

RigidTransform3 RigidTransform3::from_yaw(double yaw, const Point3& translation) {
  return {Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())), translation};
}

RigidTransform3 RigidTransform3::from_euler(double roll, double pitch, double yaw,
                                            const Point3& translation) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  return {q, translation};
}

Eigen::Matrix4d RigidTransform3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform3 RigidTransform3::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return {inv, -(inv * translation_)};
}

double RigidTransform3::angle() const {
  return 2.0 * std::acos(std::min(1.0, std::abs(rotation_.w())));
}

Eigen::Vector3d RigidTransform3::euler() const {
  const Eigen::Matrix3d r = rotation_matrix();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

RigidTransform2::RigidTransform2(double angle, const Point2& translation)
    : angle_(normalize_angle(angle)), translation_(translation) {}

Eigen::Matrix2d RigidTransform2::rotation_matrix() const {
  const double c = std::cos(angle_);
  const double s = std::sin(angle_);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

RigidTransform2 RigidTransform2::inverse() const {
  const Eigen::Matrix2d rt = rotation_matrix().transpose();
  return {-angle_, -(rt * translation_)};
}

RigidTransform3 RigidTransform2::lift() const {
  return RigidTransform3::from_yaw(angle_, Point3(translation_.x(), translation_.y(), 0.0));
}

RigidTransform3 compose(const RigidTransform3& outer, const RigidTransform3& inner) {
  return {outer.rotation() * inner.rotation(), outer.rotation() * inner.translation() + outer.translation()};
}

RigidTransform2 compose(const RigidTransform2& outer, const RigidTransform2& inner) {
  return {outer.angle() + inner.angle(), outer.rotation_matrix() * inner.translation() + outer.translation()};
}

PointCloud3 apply_transform(const PointCloud3& cloud, const RigidTransform3& transform) {
  PointCloud3 out;
  out.points.reserve(cloud.size());
  const Eigen::Matrix3d r = transform.rotation_matrix();
  const Point3& t = transform.translation();
  for (const auto& p : cloud.points) out.points.emplace_back(r * p + t);
  if (cloud.origin) out.origin = r * *cloud.origin + t;
  return out;
}

std::vector<Point2> apply_transform(const std::vector<Point2>& points, const RigidTransform2& transform) {
  std::vector<Point2> out;
  out.reserve(points.size());
  const Eigen::Matrix2d r = transform.rotation_matrix();
  for (const auto& p : points) out.emplace_back(r * p + transform.translation());
  return out;
}

PointCloud3 voxel_downsample(const PointCloud3& cloud, double leaf) {
  if (!(leaf > 0.0)) throw ParameterError("voxel_downsample: leaf must be positive");
  if (cloud.empty()) return PointCloud3{};

  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  struct Binned {
    Key key;
    std::size_t index;
  };
  std::vector<Binned> binned;
  binned.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    binned.push_back({Key{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                          static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                          static_cast<std::int64_t>(std::floor(p.z() / leaf))},
                      i});
  }
  std::stable_sort(binned.begin(), binned.end(),
                   [](const Binned& a, const Binned& b) { return a.key < b.key; });

  PointCloud3 out;
  out.origin = cloud.origin;
  std::size_t begin = 0;
  while (begin < binned.size()) {
    std::size_t end = begin;
    Point3 sum = Point3::Zero();
    while (end < binned.size() && binned[end].key == binned[begin].key) {
      sum += cloud.points[binned[end].index];
      ++end;
    }
    out.points.emplace_back(sum / static_cast<double>(end - begin));
    begin = end;
  }
  return out;
}

Point3 centroid(const PointCloud3& cloud) {
  if (cloud.empty()) throw ParameterError("centroid of an empty cloud");
  Point3 sum = Point3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return sum / static_cast<double>(cloud.size());
}

Eigen::AlignedBox3d bounds(const PointCloud3& cloud) {
  if (cloud.empty()) throw ParameterError("bounds of an empty cloud");
  Eigen::AlignedBox3d box;
  for (const auto& p : cloud.points) box.extend(p);
  return box;
}

}  // namespace hybridfusion
