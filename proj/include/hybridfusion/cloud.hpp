#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <vector>

namespace hybridfusion {

using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;

/// Ordered list of 3D points in meters.
struct PointCloud3 {
  std::vector<Point3> points;
  /// GNSS-mapped position of the cloud's own origin, when known.
  std::optional<Point3> origin;

  PointCloud3() = default;
  explicit PointCloud3(std::vector<Point3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
};

/// SE(3) pose: unit quaternion rotation plus translation.
///
/// The quaternion is normalized and flipped to w >= 0 on construction, so two
/// transforms describing the same rotation compare equal coefficient-wise.
class RigidTransform3 {
 public:
  RigidTransform3() : rotation_(Eigen::Quaterniond::Identity()), translation_(Point3::Zero()) {}
  RigidTransform3(const Eigen::Quaterniond& rotation, const Point3& translation);
  RigidTransform3(const Eigen::Matrix3d& rotation, const Point3& translation);

  static RigidTransform3 identity() { return {}; }
  /// Rotation about +z by `yaw` radians followed by translation.
  static RigidTransform3 from_yaw(double yaw, const Point3& translation = Point3::Zero());
  /// R = Rz(yaw) * Ry(pitch) * Rx(roll).
  static RigidTransform3 from_euler(double roll, double pitch, double yaw, const Point3& translation);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  RigidTransform3 inverse() const;

  /// Rotation angle in [0, pi].
  double angle() const;
  /// (roll, pitch, yaw) with R = Rz(yaw) * Ry(pitch) * Rx(roll).
  Eigen::Vector3d euler() const;

 private:
  Eigen::Quaterniond rotation_;
  Point3 translation_;
};

/// SE(2) pose with the angle kept in (-pi, pi].
class RigidTransform2 {
 public:
  RigidTransform2() : angle_(0.0), translation_(Point2::Zero()) {}
  RigidTransform2(double angle, const Point2& translation);

  static RigidTransform2 identity() { return {}; }

  double angle() const { return angle_; }
  const Point2& translation() const { return translation_; }
  Eigen::Matrix2d rotation_matrix() const;

  Point2 apply(const Point2& p) const { return rotation_matrix() * p + translation_; }
  RigidTransform2 inverse() const;
  /// Yaw-only SE(3) pose with zero z translation.
  RigidTransform3 lift() const;

 private:
  double angle_;
  Point2 translation_;
};

/// Wrap an angle into (-pi, pi].
double normalize_angle(double angle);

/// outer ∘ inner: applying the result equals applying `inner` first, then `outer`.
RigidTransform3 compose(const RigidTransform3& outer, const RigidTransform3& inner);
RigidTransform2 compose(const RigidTransform2& outer, const RigidTransform2& inner);

PointCloud3 apply_transform(const PointCloud3& cloud, const RigidTransform3& transform);
std::vector<Point2> apply_transform(const std::vector<Point2>& points, const RigidTransform2& transform);

/// Replace every occupied voxel (floor(p / leaf) binning) by the centroid of
/// its members. Output is ordered by voxel key. Throws ParameterError when
/// leaf <= 0.
PointCloud3 voxel_downsample(const PointCloud3& cloud, double leaf);

/// Arithmetic mean of the points. Throws ParameterError on an empty cloud.
Point3 centroid(const PointCloud3& cloud);

/// Axis-aligned bounds; throws ParameterError on an empty cloud.
Eigen::AlignedBox3d bounds(const PointCloud3& cloud);

}  // namespace hybridfusion
