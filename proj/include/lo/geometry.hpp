#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Tangent coordinates of SE(3). Stacked as [angular; linear] wherever a 6-vector is used.
struct Twist {
  Vec3 angular = Vec3::Zero();
  Vec3 linear = Vec3::Zero();

  Vec6 vector() const;
  static Twist from_vector(const Vec6& v);
  Twist scaled(double s) const { return {angular * s, linear * s}; }
};

/// Rigid transform. Rotation is a unit quaternion (Eigen storage order x, y, z, w).
/// Unless stated otherwise a Pose maps body/LiDAR coordinates into the world frame.
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);

  static Pose identity() { return {}; }
  static Pose translate(double x, double y, double z);
  static Pose rot_x(double angle);
  static Pose rot_y(double angle);
  static Pose rot_z(double angle);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  Pose inverse() const;
  /// Rotation angle in [0, pi].
  double angle() const;

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Vec3 translation_ = Vec3::Zero();
};

Mat3 skew(const Vec3& v);

/// Applies b then a.
Pose compose(const Pose& a, const Pose& b);
/// inverse(a) * b, so compose(a, between(a, b)) == b.
Pose between(const Pose& a, const Pose& b);
Vec3 transform_point(const Pose& x, const Vec3& p);

Eigen::Quaterniond so3_exp(const Vec3& omega);
/// Axis-angle of a unit quaternion; angle in [0, pi].
Vec3 so3_log(const Eigen::Quaterniond& q);

Pose exp(const Twist& t);
/// Throws ConfigError when the rotation angle is >= pi - 1e-6.
Twist log(const Pose& x);

/// Geodesic interpolation a * exp(alpha * log(between(a, b))). alpha must lie in [0, 1].
Pose interpolate(const Pose& a, const Pose& b, double alpha);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }
inline Vec3 operator*(const Pose& x, const Vec3& p) { return transform_point(x, p); }

}  // namespace lo
