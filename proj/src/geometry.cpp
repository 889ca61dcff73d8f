#include "lo/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lo/error.hpp"

namespace lo {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Vec6 Twist::vector() const {
  Vec6 v;
  v << angular, linear;
  return v;
}

Twist Twist::from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : rotation_(rotation.normalized()), translation_(translation) {}

Pose Pose::translate(double x, double y, double z) {
  return {Eigen::Quaterniond::Identity(), Vec3(x, y, z)};
}

Pose Pose::rot_x(double angle) {
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, Vec3::UnitX())), Vec3::Zero()};
}

Pose Pose::rot_y(double angle) {
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, Vec3::UnitY())), Vec3::Zero()};
}

Pose Pose::rot_z(double angle) {
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, Vec3::UnitZ())), Vec3::Zero()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond q_inv = rotation_.conjugate();
  return {q_inv, -(q_inv * translation_)};
}

double Pose::angle() const {
  return 2.0 * std::atan2(rotation_.vec().norm(), std::abs(rotation_.w()));
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose between(const Pose& a, const Pose& b) { return compose(a.inverse(), b); }

Vec3 transform_point(const Pose& x, const Vec3& p) {
  return x.rotation() * p + x.translation();
}

Eigen::Quaterniond so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  double w;
  double k;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    k = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  Eigen::Quaterniond q(w, k * omega.x(), k * omega.y(), k * omega.z());
  return q.normalized();
}

Vec3 so3_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double n = q.vec().norm();
  const double theta = 2.0 * std::atan2(n, q.w());
  if (theta < kSmallAngle) {
    // 2 atan(n/w) / n ~ (2/w) (1 - n^2 / (3 w^2))
    const double w = q.w();
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * q.vec();
  }
  return (theta / n) * q.vec();
}

Pose exp(const Twist& t) {
  const Vec3& omega = t.angular;
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  Mat3 v;
  if (theta < kSmallAngle) {
    v = Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  } else {
    const double t2 = theta * theta;
    v = Mat3::Identity() + ((1.0 - std::cos(theta)) / t2) * k +
        ((theta - std::sin(theta)) / (t2 * theta)) * k * k;
  }
  return {so3_exp(omega), v * t.linear};
}

Twist log(const Pose& x) {
  const Vec3 omega = so3_log(x.rotation());
  const double theta = omega.norm();
  if (theta >= std::numbers::pi - 1e-6) {
    throw ConfigError("log: rotation angle " + std::to_string(theta) +
                      " rad is outside the principal domain");
  }
  const Mat3 k = skew(omega);
  Mat3 v_inv;
  if (theta < kSmallAngle) {
    v_inv = Mat3::Identity() - 0.5 * k + (1.0 / 12.0) * k * k;
  } else {
    const double half = 0.5 * theta;
    const double coef = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
    v_inv = Mat3::Identity() - 0.5 * k + coef * k * k;
  }
  return {omega, v_inv * x.translation()};
}

Pose interpolate(const Pose& a, const Pose& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("interpolate: alpha " + std::to_string(alpha) + " outside [0, 1]");
  }
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  return compose(a, exp(log(between(a, b)).scaled(alpha)));
}

}  // namespace lo
