#include "lo/imu.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "lo/error.hpp"

namespace lo {

void validate_trajectory(std::span<const StampedPose> traj) {
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (!(traj[i].stamp > traj[i - 1].stamp)) {
      throw ConfigError("trajectory stamps not strictly increasing at entry " +
                        std::to_string(i));
    }
  }
}

Pose pose_at(std::span<const StampedPose> traj, double t) {
  if (traj.empty() || t < traj.front().stamp || t > traj.back().stamp) {
    const double lo = traj.empty() ? t : std::min(t, traj.front().stamp);
    const double hi = traj.empty() ? t : std::max(t, traj.back().stamp);
    throw CoverageError("trajectory does not cover t=" + std::to_string(t), lo, hi);
  }
  auto it = std::lower_bound(traj.begin(), traj.end(), t,
                             [](const StampedPose& s, double v) { return s.stamp < v; });
  if (it->stamp == t) return it->pose;
  const StampedPose& b = *it;
  const StampedPose& a = *(it - 1);
  return interpolate(a.pose, b.pose, (t - a.stamp) / (b.stamp - a.stamp));
}

void ImuState::validate() const {
  const double g = gravity.norm();
  if (!allow_unusual_gravity && (g < 9.7 || g > 9.9)) {
    throw ConfigError("ImuState: gravity norm " + std::to_string(g) + " outside [9.7, 9.9]");
  }
}

void validate_measurements(std::span<const ImuMeasurement> measurements) {
  for (std::size_t i = 1; i < measurements.size(); ++i) {
    if (!(measurements[i].stamp > measurements[i - 1].stamp)) {
      throw ConfigError("IMU stamps not strictly increasing at sample " + std::to_string(i));
    }
  }
}

namespace {

double median_period(std::span<const ImuMeasurement> m) {
  std::vector<double> d;
  d.reserve(m.size());
  for (std::size_t i = 1; i < m.size(); ++i) d.push_back(m[i].stamp - m[i - 1].stamp);
  if (d.empty()) return 0.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

void check_coverage(std::span<const ImuMeasurement> m, double t0, double t1) {
  auto gap = [](double a, double b) {
    return CoverageError("IMU coverage gap over [" + std::to_string(a) + ", " +
                             std::to_string(b) + "]",
                         a, b);
  };
  if (m.empty()) throw gap(t0, t1);
  const double limit = 2.0 * median_period(m);
  if (m.front().stamp - t0 > limit) throw gap(t0, m.front().stamp);
  if (t1 - m.back().stamp > limit) throw gap(m.back().stamp, t1);
  for (std::size_t i = 1; i < m.size(); ++i) {
    const double a = m[i - 1].stamp;
    const double b = m[i].stamp;
    if (b <= t0 || a >= t1) continue;
    if (b - a > limit) throw gap(a, b);
  }
}

struct Kinematic {
  Pose pose;
  Vec3 velocity;
};

// Integrates over [t0, t1], calling emit(stamp, kinematic) at every breakpoint.
template <typename Emit>
Kinematic run(const ImuState& state, std::span<const ImuMeasurement> m, double t0, double t1,
              Emit&& emit) {
  state.validate();
  if (t1 < t0) throw ConfigError("integrate: t1 precedes t0");
  Kinematic k{state.pose, state.velocity};
  emit(t0, k);
  if (t1 == t0) return k;

  validate_measurements(m);
  check_coverage(m, t0, t1);

  // Last measurement with stamp <= t0, or the first one when the stream starts after t0.
  auto first_after = std::upper_bound(m.begin(), m.end(), t0,
                                      [](double v, const ImuMeasurement& s) { return v < s.stamp; });
  std::size_t held = first_after == m.begin()
                         ? 0
                         : static_cast<std::size_t>(first_after - m.begin()) - 1;
  std::size_t next = static_cast<std::size_t>(first_after - m.begin());

  double t = t0;
  Mat3 r = k.pose.rotation_matrix();
  Eigen::Quaterniond q = k.pose.rotation();
  Vec3 p = k.pose.translation();
  Vec3 v = k.velocity;
  while (t < t1) {
    const double t_next = next < m.size() ? std::min(m[next].stamp, t1) : t1;
    const double dt = t_next - t;
    const ImuMeasurement& meas = m[held];
    const Vec3 acc = r * (meas.linear_acceleration - state.accel_bias) + state.gravity;
    p = p + v * dt + 0.5 * acc * dt * dt;
    v = v + acc * dt;
    q = (q * so3_exp((meas.angular_velocity - state.gyro_bias) * dt)).normalized();
    r = q.toRotationMatrix();
    t = t_next;
    k = {Pose(q, p), v};
    emit(t, k);
    if (next < m.size() && m[next].stamp <= t) {
      held = next;
      ++next;
    }
  }
  return k;
}

}  // namespace

Trajectory integrate(const ImuState& state, std::span<const ImuMeasurement> measurements,
                     double t0, double t1) {
  Trajectory out;
  run(state, measurements, t0, t1,
      [&](double stamp, const Kinematic& k) { out.push_back({stamp, k.pose}); });
  return out;
}

ImuState integrate_state(const ImuState& state, std::span<const ImuMeasurement> measurements,
                         double t0, double t1) {
  const Kinematic k = run(state, measurements, t0, t1, [](double, const Kinematic&) {});
  ImuState out = state;
  out.pose = k.pose;
  out.velocity = k.velocity;
  return out;
}

}  // namespace lo
