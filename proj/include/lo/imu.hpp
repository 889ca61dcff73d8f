#pragma once

#include <span>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/trajectory.hpp"

namespace lo {

struct ImuMeasurement {
  double stamp = 0.0;
  Vec3 angular_velocity = Vec3::Zero();     // rad/s, body frame
  Vec3 linear_acceleration = Vec3::Zero();  // specific force, m/s^2, body frame
};

inline Vec3 default_gravity() { return {0.0, 0.0, -9.81}; }

struct ImuState {
  Pose pose;                       // body -> world
  Vec3 velocity = Vec3::Zero();    // world frame
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gravity = default_gravity();
  bool allow_unusual_gravity = false;

  void validate() const;
};

/// Forward Euler integration at measurement rate with an exact rotation increment per step.
/// Measurements are held constant between their stamps and biases are fixed over [t0, t1].
/// Returns a pose at t0, at every measurement stamp strictly inside (t0, t1), and at t1.
/// Throws CoverageError when the stream leaves a hole longer than twice the median period.
Trajectory integrate(const ImuState& state, std::span<const ImuMeasurement> measurements,
                     double t0, double t1);

/// Same integration, returning the full state at t1 so integrations can be chained.
ImuState integrate_state(const ImuState& state, std::span<const ImuMeasurement> measurements,
                         double t0, double t1);

/// Throws ConfigError when stamps are not strictly increasing.
void validate_measurements(std::span<const ImuMeasurement> measurements);

}  // namespace lo
