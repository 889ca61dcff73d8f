#pragma once

#include <span>
#include <vector>

#include "lo/geometry.hpp"

namespace lo {

struct StampedPose {
  double stamp = 0.0;
  Pose pose;
};

/// Time-ordered poses with strictly increasing stamps.
using Trajectory = std::vector<StampedPose>;

/// Throws ConfigError naming the first offending entry if stamps do not strictly increase.
void validate_trajectory(std::span<const StampedPose> traj);

/// Pose at an arbitrary time by geodesic interpolation between the bracketing samples.
/// Throws CoverageError when t lies outside the sampled interval.
Pose pose_at(std::span<const StampedPose> traj, double t);

}  // namespace lo
