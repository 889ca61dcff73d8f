#pragma once

#include <span>
#include <string_view>

#include "lo/geometry.hpp"
#include "lo/pointcloud.hpp"
#include "lo/trajectory.hpp"

namespace lo {

enum class DewarpMethod { None, ConstantVelocity, Imu };

std::string_view to_string(DewarpMethod m);
DewarpMethod parse_dewarp_method(std::string_view s);

/// Identity; returns the scan unchanged.
LidarScan dewarp_none(const LidarScan& scan);

/// Moves every point into the scan-stamp frame assuming the screw motion of the previous
/// interval continues: point p at offset tau becomes exp(log(prev_delta) * tau / prev_dt) p.
LidarScan dewarp_constant_velocity(const LidarScan& scan, const Pose& prev_delta, double prev_dt);

/// Moves every point into the scan-stamp frame using a sampled LiDAR trajectory:
/// p becomes between(pose(stamp), pose(stamp + tau)) p. Throws CoverageError if the
/// trajectory does not span the scan.
LidarScan dewarp_imu(const LidarScan& scan, std::span<const StampedPose> lidar_traj);

/// Converts an IMU-body trajectory into LiDAR poses, given the extrinsic that maps
/// LiDAR-frame points into the IMU frame.
Trajectory imu_to_lidar(std::span<const StampedPose> imu_traj, const Pose& lidar_to_imu);

}  // namespace lo
