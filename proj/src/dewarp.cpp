#include "lo/dewarp.hpp"

#include <algorithm>
#include <string>

#include "lo/error.hpp"

namespace lo {

std::string_view to_string(DewarpMethod m) {
  switch (m) {
    case DewarpMethod::None: return "none";
    case DewarpMethod::ConstantVelocity: return "constant_velocity";
    case DewarpMethod::Imu: return "imu";
  }
  return "none";
}

DewarpMethod parse_dewarp_method(std::string_view s) {
  if (s == "none") return DewarpMethod::None;
  if (s == "constant_velocity") return DewarpMethod::ConstantVelocity;
  if (s == "imu") return DewarpMethod::Imu;
  throw ConfigError("unknown dewarp method '" + std::string(s) + "'");
}

LidarScan dewarp_none(const LidarScan& scan) { return scan; }

namespace {

Point moved(const Point& p, const Pose& x) {
  Point out = p;
  out.position = transform_point(x, p.position);
  out.range = out.position.norm();
  return out;
}

}  // namespace

LidarScan dewarp_constant_velocity(const LidarScan& scan, const Pose& prev_delta, double prev_dt) {
  if (!(prev_dt > 0.0)) throw ConfigError("dewarp_constant_velocity: prev_dt must be positive");
  const Twist rate = log(prev_delta).scaled(1.0 / prev_dt);
  std::vector<Point> out;
  out.reserve(scan.size());
  for (const Point& p : scan.points()) {
    if (p.time_offset == 0.0) {
      out.push_back(p);
    } else {
      out.push_back(moved(p, exp(rate.scaled(p.time_offset))));
    }
  }
  return scan.with_points(std::move(out));
}

LidarScan dewarp_imu(const LidarScan& scan, std::span<const StampedPose> lidar_traj) {
  if (scan.empty()) return scan;
  double max_tau = 0.0;
  for (const Point& p : scan.points()) max_tau = std::max(max_tau, p.time_offset);
  const double t0 = scan.stamp();
  const double t1 = t0 + max_tau;
  if (lidar_traj.empty() || lidar_traj.front().stamp > t0 || lidar_traj.back().stamp < t1) {
    double gap_begin = t0;
    double gap_end = t1;
    if (!lidar_traj.empty()) {
      if (lidar_traj.front().stamp > t0) {
        gap_end = std::min(t1, lidar_traj.front().stamp);
      } else {
        gap_begin = lidar_traj.back().stamp;
      }
    }
    throw CoverageError("dewarp_imu: trajectory leaves [" + std::to_string(gap_begin) + ", " +
                            std::to_string(gap_end) + "] uncovered",
                        gap_begin, gap_end);
  }
  const Pose anchor_inv = pose_at(lidar_traj, t0).inverse();
  std::vector<Point> out;
  out.reserve(scan.size());
  for (const Point& p : scan.points()) {
    if (p.time_offset == 0.0) {
      out.push_back(p);
    } else {
      out.push_back(moved(p, compose(anchor_inv, pose_at(lidar_traj, t0 + p.time_offset))));
    }
  }
  return scan.with_points(std::move(out));
}

Trajectory imu_to_lidar(std::span<const StampedPose> imu_traj, const Pose& lidar_to_imu) {
  Trajectory out;
  out.reserve(imu_traj.size());
  for (const StampedPose& s : imu_traj) out.push_back({s.stamp, compose(s.pose, lidar_to_imu)});
  return out;
}

}  // namespace lo
