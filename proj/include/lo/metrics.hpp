#pragma once

#include <span>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/trajectory.hpp"

namespace lo {

/// Ground truth and estimate sampled at the same stamps.
struct PairedTrajectory {
  std::vector<double> stamps;
  std::vector<Pose> gt;
  std::vector<Pose> est;

  std::size_t size() const { return stamps.size(); }
};

struct MetricsReport {
  double ate_trans = 0.0;
  double rte_trans = 0.0;
  double wrte_trans = 0.0;
  double ate_rot = 0.0;
  double rte_rot = 0.0;
  double wrte_rot = 0.0;
  double window_seconds = 0.0;
  int window_steps = 1;
};

/// Pairs every estimate stamp with the ground truth interpolated to it. Estimates whose
/// nearest ground-truth sample is more than max_dt away (or outside the ground-truth span)
/// are dropped. Throws RuntimeError when nothing pairs.
PairedTrajectory associate(std::span<const StampedPose> gt, std::span<const StampedPose> est,
                           double max_dt);

/// Re-anchors the estimate so its first pose coincides with the ground truth's first pose.
PairedTrajectory align_first_pose(const PairedTrajectory& paired);

/// RMS of ||trans(between(gt_i, est_i))||. No alignment is applied.
double ate_translation(const PairedTrajectory& paired);
double ate_rotation(const PairedTrajectory& paired);

/// RMS over i of the j-step relative pose error. Throws ConfigError unless 1 <= j < N.
double wrte_translation(const PairedTrajectory& paired, int j);
double wrte_rotation(const PairedTrajectory& paired, int j);

/// The j = 1 case of the windowed error.
double rte_translation(const PairedTrajectory& paired);
double rte_rotation(const PairedTrajectory& paired);

/// 100 (a - b) / b. Throws ConfigError if b == 0.
double percent_change(double a, double b);

/// round(window_seconds * median rate), at least 1.
int window_steps(std::span<const double> stamps, double window_seconds);
int window_steps(std::span<const StampedPose> traj, double window_seconds);

/// Every metric for a paired trajectory using a window in seconds. The window is clamped to
/// N - 1 steps for short trajectories.
MetricsReport evaluate(const PairedTrajectory& paired, double window_seconds);

}  // namespace lo
