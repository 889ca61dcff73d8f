#include "lo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lo/error.hpp"

namespace lo {

PairedTrajectory associate(std::span<const StampedPose> gt, std::span<const StampedPose> est,
                           double max_dt) {
  validate_trajectory(gt);
  validate_trajectory(est);
  PairedTrajectory out;
  for (const StampedPose& e : est) {
    if (gt.empty() || e.stamp < gt.front().stamp || e.stamp > gt.back().stamp) continue;
    auto it = std::lower_bound(gt.begin(), gt.end(), e.stamp,
                               [](const StampedPose& s, double v) { return s.stamp < v; });
    double gap = it->stamp - e.stamp;
    if (it != gt.begin()) gap = std::min(gap, e.stamp - (it - 1)->stamp);
    if (gap > max_dt) continue;
    out.stamps.push_back(e.stamp);
    out.gt.push_back(pose_at(gt, e.stamp));
    out.est.push_back(e.pose);
  }
  if (out.stamps.empty()) {
    throw RuntimeError("associate: no estimate stamp pairs with ground truth within " +
                       std::to_string(max_dt) + " s");
  }
  return out;
}

PairedTrajectory align_first_pose(const PairedTrajectory& paired) {
  PairedTrajectory out = paired;
  if (paired.size() == 0) return out;
  const Pose offset = compose(paired.gt.front(), paired.est.front().inverse());
  for (Pose& p : out.est) p = compose(offset, p);
  return out;
}

namespace {

template <typename ErrorFn>
double rms_absolute(const PairedTrajectory& p, ErrorFn&& err) {
  if (p.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = err(between(p.gt[i], p.est[i]));
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(p.size()));
}

template <typename ErrorFn>
double rms_windowed(const PairedTrajectory& p, int j, ErrorFn&& err) {
  const auto n = static_cast<long>(p.size());
  if (j < 1 || n <= j) {
    throw ConfigError("windowed error needs 1 <= j < N (j=" + std::to_string(j) +
                      ", N=" + std::to_string(n) + ")");
  }
  double sum = 0.0;
  for (long i = 0; i + j < n; ++i) {
    const Pose delta = between(p.gt[i], p.gt[i + j]);
    const Pose delta_est = between(p.est[i], p.est[i + j]);
    const double e = err(between(delta, delta_est));
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(n - j));
}

double trans_err(const Pose& x) { return x.translation().norm(); }
double rot_err(const Pose& x) { return x.angle(); }

}  // namespace

double ate_translation(const PairedTrajectory& paired) { return rms_absolute(paired, trans_err); }
double ate_rotation(const PairedTrajectory& paired) { return rms_absolute(paired, rot_err); }

double wrte_translation(const PairedTrajectory& paired, int j) {
  return rms_windowed(paired, j, trans_err);
}
double wrte_rotation(const PairedTrajectory& paired, int j) {
  return rms_windowed(paired, j, rot_err);
}

double rte_translation(const PairedTrajectory& paired) { return wrte_translation(paired, 1); }
double rte_rotation(const PairedTrajectory& paired) { return wrte_rotation(paired, 1); }

double percent_change(double a, double b) {
  if (b == 0.0) throw ConfigError("percent_change: base value is zero");
  return 100.0 * ((a - b) / b);
}

int window_steps(std::span<const double> stamps, double window_seconds) {
  std::vector<double> dts;
  for (std::size_t i = 1; i < stamps.size(); ++i) dts.push_back(stamps[i] - stamps[i - 1]);
  if (dts.empty() || !(window_seconds > 0.0)) return 1;
  auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
  std::nth_element(dts.begin(), mid, dts.end());
  const double rate = 1.0 / *mid;
  return std::max(1, static_cast<int>(std::lround(window_seconds * rate)));
}

int window_steps(std::span<const StampedPose> traj, double window_seconds) {
  std::vector<double> stamps;
  stamps.reserve(traj.size());
  for (const StampedPose& s : traj) stamps.push_back(s.stamp);
  return window_steps(stamps, window_seconds);
}

MetricsReport evaluate(const PairedTrajectory& paired, double window_seconds) {
  MetricsReport r;
  r.window_seconds = window_seconds;
  r.window_steps = window_steps(paired.stamps, window_seconds);
  r.ate_trans = ate_translation(paired);
  r.ate_rot = ate_rotation(paired);
  if (paired.size() >= 2) {
    const int j = std::min<int>(r.window_steps, static_cast<int>(paired.size()) - 1);
    r.window_steps = j;
    r.rte_trans = rte_translation(paired);
    r.rte_rot = rte_rotation(paired);
    r.wrte_trans = wrte_translation(paired, j);
    r.wrte_rot = wrte_rotation(paired, j);
  }
  return r;
}

}  // namespace lo
