#include "lo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <optional>

#include "lo/error.hpp"
#include "lo/registration.hpp"

namespace lo {

SequenceInput sequence_from_dataset(io::Dataset dataset) {
  SequenceInput in;
  in.dataset = dataset.manifest.name;
  in.sequence = dataset.manifest.sequence;
  double shift = 0.0;
  switch (dataset.manifest.stamp_convention) {
    case io::StampConvention::Start: break;
    case io::StampConvention::Mid: shift = -0.5 * dataset.manifest.period; break;
    case io::StampConvention::End: shift = -dataset.manifest.period; break;
  }
  for (std::size_t i = 0; i < dataset.scans.size(); ++i) in.stamps.push_back(dataset.scans.stamp(i) + shift);
  const io::ScanStream scans = dataset.scans;
  const double period = dataset.manifest.period;
  const int lines = dataset.manifest.num_scanlines;
  const std::vector<double> stamps = in.stamps;
  in.load_scan = [scans, period, lines, stamps](std::size_t i) {
    return io::read_scan(scans.path(i), stamps[i], period, lines);
  };
  in.gt = std::move(dataset.gt);
  in.imu = std::move(dataset.imu);
  in.imu_states = std::move(dataset.imu_states);
  in.period = period;
  in.gravity = dataset.manifest.gravity;
  in.lidar_to_imu = dataset.manifest.lidar_to_imu;
  return in;
}

SequenceInput sequence_from_synthetic(const synth::SyntheticSequence& seq,
                                      const std::string& dataset, const std::string& sequence) {
  SequenceInput in;
  in.dataset = dataset;
  in.sequence = sequence;
  for (const LidarScan& s : seq.scans) in.stamps.push_back(s.stamp());
  in.load_scan = [&seq](std::size_t i) { return seq.scans.at(i); };
  in.gt = seq.gt;
  in.imu = seq.imu;
  in.imu_states = seq.states;
  if (!seq.scans.empty()) in.period = seq.scans.front().period();
  return in;
}

synth::VelocityBiasSample state_at(std::span<const synth::VelocityBiasSample> states, double t) {
  if (states.empty()) throw CoverageError("no IMU states available", t, t);
  if (t < states.front().stamp) throw CoverageError("IMU states start after requested time", t, states.front().stamp);
  if (t > states.back().stamp) throw CoverageError("IMU states end before requested time", states.back().stamp, t);
  auto it = std::lower_bound(states.begin(), states.end(), t,
                             [](const synth::VelocityBiasSample& s, double v) { return s.stamp < v; });
  if (it->stamp == t) return *it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double alpha = (t - a.stamp) / (b.stamp - a.stamp);
  auto lerp = [alpha](const Vec3& x, const Vec3& y) -> Vec3 { return x + alpha * (y - x); };
  return {t, lerp(a.velocity, b.velocity), lerp(a.gyro_bias, b.gyro_bias),
          lerp(a.accel_bias, b.accel_bias)};
}

std::vector<Feature> extract_features(const LidarScan& preprocessed, const ExperimentConfig& cfg) {
  const ScanIndex index(preprocessed);
  std::vector<Feature> all = classify(index, cfg.feature_params, cfg.curvature);
  std::vector<Feature> out;
  out.reserve(all.size());
  for (Feature& f : all) {
    switch (cfg.features) {
      case FeatureSet::Point:
        out.push_back(Feature::point(f.position, f.scanline));
        out.back().curvature = f.curvature;
        break;
      case FeatureSet::Planar:
        if (f.kind == FeatureKind::Planar) out.push_back(std::move(f));
        break;
      case FeatureSet::PlanarAndEdge:
        if (f.kind != FeatureKind::Point) out.push_back(std::move(f));
        break;
    }
  }
  return out;
}

void check_inputs(const ExperimentConfig& cfg, const SequenceInput& input) {
  cfg.validate();
  const bool needs_imu = cfg.init == PipelineInit::Imu || cfg.dewarp == DewarpMethod::Imu;
  if (needs_imu && !input.has_imu()) {
    throw ConfigError("dataset '" + input.dataset + "/" + input.sequence +
                      "' has no IMU data (imu_path and imu_states_path) but the configuration "
                      "requests IMU " + (cfg.init == PipelineInit::Imu ? "initialization" : "dewarping"));
  }
  if (input.stamps.size() < 2) {
    throw ConfigError("dataset '" + input.dataset + "/" + input.sequence + "' has fewer than 2 scans");
  }
  if (input.gt.empty()) throw ConfigError("dataset '" + input.dataset + "' has no ground truth");
}

io::ResultRow describe_cell(const ExperimentConfig& cfg, const std::string& dataset,
                            const std::string& sequence) {
  io::ResultRow r;
  r.dataset = dataset;
  r.sequence = sequence;
  r.dewarp = std::string(to_string(cfg.dewarp));
  r.init = std::string(to_string(cfg.init));
  r.features = std::string(to_string(cfg.features));
  r.residual = std::string(to_string(cfg.residual.kind));
  r.epsilon = cfg.residual.epsilon;
  r.curvature = std::string(to_string(cfg.curvature));
  r.window_s = cfg.window_seconds;
  return r;
}

namespace {

class Odometry {
 public:
  Odometry(const ExperimentConfig& cfg, const SequenceInput& in) : cfg_(cfg), in_(in) {}

  RunResult run() {
    RunResult out;
    const std::size_t n = std::min(in_.stamps.size(), static_cast<std::size_t>(cfg_.max_scans));
    double runtime_ms = 0.0;
    std::size_t timed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto t_begin = std::chrono::steady_clock::now();
      try {
        step(i, out);
      } catch (const ConfigError& e) {
        throw ConfigError("scan " + std::to_string(i) + ": " + e.what());
      } catch (const std::exception& e) {
        if (!cfg_.skip_failed || history_.empty()) throw ScanError(i, e.what());
        std::cerr << "skipping scan " << i << " of " << in_.dataset << "/" << in_.sequence << ": "
                  << e.what() << '\n';
        out.skipped.push_back(i);
        continue;
      }
      runtime_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_begin).count();
      ++timed;
    }

    const double max_dt = cfg_.association_max_dt > 0.0 ? cfg_.association_max_dt : 0.5 * in_.period;
    out.estimate.reserve(history_.size());
    for (const Processed& p : history_) out.estimate.push_back({p.stamp, p.pose});
    PairedTrajectory paired = associate(in_.gt, out.estimate, max_dt);
    if (paired.size() < 2) throw RuntimeError("fewer than 2 estimates pair with ground truth");
    if (cfg_.align_first_pose) paired = align_first_pose(paired);
    out.metrics = evaluate(paired, cfg_.window_seconds);

    io::ResultRow& row = out.row;
    row = describe_cell(cfg_, in_.dataset, in_.sequence);
    row.window_j = out.metrics.window_steps;
    row.ate_t = out.metrics.ate_trans;
    row.rte_t = out.metrics.rte_trans;
    row.wrte_t = out.metrics.wrte_trans;
    row.ate_r = out.metrics.ate_rot;
    row.rte_r = out.metrics.rte_rot;
    row.wrte_r = out.metrics.wrte_rot;
    row.runtime_ms = cfg_.record_runtime && timed > 0 ? runtime_ms / static_cast<double>(timed) : 0.0;
    double iters = 0.0;
    for (int k : out.iterations) iters += k;
    row.iterations_mean = out.iterations.empty() ? 0.0 : iters / static_cast<double>(out.iterations.size());
    return out;
  }

 private:
  struct Processed {
    std::size_t index;
    double stamp;
    Pose pose;
  };

  Pose gt_at(double t) const { return pose_at(in_.gt, t); }

  ImuState imu_state(double t, const Pose& lidar_pose) const {
    const synth::VelocityBiasSample s = state_at(in_.imu_states, t);
    ImuState state;
    state.pose = compose(lidar_pose, in_.lidar_to_imu.inverse());
    state.velocity = s.velocity;
    state.gyro_bias = s.gyro_bias;
    state.accel_bias = s.accel_bias;
    state.gravity = in_.gravity;
    return state;
  }

  // LiDAR trajectory from integrating the IMU forward from a LiDAR pose at `t_anchor`.
  Trajectory imu_lidar_trajectory(double t_anchor, const Pose& anchor, double t_end) const {
    return imu_to_lidar(integrate(imu_state(t_anchor, anchor), in_.imu, t_anchor, t_end),
                        in_.lidar_to_imu);
  }

  LidarScan dewarp(std::size_t i, const LidarScan& scan) const {
    const double t = in_.stamps[i];
    switch (cfg_.dewarp) {
      case DewarpMethod::None: return dewarp_none(scan);
      case DewarpMethod::ConstantVelocity: {
        if (cfg_.prior_source == PriorSource::GroundTruth) {
          // Previous interval of the ground truth; the first scan borrows the next one.
          const std::size_t a = i > 0 ? i - 1 : 0;
          const std::size_t b = i > 0 ? i : 1;
          if (b >= in_.stamps.size()) return dewarp_none(scan);
          const double dt = in_.stamps[b] - in_.stamps[a];
          return dewarp_constant_velocity(scan, between(gt_at(in_.stamps[a]), gt_at(in_.stamps[b])), dt);
        }
        if (history_.size() < 2) return dewarp_none(scan);
        const Processed& p = history_[history_.size() - 1];
        const Processed& q = history_[history_.size() - 2];
        return dewarp_constant_velocity(scan, between(q.pose, p.pose), p.stamp - q.stamp);
      }
      case DewarpMethod::Imu: {
        const double t_end = t + scan.period();
        if (cfg_.prior_source == PriorSource::GroundTruth || history_.empty()) {
          return dewarp_imu(scan, imu_lidar_trajectory(t, gt_at(t), t_end));
        }
        const Processed& p = history_.back();
        return dewarp_imu(scan, imu_lidar_trajectory(p.stamp, p.pose, t_end));
      }
    }
    return dewarp_none(scan);
  }

  Pose initial_guess(double t) const {
    const Processed& p = history_.back();
    switch (cfg_.init) {
      case PipelineInit::Identity: return init_identity();
      case PipelineInit::GroundTruth: return between(gt_at(p.stamp), gt_at(t));
      case PipelineInit::ConstantVelocity: {
        if (history_.size() < 2) return init_identity();
        const Processed& q = history_[history_.size() - 2];
        const Pose prev = cfg_.prior_source == PriorSource::GroundTruth
                              ? between(gt_at(q.stamp), gt_at(p.stamp))
                              : between(q.pose, p.pose);
        return init_constant_velocity(prev, p.stamp - q.stamp, t - p.stamp);
      }
      case PipelineInit::Imu: {
        const Pose anchor = cfg_.prior_source == PriorSource::GroundTruth ? gt_at(p.stamp) : p.pose;
        return init_imu(anchor, imu_state(p.stamp, anchor), in_.imu, p.stamp, t, in_.lidar_to_imu);
      }
    }
    return init_identity();
  }

  void step(std::size_t i, RunResult& out) {
    const double t = in_.stamps[i];
    const LidarScan raw = in_.load_scan(i);
    const LidarScan pre = preprocess(raw, cfg_.preprocess);
    const LidarScan dewarped = dewarp(i, pre);
    std::vector<Feature> features = extract_features(dewarped, cfg_);
    out.feature_counts.push_back(features.size());

    if (history_.empty()) {
      history_.push_back({i, t, gt_at(t)});
      target_.emplace(features);
      return;
    }
    const Pose x0 = initial_guess(t);
    const IcpResult r = solve(features, *target_, cfg_.residual, x0, cfg_.icp);
    out.iterations.push_back(r.iterations);
    history_.push_back({i, t, compose(history_.back().pose, r.pose)});
    target_.emplace(features);
  }

  const ExperimentConfig& cfg_;
  const SequenceInput& in_;
  std::vector<Processed> history_;
  std::optional<FeatureMap> target_;
};

}  // namespace

RunResult run_pipeline(const ExperimentConfig& cfg, const SequenceInput& input) {
  check_inputs(cfg, input);
  return Odometry(cfg, input).run();
}

}  // namespace lo
