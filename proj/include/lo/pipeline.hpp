#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lo/config.hpp"
#include "lo/dewarp.hpp"
#include "lo/features.hpp"
#include "lo/imu.hpp"
#include "lo/io.hpp"
#include "lo/metrics.hpp"
#include "lo/synthworld.hpp"
#include "lo/trajectory.hpp"

namespace lo {

/// Everything the odometry loop reads from one sequence. Scans are produced on demand.
struct SequenceInput {
  std::string dataset;
  std::string sequence;
  std::vector<double> stamps;                      // scan start stamps, increasing
  std::function<LidarScan(std::size_t)> load_scan;
  Trajectory gt;
  std::vector<ImuMeasurement> imu;
  std::vector<synth::VelocityBiasSample> imu_states;
  double period = 0.1;                             // scan duration, seconds
  Vec3 gravity = default_gravity();
  Pose lidar_to_imu;

  bool has_imu() const { return !imu.empty() && !imu_states.empty(); }
};

/// Scan stamps follow the manifest's stamp convention shifted to scan start.
SequenceInput sequence_from_dataset(io::Dataset dataset);
/// Keeps a reference to `seq`, which must outlive the returned input.
SequenceInput sequence_from_synthetic(const synth::SyntheticSequence& seq,
                                      const std::string& dataset, const std::string& sequence);

struct RunResult {
  Trajectory estimate;
  MetricsReport metrics;
  io::ResultRow row;
  std::vector<std::size_t> skipped;       // scans dropped with skip_failed
  std::vector<int> iterations;            // per solved scan
  std::vector<std::size_t> feature_counts;  // per processed scan
};

/// Preprocessing, curvature classification and feature-set selection for one (already
/// dewarped) scan.
std::vector<Feature> extract_features(const LidarScan& preprocessed, const ExperimentConfig& cfg);

/// Throws ConfigError when the configuration needs inputs the sequence lacks.
void check_inputs(const ExperimentConfig& cfg, const SequenceInput& input);

/// Configuration columns of the result row for a cell (metrics left at zero).
io::ResultRow describe_cell(const ExperimentConfig& cfg, const std::string& dataset,
                            const std::string& sequence);

/// Scan-to-scan odometry over the sequence followed by evaluation against ground truth.
/// The first estimate pose equals the ground-truth pose at the first scan stamp.
RunResult run_pipeline(const ExperimentConfig& cfg, const SequenceInput& input);

/// Velocity and biases at t, linearly interpolated between samples. Throws CoverageError
/// outside the sampled span.
synth::VelocityBiasSample state_at(std::span<const synth::VelocityBiasSample> states, double t);

}  // namespace lo
