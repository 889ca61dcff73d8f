#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lo/dewarp.hpp"
#include "lo/features.hpp"
#include "lo/pointcloud.hpp"
#include "lo/registration.hpp"
#include "lo/synthworld.hpp"

namespace lo {

enum class FeatureSet { Point, Planar, PlanarAndEdge };
std::string_view to_string(FeatureSet s);
FeatureSet parse_feature_set(std::string_view s);

/// Initialization used by the pipeline. GroundTruth is for evaluation only: it seeds every
/// solve with the true relative pose read from the ground-truth trajectory.
enum class PipelineInit { Identity, ConstantVelocity, Imu, GroundTruth };
std::string_view to_string(PipelineInit m);
PipelineInit parse_pipeline_init(std::string_view s);

/// Where constant-velocity deltas and IMU starting poses come from.
enum class PriorSource { GroundTruth, Estimate };
std::string_view to_string(PriorSource s);
PriorSource parse_prior_source(std::string_view s);

struct ExperimentConfig {
  std::vector<std::string> datasets;  // manifest paths
  DewarpMethod dewarp = DewarpMethod::None;
  PipelineInit init = PipelineInit::GroundTruth;
  PriorSource prior_source = PriorSource::GroundTruth;
  CurvatureMethod curvature = CurvatureMethod::Classical;
  FeatureParams feature_params = default_feature_params(CurvatureMethod::Classical);
  FeatureSet features = FeatureSet::PlanarAndEdge;
  ResidualVariant residual;
  IcpConfig icp;
  PreprocessParams preprocess;
  double window_seconds = 10.0;
  int max_scans = 3000;
  double association_max_dt = 0.0;  // <= 0 uses half the scan period
  /// Express the estimate in the ground-truth frame of the first paired pose before ATE.
  bool align_first_pose = false;
  std::uint64_t seed = 0;
  bool skip_failed = false;
  bool record_runtime = true;
  int workers = 1;
  std::string trajectory_out;  // optional, empty skips writing
  std::string results_csv;     // optional for run, required for sweep

  /// Throws ConfigError for values or combinations the pipeline cannot run.
  void validate() const;
};

/// Axes of a sweep; an empty axis keeps the base configuration's value.
struct SweepGrid {
  std::vector<DewarpMethod> dewarp;
  std::vector<PipelineInit> init;
  std::vector<FeatureSet> features;
  std::vector<ResidualKind> residual;
  std::vector<double> epsilon;
  std::vector<CurvatureMethod> curvature;
};

struct SweepConfig {
  ExperimentConfig base;
  SweepGrid grid;
  /// When positive, each curvature method's planar threshold is tuned so the first sequence
  /// yields this many planar features per scan on average.
  double calibrate_planar_count = 0.0;
  int calibration_scans = 3;
};

/// Overlays keys of `j` onto `cfg`. Unknown keys are rejected. Choosing a curvature method
/// without explicit thresholds resets the thresholds to that method's defaults.
void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

SweepConfig sweep_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& cfg);

/// Parses a JSON file; ConfigError on I/O or syntax problems.
nlohmann::json read_json_file(const std::string& path);

/// Synthetic dataset description for the gen subcommand.
struct GenConfig {
  synth::SequenceSpec sequence;
  std::string name = "synth";
  std::string sequence_name = "seq0";
};

GenConfig gen_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenConfig& cfg);

synth::Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const synth::Scene& scene);
synth::MotionSource motion_from_json(const nlohmann::json& j);
nlohmann::json to_json(const synth::MotionSource& motion);
synth::LidarModel lidar_from_json(const nlohmann::json& j);
nlohmann::json to_json(const synth::LidarModel& model);

}  // namespace lo
