#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "lo/config.hpp"
#include "lo/pipeline.hpp"

namespace lo {

/// Grid cells in axis order (dewarp, init, features, residual, epsilon, curvature), the last
/// axis varying fastest. Epsilon only multiplies the pseudo residuals; other residuals get a
/// single cell with epsilon 0.
std::vector<ExperimentConfig> expand_grid(const SweepConfig& sweep);

struct SweepReport {
  std::size_t completed = 0;
  std::size_t resumed = 0;       // cells already present in the results file
  std::size_t incompatible = 0;  // cells whose configuration cannot run on a sequence
};

/// Runs every cell on every sequence and appends one row per (sequence, cell) to
/// `results_csv`, in grid order regardless of the worker count. Rows whose cell key is already
/// in the file are not recomputed.
SweepReport run_sweep(const SweepConfig& sweep, std::span<const SequenceInput> inputs,
                      const std::filesystem::path& results_csv);

/// Loads the sweep's dataset manifests and runs it into base.results_csv.
SweepReport run_sweep(const SweepConfig& sweep);

/// Planar threshold at which the mean planar feature count over `scans` (preprocessed and
/// dewarped) is closest to `target`.
double calibrate_planar_threshold(const ExperimentConfig& cfg, std::span<const LidarScan> scans,
                                  double target);

}  // namespace lo
