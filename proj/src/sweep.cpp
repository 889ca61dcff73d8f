#include "lo/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "lo/error.hpp"

namespace lo {

namespace {

template <typename T>
std::vector<T> axis_or(const std::vector<T>& axis, const T& base) {
  return axis.empty() ? std::vector<T>{base} : axis;
}

void switch_curvature(ExperimentConfig& cfg, CurvatureMethod m) {
  const FeatureParams from = default_feature_params(cfg.curvature);
  const FeatureParams to = default_feature_params(m);
  if (cfg.feature_params.planar_threshold == from.planar_threshold) {
    cfg.feature_params.planar_threshold = to.planar_threshold;
  }
  if (cfg.feature_params.edge_threshold == from.edge_threshold) {
    cfg.feature_params.edge_threshold = to.edge_threshold;
  }
  cfg.curvature = m;
}

}  // namespace

std::vector<ExperimentConfig> expand_grid(const SweepConfig& sweep) {
  const ExperimentConfig& b = sweep.base;
  const SweepGrid& g = sweep.grid;
  std::vector<ExperimentConfig> cells;
  std::set<std::string> seen;
  for (DewarpMethod d : axis_or(g.dewarp, b.dewarp)) {
    for (PipelineInit i : axis_or(g.init, b.init)) {
      for (FeatureSet f : axis_or(g.features, b.features)) {
        for (ResidualKind r : axis_or(g.residual, b.residual.kind)) {
          for (double e : axis_or(g.epsilon, b.residual.epsilon)) {
            for (CurvatureMethod c : axis_or(g.curvature, b.curvature)) {
              ExperimentConfig cell = b;
              cell.dewarp = d;
              cell.init = i;
              cell.features = f;
              cell.residual.kind = r;
              cell.residual.epsilon = cell.residual.uses_epsilon() ? e : 0.0;
              switch_curvature(cell, c);
              const std::string key = describe_cell(cell, "", "").cell_key();
              if (seen.insert(key).second) cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }
  return cells;
}

double calibrate_planar_threshold(const ExperimentConfig& cfg, std::span<const LidarScan> scans,
                                  double target) {
  if (scans.empty()) throw ConfigError("calibration needs at least one scan");
  if (!(target > 0.0)) throw ConfigError("calibration target must be positive");
  ExperimentConfig probe = cfg;
  probe.features = FeatureSet::Planar;
  std::vector<LidarScan> pre;
  for (const LidarScan& s : scans) pre.push_back(preprocess(s, cfg.preprocess));
  auto mean_count = [&](double threshold) {
    probe.feature_params.planar_threshold = threshold;
    probe.feature_params.edge_threshold = std::max(cfg.feature_params.edge_threshold, threshold);
    double total = 0.0;
    for (const LidarScan& s : pre) total += static_cast<double>(extract_features(s, probe).size());
    return total / static_cast<double>(pre.size());
  };
  // The count grows with the threshold, so bisect in log space.
  double lo_t = 1e-12;
  double hi_t = 1e3;
  double best = cfg.feature_params.planar_threshold;
  double best_gap = std::abs(mean_count(best) - target);
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo_t * hi_t);
    const double count = mean_count(mid);
    if (std::abs(count - target) < best_gap) {
      best_gap = std::abs(count - target);
      best = mid;
    }
    (count < target ? lo_t : hi_t) = mid;
  }
  return best;
}

SweepReport run_sweep(const SweepConfig& sweep, std::span<const SequenceInput> inputs,
                      const std::filesystem::path& results_csv) {
  if (inputs.empty()) throw ConfigError("sweep: no datasets");
  if (results_csv.empty()) throw ConfigError("sweep: results_csv is required");
  std::vector<ExperimentConfig> cells = expand_grid(sweep);

  if (sweep.calibrate_planar_count > 0.0) {
    const SequenceInput& first = inputs.front();
    const std::size_t n = std::min<std::size_t>(first.stamps.size(),
                                                static_cast<std::size_t>(sweep.calibration_scans));
    std::vector<LidarScan> scans;
    for (std::size_t i = 0; i < n; ++i) scans.push_back(first.load_scan(i));
    std::map<CurvatureMethod, double> tuned;
    for (ExperimentConfig& cell : cells) {
      auto it = tuned.find(cell.curvature);
      if (it == tuned.end()) {
        it = tuned.emplace(cell.curvature,
                           calibrate_planar_threshold(cell, scans, sweep.calibrate_planar_count)).first;
        std::cerr << "calibrated " << to_string(cell.curvature) << " planar threshold: " << it->second << '\n';
      }
      cell.feature_params.planar_threshold = it->second;
      cell.feature_params.edge_threshold = std::max(cell.feature_params.edge_threshold, it->second);
    }
  }

  std::set<std::string> done;
  if (std::filesystem::exists(results_csv) && std::filesystem::file_size(results_csv) > 0) {
    for (const io::ResultRow& r : io::read_results_csv(results_csv)) done.insert(r.cell_key());
  }

  struct Job {
    const SequenceInput* input;
    const ExperimentConfig* cfg;
  };
  SweepReport report;
  std::vector<Job> jobs;
  for (const SequenceInput& in : inputs) {
    for (const ExperimentConfig& cell : cells) {
      if (done.count(describe_cell(cell, in.dataset, in.sequence).cell_key())) {
        ++report.resumed;
        continue;
      }
      try {
        check_inputs(cell, in);
      } catch (const ConfigError& e) {
        std::cerr << "skipping cell on " << in.dataset << "/" << in.sequence << ": " << e.what() << '\n';
        ++report.incompatible;
        continue;
      }
      jobs.push_back({&in, &cell});
    }
  }

  // Workers fill slots; rows are committed strictly in job order.
  std::vector<std::optional<io::ResultRow>> slots(jobs.size());
  std::mutex mu;
  std::size_t next_commit = 0;
  std::atomic<std::size_t> next_job{0};
  std::exception_ptr failure;
  std::atomic<bool> stop{false};

  auto commit_ready = [&] {
    while (next_commit < slots.size() && slots[next_commit]) {
      io::append_result_row(*slots[next_commit], results_csv);
      slots[next_commit].reset();
      ++next_commit;
      ++report.completed;
    }
  };

  auto worker = [&] {
    while (!stop) {
      const std::size_t k = next_job++;
      if (k >= jobs.size()) return;
      try {
        io::ResultRow row = run_pipeline(*jobs[k].cfg, *jobs[k].input).row;
        std::lock_guard lock(mu);
        slots[k] = std::move(row);
        commit_ready();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(sweep.base.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

SweepReport run_sweep(const SweepConfig& sweep) {
  std::vector<SequenceInput> inputs;
  for (const std::string& manifest : sweep.base.datasets) {
    inputs.push_back(sequence_from_dataset(io::load_dataset(manifest)));
  }
  return run_sweep(sweep, inputs, sweep.base.results_csv);
}

}  // namespace lo
