#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/imu.hpp"
#include "lo/pointcloud.hpp"
#include "lo/synthworld.hpp"
#include "lo/trajectory.hpp"

namespace lo::io {

namespace fs = std::filesystem;

/// Environment variable that, when set, replaces the manifest directory as the base for
/// relative dataset paths.
inline constexpr const char* kDatasetRootEnv = "LO_DATASET_ROOT";

// Scan binary format (little-endian):
//   header, 16 bytes: char[4] "LSCN", u32 version (1), u32 point count, f32 reserved (0)
//   record, 20 bytes: f32 x, f32 y, f32 z, f32 time_offset, u16 scanline, u16 pad (0)
inline constexpr std::uint32_t kScanVersion = 1;

void write_scan(const fs::path& path, const LidarScan& scan);
/// Stamp, period and scanline count come from the file name and manifest.
LidarScan read_scan(const fs::path& path, double stamp, double period, int num_scanlines);

/// "<nanoseconds>.bin", zero padded to 19 digits so lexical order is stamp order.
std::string scan_filename(double stamp);
/// Parses a scan file name back into seconds; empty if the name is not a stamp.
std::optional<double> stamp_from_filename(const fs::path& path);

/// "stamp tx ty tz qx qy qz qw" per line; '#' starts a comment line.
void write_trajectory(const Trajectory& traj, const fs::path& path);
Trajectory read_trajectory(const fs::path& path);
std::string format_trajectory_line(const StampedPose& s);

/// "stamp,wx,wy,wz,ax,ay,az" with a header line.
void write_imu_csv(std::span<const ImuMeasurement> imu, const fs::path& path);
std::vector<ImuMeasurement> read_imu_csv(const fs::path& path);

/// "stamp,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz": world-frame velocity and biases per stamp.
void write_states_csv(std::span<const synth::VelocityBiasSample> states, const fs::path& path);
std::vector<synth::VelocityBiasSample> read_states_csv(const fs::path& path);

enum class StampConvention { Start, Mid, End };
std::string_view to_string(StampConvention c);
StampConvention parse_stamp_convention(std::string_view s);

struct DatasetManifest {
  std::string name;
  std::string sequence;
  fs::path scan_dir;
  std::optional<fs::path> imu_path;
  std::optional<fs::path> imu_states_path;
  fs::path gt_path;
  int num_scanlines = 0;
  double period = 0.1;
  StampConvention stamp_convention = StampConvention::Start;
  double imu_rate = 0.0;
  Vec3 gravity = default_gravity();
  Pose lidar_to_imu;
  std::string units = "SI";
};

/// Parses a manifest; relative paths are resolved against LO_DATASET_ROOT or the manifest's
/// directory. Throws ConfigError for schema problems or missing files.
DatasetManifest read_manifest(const fs::path& path);
/// Writes a manifest with paths relative to its directory when possible.
void write_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Scans stay on disk and are read on demand.
class ScanStream {
 public:
  ScanStream() = default;
  ScanStream(std::vector<std::pair<double, fs::path>> files, double period, int num_scanlines);

  std::size_t size() const { return files_.size(); }
  double stamp(std::size_t i) const { return files_[i].first; }
  const fs::path& path(std::size_t i) const { return files_[i].second; }
  LidarScan load(std::size_t i) const;

 private:
  std::vector<std::pair<double, fs::path>> files_;
  double period_ = 0.1;
  int num_scanlines_ = 0;
};

struct Dataset {
  DatasetManifest manifest;
  ScanStream scans;
  std::vector<ImuMeasurement> imu;
  std::vector<synth::VelocityBiasSample> imu_states;
  Trajectory gt;

  bool has_imu() const { return !imu.empty() && !imu_states.empty(); }
};

Dataset load_dataset(const fs::path& manifest_path);

/// Writes a generated sequence as a dataset directory and returns the manifest path.
fs::path write_synthetic_dataset(const synth::SyntheticSequence& seq, const fs::path& dir,
                                 const std::string& name, const std::string& sequence,
                                 double imu_rate);

struct ResultRow {
  std::string dataset;
  std::string sequence;
  std::string dewarp;
  std::string init;
  std::string features;
  std::string residual;
  double epsilon = 0.0;
  std::string curvature;
  double window_s = 0.0;
  int window_j = 0;
  double ate_t = 0.0;
  double rte_t = 0.0;
  double wrte_t = 0.0;
  double ate_r = 0.0;
  double rte_r = 0.0;
  double wrte_r = 0.0;
  double runtime_ms = 0.0;
  double iterations_mean = 0.0;

  /// Identity of the experiment cell (every configuration column, no metrics).
  std::string cell_key() const;
};

inline constexpr std::string_view kResultsHeader =
    "dataset,sequence,dewarp,init,features,residual,epsilon,curvature,window_s,window_j,"
    "ate_t,rte_t,wrte_t,ate_r,rte_r,wrte_r,runtime_ms,iterations_mean";

std::string format_result_row(const ResultRow& row);
void write_results_csv(std::span<const ResultRow> rows, const fs::path& path);
/// Appends one complete row, writing the header first when the file is new or empty.
void append_result_row(const ResultRow& row, const fs::path& path);
std::vector<ResultRow> read_results_csv(const fs::path& path);

/// RFC 4180 field splitting for one record (no embedded newlines across calls).
std::vector<std::string> split_csv_record(std::string_view line);
std::string quote_csv_field(std::string_view field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace lo::io
