#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/kdtree.hpp"

namespace lo {

struct Point {
  Vec3 position = Vec3::Zero();  // LiDAR frame, meters
  double time_offset = 0.0;      // seconds since the scan stamp
  int scanline = 0;
  double range = 0.0;            // cached norm of position

  Point() = default;
  Point(const Vec3& p, double time_offset, int scanline)
      : position(p), time_offset(time_offset), scanline(scanline), range(p.norm()) {}
};

/// One sensor rotation. Points are grouped by scanline in increasing order and
/// azimuth-ordered within each scanline, so point index order is (scanline, azimuth).
class LidarScan {
 public:
  LidarScan() = default;
  LidarScan(double stamp, double period, int num_scanlines, std::vector<Point> points);

  double stamp() const { return stamp_; }
  double period() const { return period_; }
  int num_scanlines() const { return num_scanlines_; }
  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  /// Points of one scanline (possibly empty).
  std::span<const Point> scanline(int line) const;
  /// Index of the first point of a scanline within points().
  std::size_t scanline_begin(int line) const { return offsets_[line]; }

  /// Same metadata, new point set. Points must respect the grouping invariant.
  LidarScan with_points(std::vector<Point> points) const;

  /// Throws ConfigError when a structural invariant is violated.
  void validate() const;

 private:
  void build_offsets();

  double stamp_ = 0.0;
  double period_ = 0.1;
  int num_scanlines_ = 0;
  std::vector<Point> points_;
  std::vector<std::size_t> offsets_{0};
};

struct PreprocessParams {
  double min_range = 0.5;
  double max_range = 100.0;
  double parallel_angle_min = 10.0 * std::numbers::pi / 180.0;
  double discontinuity_ratio = 1.5;

  void validate() const;
};

/// Removes out-of-range returns, returns on surfaces nearly parallel to the ray, and
/// returns next to occlusion boundaries. Points separated by more than the nominal azimuth
/// step are not treated as neighbors, so preprocess is idempotent.
LidarScan preprocess(const LidarScan& scan, const PreprocessParams& params);

/// Spatial index over a scan, built once and read-only afterwards.
class ScanIndex {
 public:
  explicit ScanIndex(const LidarScan& scan);

  const LidarScan& scan() const { return *scan_; }
  const KdTree& tree() const { return tree_; }
  /// Tree over one scanline; neighbor indices are relative to scan().scanline_begin(line).
  const KdTree& scanline_tree(int line) const { return line_trees_[line]; }

  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const { return tree_.knn(query, k); }

 private:
  const LidarScan* scan_;
  KdTree tree_;
  std::vector<KdTree> line_trees_;
};

/// Exact k-NN, distance-sorted, ties by (scanline, azimuth) order.
std::vector<Neighbor> nearest_neighbors(const LidarScan& scan, const Vec3& query, std::size_t k);

}  // namespace lo
