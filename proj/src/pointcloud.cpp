#include "lo/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lo/error.hpp"

namespace lo {

LidarScan::LidarScan(double stamp, double period, int num_scanlines, std::vector<Point> points)
    : stamp_(stamp), period_(period), num_scanlines_(num_scanlines), points_(std::move(points)) {
  validate();
  build_offsets();
}

void LidarScan::validate() const {
  if (num_scanlines_ < 0) throw ConfigError("LidarScan: negative scanline count");
  if (!(period_ > 0.0)) throw ConfigError("LidarScan: period must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Point& p = points_[i];
    if (p.scanline < 0 || p.scanline >= num_scanlines_) {
      throw ConfigError("LidarScan: point " + std::to_string(i) + " has scanline " +
                        std::to_string(p.scanline) + " outside [0, " +
                        std::to_string(num_scanlines_) + ")");
    }
    if (!(p.time_offset >= 0.0 && p.time_offset < period_)) {
      throw ConfigError("LidarScan: point " + std::to_string(i) + " time offset " +
                        std::to_string(p.time_offset) + " outside [0, period)");
    }
    if (i > 0) {
      const Point& q = points_[i - 1];
      if (p.scanline < q.scanline) {
        throw ConfigError("LidarScan: points not grouped by scanline at index " +
                          std::to_string(i));
      }
      if (p.scanline == q.scanline && p.time_offset < q.time_offset) {
        throw ConfigError("LidarScan: time offsets decrease within scanline at index " +
                          std::to_string(i));
      }
    }
  }
}

void LidarScan::build_offsets() {
  offsets_.assign(static_cast<std::size_t>(num_scanlines_) + 1, 0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_scanlines_), 0);
  for (const Point& p : points_) ++counts[p.scanline];
  for (int l = 0; l < num_scanlines_; ++l) offsets_[l + 1] = offsets_[l] + counts[l];
}

std::span<const Point> LidarScan::scanline(int line) const {
  return std::span<const Point>(points_).subspan(offsets_[line],
                                                 offsets_[line + 1] - offsets_[line]);
}

LidarScan LidarScan::with_points(std::vector<Point> points) const {
  return LidarScan(stamp_, period_, num_scanlines_, std::move(points));
}

void PreprocessParams::validate() const {
  if (!(min_range >= 0.0 && min_range < max_range)) {
    throw ConfigError("PreprocessParams: require 0 <= min_range < max_range");
  }
  if (!(discontinuity_ratio > 1.0)) {
    throw ConfigError("PreprocessParams: discontinuity_ratio must exceed 1");
  }
  if (!(parallel_angle_min >= 0.0)) {
    throw ConfigError("PreprocessParams: parallel_angle_min must be non-negative");
  }
}

namespace {

// Nominal in-scanline sample spacing in time, used to decide whether two consecutive
// surviving points are true sensor neighbors.
double nominal_step(const LidarScan& scan) {
  std::vector<double> gaps;
  gaps.reserve(scan.size());
  for (int l = 0; l < scan.num_scanlines(); ++l) {
    const auto line = scan.scanline(l);
    for (std::size_t i = 1; i < line.size(); ++i) {
      gaps.push_back(line[i].time_offset - line[i - 1].time_offset);
    }
  }
  if (gaps.empty()) return 0.0;
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return *mid;
}

}  // namespace

LidarScan preprocess(const LidarScan& scan, const PreprocessParams& params) {
  params.validate();

  std::vector<Point> in_range;
  in_range.reserve(scan.size());
  for (const Point& p : scan.points()) {
    if (p.range >= params.min_range && p.range <= params.max_range) in_range.push_back(p);
  }
  const LidarScan ranged = scan.with_points(std::move(in_range));

  // Consecutive points count as neighbors only when no sample is missing between them;
  // removed points therefore never create new neighbor pairs.
  const double step = nominal_step(ranged);
  const double max_gap = step > 0.0 ? 1.5 * step : std::numeric_limits<double>::infinity();
  const double cos_parallel = std::cos(params.parallel_angle_min);

  std::vector<char> keep(ranged.size(), 1);
  for (int l = 0; l < ranged.num_scanlines(); ++l) {
    const auto line = ranged.scanline(l);
    const std::size_t base = ranged.scanline_begin(l);
    const std::size_t n = line.size();
    auto adjacent = [&](std::size_t i) {
      return line[i + 1].time_offset - line[i].time_offset <= max_gap;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!adjacent(i)) continue;
      const Point& a = line[i];
      const Point& b = line[i + 1];

      const Vec3 seg = b.position - a.position;
      const double seg_norm = seg.norm();
      if (seg_norm > 0.0 && a.range > 0.0) {
        const double c = std::abs(seg.dot(a.position)) / (seg_norm * a.range);
        if (c > cos_parallel) keep[base + i] = 0;
      }

      const double near = std::min(a.range, b.range);
      const double far = std::max(a.range, b.range);
      if (far > params.discontinuity_ratio * near) {
        if (b.range > a.range) {
          for (std::size_t j = i + 1; j < std::min(n, i + 4); ++j) keep[base + j] = 0;
        } else {
          for (std::size_t j = i + 1; j-- > 0 && j + 3 > i;) keep[base + j] = 0;
        }
      }
    }
  }

  std::vector<Point> out;
  out.reserve(ranged.size());
  for (std::size_t i = 0; i < ranged.size(); ++i) {
    if (keep[i]) out.push_back(ranged.points()[i]);
  }
  return ranged.with_points(std::move(out));
}

ScanIndex::ScanIndex(const LidarScan& scan) : scan_(&scan) {
  std::vector<Vec3> all;
  all.reserve(scan.size());
  for (const Point& p : scan.points()) all.push_back(p.position);
  tree_ = KdTree(std::move(all));
  line_trees_.reserve(static_cast<std::size_t>(scan.num_scanlines()));
  for (int l = 0; l < scan.num_scanlines(); ++l) {
    std::vector<Vec3> pts;
    for (const Point& p : scan.scanline(l)) pts.push_back(p.position);
    line_trees_.emplace_back(std::move(pts));
  }
}

std::vector<Neighbor> nearest_neighbors(const LidarScan& scan, const Vec3& query, std::size_t k) {
  if (scan.empty()) throw ConfigError("nearest_neighbors: empty scan");
  if (k == 0) throw ConfigError("nearest_neighbors: k must be at least 1");
  return ScanIndex(scan).knn(query, k);
}

}  // namespace lo
