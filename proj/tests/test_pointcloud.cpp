#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lo/error.hpp"
#include "lo/kdtree.hpp"
#include "lo/pointcloud.hpp"
#include "support.hpp"

using namespace lo;
using lo::test::Rng;

namespace {

std::vector<Neighbor> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({i, (pts[i] - q).squaredNorm()});
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

// One scanline of points around the sensor at the given ranges, equally spaced in time.
LidarScan ring_scan(const std::vector<double>& ranges, double period = 0.1) {
  std::vector<Point> pts;
  const double n = static_cast<double>(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double az = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
    pts.emplace_back(ranges[i] * Vec3(std::cos(az), std::sin(az), 0.0), period * static_cast<double>(i) / n, 0);
  }
  return LidarScan(0.0, period, 1, std::move(pts));
}

}  // namespace

TEST_CASE("kdtree examples") {
  KdTree line({{1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
  const auto two = line.knn(Vec3::Zero(), 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].index == 0);
  CHECK(two[1].index == 1);
  const auto self = line.knn(Vec3(2, 0, 0), 1);
  CHECK(self[0].index == 1);
  CHECK(self[0].squared_distance == 0.0);
  CHECK(line.knn(Vec3::Zero(), 10).size() == 3);
  Neighbor n;
  CHECK_FALSE(KdTree().nearest(Vec3::Zero(), n));
}

TEST_CASE("scan knn tie goes to the lower scanline") {
  std::vector<Point> pts;
  for (int l = 0; l < 8; ++l) {
    if (l == 3) pts.emplace_back(Vec3(1, 0, 0), 0.0, 3);
    if (l == 7) pts.emplace_back(Vec3(-1, 0, 0), 0.0, 7);
  }
  const LidarScan scan(0.0, 0.1, 8, pts);
  const auto nn = nearest_neighbors(scan, Vec3::Zero(), 1);
  REQUIRE(nn.size() == 1);
  CHECK(scan.points()[nn[0].index].scanline == 3);
  CHECK_THROWS_AS(nearest_neighbors(scan, Vec3::Zero(), 0), ConfigError);
}

TEST_CASE("property: kdtree knn and radius equal brute force") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> pts;
    const int n = rng.integer(1, 400);
    for (int i = 0; i < n; ++i) {
      // Snapping to a lattice creates exact distance ties.
      Vec3 p = rng.vec(5.0);
      if (trial % 3 == 0) p = (p * 2.0).array().round() / 2.0;
      pts.push_back(p);
    }
    const KdTree tree(pts);
    for (int q = 0; q < 20; ++q) {
      const Vec3 query = rng.vec(6.0);
      const std::size_t k = static_cast<std::size_t>(rng.integer(1, 15));
      CHECK(tree.knn(query, k) == brute_knn(pts, query, k));
      const double r = rng.uniform(0.0, 3.0);
      std::vector<Neighbor> expected;
      for (const Neighbor& nb : brute_knn(pts, query, pts.size())) {
        if (nb.squared_distance <= r * r) expected.push_back(nb);
      }
      CHECK(tree.radius(query, r) == expected);
    }
  }
}

TEST_CASE("scan structure invariants") {
  std::vector<Point> bad_line{Point(Vec3(1, 0, 0), 0.0, 2)};
  CHECK_THROWS_AS(LidarScan(0.0, 0.1, 2, bad_line), ConfigError);
  std::vector<Point> bad_time{Point(Vec3(1, 0, 0), 0.1, 0)};
  CHECK_THROWS_AS(LidarScan(0.0, 0.1, 1, bad_time), ConfigError);
  std::vector<Point> unordered{Point(Vec3(1, 0, 0), 0.05, 0), Point(Vec3(1, 1, 0), 0.01, 0)};
  CHECK_THROWS_AS(LidarScan(0.0, 0.1, 1, unordered), ConfigError);
  const Point p(Vec3(3, 4, 0), 0.0, 0);
  CHECK(std::abs(p.range - 5.0) < 1e-12);
}

TEST_CASE("preprocess range filter") {
  const LidarScan scan(0.0, 0.1, 1, {Point(Vec3(0.1, 0, 0), 0.0, 0)});
  CHECK(preprocess(scan, {}).empty());
  CHECK(preprocess(LidarScan(0.0, 0.1, 1, {}), {}).empty());
}

TEST_CASE("preprocess keeps a sphere unchanged") {
  Rng rng(12);
  std::vector<Point> pts;
  const int lines = 8, per_line = 90;
  for (int l = 0; l < lines; ++l) {
    const double el = -0.3 + 0.6 * l / (lines - 1);
    for (int i = 0; i < per_line; ++i) {
      const double az = 2.0 * std::numbers::pi * i / per_line;
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      pts.emplace_back(10.0 * dir, 0.1 * i / per_line, l);
    }
  }
  const LidarScan scan(0.0, 0.1, lines, pts);
  CHECK(preprocess(scan, {}).size() == scan.size());
}

TEST_CASE("preprocess flags the far side of a range discontinuity") {
  std::vector<double> ranges(60, 5.0);
  for (std::size_t i = 30; i < 60; ++i) ranges[i] = 25.0;
  const LidarScan scan = ring_scan(ranges);
  PreprocessParams params;
  params.discontinuity_ratio = 2.0;
  params.parallel_angle_min = 0.0;
  const LidarScan out = preprocess(scan, params);
  auto kept = [&](std::size_t i) {
    const double t = scan.points()[i].time_offset;
    return std::any_of(out.points().begin(), out.points().end(),
                       [&](const Point& p) { return p.time_offset == t; });
  };
  CHECK(kept(29));
  CHECK_FALSE(kept(30));
  CHECK(kept(40));
}

TEST_CASE("preprocess removes returns from surfaces parallel to the ray") {
  // Points along a ray-aligned wall: consecutive points move almost radially.
  std::vector<Point> pts;
  for (int i = 0; i < 20; ++i) {
    const double x = 2.0 + 0.5 * i;
    pts.emplace_back(Vec3(x, 0.05, 0.0), 0.001 * i, 0);
  }
  const LidarScan out = preprocess(LidarScan(0.0, 0.1, 1, pts), {});
  CHECK(out.size() < 3);
}

TEST_CASE("property: preprocess is idempotent and only removes points") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ranges;
    double r = rng.uniform(1.0, 20.0);
    for (int i = 0; i < 200; ++i) {
      if (rng.uniform(0, 1) < 0.05) r = rng.uniform(0.2, 40.0);
      ranges.push_back(r + rng.normal(0.01));
    }
    const LidarScan scan = ring_scan(ranges);
    const LidarScan once = preprocess(scan, {});
    const LidarScan twice = preprocess(once, {});
    CHECK(once.size() <= scan.size());
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(twice.points()[i].position == once.points()[i].position);
    }
    for (const Point& p : once.points()) CHECK((p.range >= 0.5 && p.range <= 100.0));
  }
}

TEST_CASE("preprocess parameter validation") {
  PreprocessParams p;
  p.min_range = 5.0;
  p.max_range = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.discontinuity_ratio = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
