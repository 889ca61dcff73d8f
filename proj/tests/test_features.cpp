#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "lo/error.hpp"
#include "lo/features.hpp"
#include "lo/pointcloud.hpp"
#include "lo/synthworld.hpp"
#include "support.hpp"

using namespace lo;
using lo::test::jacobi_eigenvalues;
using lo::test::Rng;

namespace {

std::vector<Point> line_points(const std::vector<Vec3>& ps, int scanline = 0) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.emplace_back(ps[i], 1e-4 * static_cast<double>(i), scanline);
  return out;
}

Mat3 window_matrix(const std::vector<Vec3>& ps, std::size_t i, int n) {
  Mat3 s = Mat3::Zero();
  for (int j = -n; j <= n; ++j) {
    const Vec3 d = ps[i + j] - ps[i];
    s += d * d.transpose();
  }
  return s / (2.0 * n);
}

// Scan whose points sit on a plane, laid out as a grid of `lines` scanlines.
LidarScan plane_scan(const std::function<Vec3(double, double)>& surface, int lines, int per_line) {
  std::vector<Point> pts;
  for (int l = 0; l < lines; ++l) {
    for (int i = 0; i < per_line; ++i) {
      pts.emplace_back(surface(0.1 * i, 0.15 * l), 1e-4 * i, l);
    }
  }
  return LidarScan(0.0, 0.1, lines, pts);
}

// Surface label of the simulated return at exactly a given position.
class Labels {
 public:
  explicit Labels(const synth::SimulatedScan& sim) : labels_(sim.labels) {
    std::vector<Vec3> pts;
    for (const Point& p : sim.scan.points()) pts.push_back(p.position);
    tree_ = KdTree(std::move(pts));
  }
  int at(const Vec3& p) const {
    Neighbor n;
    if (!tree_.nearest(p, n) || n.squared_distance > 0.0) return -1;
    return labels_[n.index];
  }

 private:
  KdTree tree_;
  std::vector<int> labels_;
};

}  // namespace

TEST_CASE("classical curvature examples") {
  std::vector<Vec3> line;
  for (int i = 0; i < 11; ++i) line.push_back({0.2 * i, 1.0, 3.0});
  const auto c = curvature_classical(line_points(line), 5);
  CHECK(c[5].valid);
  CHECK(c[5].value < 1e-12);
  CHECK_FALSE(c[0].valid);
  CHECK_FALSE(c[10].valid);

  const auto corner = curvature_classical(line_points({{-1, 0, 0}, {0, 0, 0}, {0, 1, 0}}), 1);
  CHECK(std::abs(corner[1].value - std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("scanline eigen curvature examples") {
  std::vector<Vec3> collinear;
  for (int i = 0; i < 7; ++i) collinear.push_back({1.0 + 0.1 * i, 2.0 - 0.05 * i, 0.0});
  const auto c = curvature_scanline_eigen(line_points(collinear), 3);
  CHECK(c[3].valid);
  CHECK(c[3].value < 1e-15);

  // Right-angle corner with unit arms sampled at half-unit steps, n = 2.
  const std::vector<Vec3> corner{{-1, 0, 0}, {-0.5, 0, 0}, {0, 0, 0}, {0, 0.5, 0}, {0, 1, 0}};
  const auto k = curvature_scanline_eigen(line_points(corner), 2);
  const Vec3 oracle = jacobi_eigenvalues(window_matrix(corner, 2, 2));
  CHECK(k[2].valid);
  CHECK(std::abs(k[2].value - oracle[1]) < 1e-14);
  CHECK(oracle[1] > 0.1);

  const std::vector<Vec3> same(5, Vec3(1, 1, 1));
  const auto d = curvature_scanline_eigen(line_points(same), 2);
  CHECK_FALSE(d[2].valid);
  CHECK(d[2].value == 0.0);
}

TEST_CASE("property: scanline eigen value equals jacobi oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> ps;
    for (int i = 0; i < 11; ++i) ps.push_back(rng.vec(2.0));
    const auto c = curvature_scanline_eigen(line_points(ps), 5);
    const Vec3 oracle = jacobi_eigenvalues(window_matrix(ps, 5, 5));
    CHECK(std::abs(c[5].value - std::max(0.0, oracle[1])) < 1e-12);
  }
}

TEST_CASE("nn eigen curvature examples") {
  const LidarScan flat = plane_scan([](double u, double v) { return Vec3(u, v, 2.0); }, 3, 20);
  const ScanIndex index(flat);
  const Curvature c = curvature_nn_eigen(index, flat.scanline_begin(1) + 10, 10, 2);
  CHECK(c.valid);
  CHECK(c.value < 1e-9);

  const LidarScan one_line = plane_scan([](double u, double) { return Vec3(u, 0.0, 2.0); }, 1, 30);
  const ScanIndex idx1(one_line);
  CHECK_FALSE(curvature_nn_eigen(idx1, 15, 10, 2).valid);

  Rng rng(22);
  std::vector<Point> pts;
  for (int l = 0; l < 4; ++l) {
    for (int i = 0; i < 10; ++i) pts.emplace_back(Vec3(rng.normal(), rng.normal(), rng.normal()), 1e-4 * i, l);
  }
  const LidarScan cloud(0.0, 0.1, 4, pts);
  const ScanIndex idx2(cloud);
  const auto nn = idx2.knn(cloud.points()[7].position, 10);
  std::vector<Vec3> hood;
  for (const Neighbor& n : nn) hood.push_back(cloud.points()[n.index].position);
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : hood) mean += p;
  mean /= 10.0;
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : hood) cov += (p - mean) * (p - mean).transpose();
  cov /= 10.0;
  const Curvature g = curvature_nn_eigen(idx2, 7, 10, 2);
  CHECK(std::abs(g.value - jacobi_eigenvalues(cov)[0]) < 1e-12);
}

TEST_CASE("normal estimation examples") {
  const LidarScan floor = plane_scan([](double u, double v) { return Vec3(u - 1.0, v - 0.3, -1.5); }, 5, 25);
  const ScanIndex fi(floor);
  const auto n = estimate_normal(fi, Vec3(0.2, 0.0, -1.5));
  REQUIRE(n);
  CHECK((*n - Vec3(0, 0, 1)).norm() < 1e-9);

  const double c = 4.0;
  const Vec3 u = Vec3(1, -1, 0).normalized();
  const Vec3 v = Vec3(1, 1, -2).normalized();
  const Vec3 origin = Vec3(1, 1, 1) * (c / 3.0);
  const LidarScan tilted =
      plane_scan([&](double a, double b) { return origin + (a - 1.0) * u + (b - 0.3) * v; }, 5, 25);
  const ScanIndex ti(tilted);
  const auto m = estimate_normal(ti, origin);
  REQUIRE(m);
  CHECK(std::abs(std::abs(m->dot(Vec3(1, 1, 1).normalized())) - 1.0) < 1e-9);
  CHECK(m->dot(origin) < 0.0);
  CHECK(std::abs(m->norm() - 1.0) < 1e-9);

  const LidarScan collinear = plane_scan([](double a, double) { return Vec3(a, 0.5, 2.0); }, 3, 10);
  const ScanIndex ci(collinear);
  CHECK_FALSE(estimate_normal(ci, Vec3(0.5, 0.5, 2.0)));
}

TEST_CASE("edge direction examples") {
  std::vector<Vec3> z_axis, diagonal;
  for (int i = -5; i <= 5; ++i) {
    z_axis.push_back({0, 0, 0.1 * i});
    diagonal.push_back(Vec3(1, 1, 0) * 0.1 * i);
  }
  const auto dz = estimate_edge_direction(KdTree(z_axis), Vec3::Zero(), 1.0);
  REQUIRE(dz);
  CHECK(std::abs(std::abs(dz->direction.z()) - 1.0) < 1e-12);
  CHECK_FALSE(dz->low_confidence);
  const auto dd = estimate_edge_direction(KdTree(diagonal), Vec3::Zero(), 1.0);
  REQUIRE(dd);
  CHECK(std::abs(std::abs(dd->direction.dot(Vec3(1, 1, 0).normalized())) - 1.0) < 1e-12);

  std::vector<Vec3> blob;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) blob.push_back({0.1 * x, 0.1 * y, 0.1 * z});
  const auto di = estimate_edge_direction(KdTree(blob), Vec3::Zero(), 1.0);
  REQUIRE(di);
  CHECK(di->low_confidence);
  CHECK(std::abs(di->direction.norm() - 1.0) < 1e-12);
  CHECK_FALSE(estimate_edge_direction(KdTree({Vec3::Zero(), Vec3::UnitX()}), Vec3::Zero(), 2.0));
}

TEST_CASE("classify a single large plane") {
  synth::Scene scene;
  scene.planes.push_back({Vec3(0, 0, -1.5), Vec3::UnitZ(), Vec3::UnitX(), 80.0, 80.0, "ground"});
  const synth::ConstantScrew still;
  const auto sim = synth::simulate_scan(scene, still, 0.0, synth::LidarModel{}, false);
  const LidarScan pre = preprocess(sim.scan, {});
  const ScanIndex index(pre);
  for (CurvatureMethod m :
       {CurvatureMethod::Classical, CurvatureMethod::ScanlineEigen, CurvatureMethod::NearestNeighborEigen}) {
    const auto fs = classify(index, default_feature_params(m), m);
    std::size_t planar = 0;
    for (const Feature& f : fs) {
      CHECK(f.kind != FeatureKind::Edge);
      if (f.kind == FeatureKind::Planar) {
        ++planar;
        CHECK(std::abs(f.normal->z() - 1.0) < 1e-6);
      }
    }
    CHECK(planar > 1000);
  }
}

TEST_CASE("classify finds edges on a pole") {
  synth::Scene scene = synth::box_room();
  synth::add_pole(scene, {2.0, 0.5, -1.0}, 0.15, 4.0);
  const int pole_id = static_cast<int>(scene.planes.size());
  synth::LidarModel model;
  model.points_per_line = 1000;
  const auto sim = synth::simulate_scan(scene, synth::ConstantScrew{}, 0.0, model, false);
  const LidarScan pre = preprocess(sim.scan, {});
  const ScanIndex index(pre);
  const auto fs = classify(index, default_feature_params(CurvatureMethod::Classical), CurvatureMethod::Classical);
  const Labels labels(sim);
  int on_pole = 0;
  for (const Feature& f : fs) {
    if (f.kind != FeatureKind::Edge) continue;
    if (labels.at(f.position) != pole_id) continue;
    ++on_pole;
    CHECK(std::abs(f.direction->z()) > 0.9);
  }
  CHECK(on_pole >= 4);
}

TEST_CASE("empty threshold band yields no features") {
  synth::Scene scene = synth::box_room();
  const auto sim = synth::simulate_scan(scene, synth::ConstantScrew{}, 0.0, synth::LidarModel{}, false);
  const LidarScan pre = preprocess(sim.scan, {});
  const ScanIndex index(pre);
  FeatureParams p = default_feature_params(CurvatureMethod::Classical);
  p.planar_threshold = 0.0;
  p.edge_threshold = std::numeric_limits<double>::infinity();
  CHECK(classify(index, p, CurvatureMethod::Classical).empty());
}

TEST_CASE("property: feature attributes match their kind") {
  synth::Scene scene = synth::box_room();
  synth::add_box(scene, {3, 2, 0}, {1.5, 1, 2});
  synth::add_pole(scene, {-2, -2, -1}, 0.15, 4);
  Rng rng(24);
  for (int trial = 0; trial < 3; ++trial) {
    synth::ConstantScrew at;
    at.start = Pose(so3_exp(Vec3(0, 0, rng.uniform(-1, 1))), rng.vec(1.0));
    const auto sim = synth::simulate_scan(scene, at, 0.0, synth::LidarModel{}, false);
    const LidarScan pre = preprocess(sim.scan, {});
    const ScanIndex index(pre);
    for (CurvatureMethod m :
         {CurvatureMethod::Classical, CurvatureMethod::ScanlineEigen, CurvatureMethod::NearestNeighborEigen}) {
      for (const Feature& f : classify(index, default_feature_params(m), m)) {
        CHECK(f.curvature.method == m);
        CHECK(f.curvature.value >= 0.0);
        CHECK(f.normal.has_value() == (f.kind == FeatureKind::Planar));
        CHECK(f.direction.has_value() == (f.kind == FeatureKind::Edge));
        if (f.normal) CHECK(std::abs(f.normal->norm() - 1.0) < 1e-9);
        if (f.direction) CHECK(std::abs(f.direction->norm() - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("property: planar precision on plane interiors for every method") {
  synth::Scene scene = synth::box_room();
  synth::add_box(scene, {3, 2, 0}, {1.5, 1, 2});
  synth::add_pole(scene, {-2, -2, -1}, 0.15, 4);
  for (int k = 0; k < 2; ++k) {
    synth::ConstantScrew at;
    at.start = Pose::translate(0.4 * k - 1.0, 0.3 * k, 0.1 * k);
    const auto sim = synth::simulate_scan(scene, at, 0.0, synth::LidarModel{}, false);
    const LidarScan pre = preprocess(sim.scan, {});
    const ScanIndex index(pre);
    const Labels labels(sim);
    for (CurvatureMethod m :
         {CurvatureMethod::Classical, CurvatureMethod::ScanlineEigen, CurvatureMethod::NearestNeighborEigen}) {
      int planar = 0, correct = 0;
      for (const Feature& f : classify(index, default_feature_params(m), m)) {
        if (f.kind != FeatureKind::Planar) continue;
        ++planar;
        const int id = labels.at(f.position);
        if (!scene.is_plane(id)) continue;
        const Vec3 n_world = at.start.rotation() * *f.normal;
        // Interior points carry the normal of their own face.
        if (std::abs(n_world.dot(scene.planes[id].normal)) > std::cos(5.0 * std::numbers::pi / 180.0)) ++correct;
      }
      REQUIRE(planar > 0);
      CHECK(static_cast<double>(correct) / planar >= 0.95);
    }
  }
}

TEST_CASE("feature parameter validation") {
  FeatureParams p = default_feature_params(CurvatureMethod::Classical);
  p.planar_threshold = 0.5;
  p.edge_threshold = 0.1;
  CHECK_THROWS_AS(p.validate(CurvatureMethod::Classical), ConfigError);
  p = default_feature_params(CurvatureMethod::Classical);
  p.window_half_size = 0;
  CHECK_THROWS_AS(p.validate(CurvatureMethod::Classical), ConfigError);
  CHECK_THROWS_AS(parse_curvature_method("bogus"), ConfigError);
  CHECK(parse_curvature_method("nn_eigen") == CurvatureMethod::NearestNeighborEigen);
}
