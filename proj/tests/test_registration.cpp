#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "lo/error.hpp"
#include "lo/features.hpp"
#include "lo/pointcloud.hpp"
#include "lo/registration.hpp"
#include "lo/synthworld.hpp"
#include "support.hpp"

using namespace lo;
using lo::test::poses_close;
using lo::test::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

Correspondence planar_pair(Rng& rng) {
  Correspondence c;
  c.source = Feature::planar(rng.vec(5.0), rng.unit());
  c.target = Feature::planar(rng.vec(5.0), rng.unit());
  return c;
}

std::vector<Feature> extract(const synth::Scene& scene, const Pose& pose) {
  synth::ConstantScrew at;
  at.start = pose;
  const auto sim = synth::simulate_scan(scene, at, 0.0, synth::LidarModel{}, false);
  const LidarScan pre = preprocess(sim.scan, {});
  const ScanIndex index(pre);
  std::vector<Feature> out;
  for (Feature& f : classify(index, default_feature_params(CurvatureMethod::Classical), CurvatureMethod::Classical)) {
    if (f.kind == FeatureKind::Planar) out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

TEST_CASE("weighting endpoint equalities") {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const Correspondence c = planar_pair(rng);
    const Pose x = rng.pose();
    const Vec3 n = *c.target.normal;
    CHECK(weighting(c, {ResidualKind::PseudoPointToPlane, 0.0}, x) == n * n.transpose());
    CHECK(weighting(c, {ResidualKind::PseudoPointToPlane, 1.0}, x) == Mat3::Identity());
    CHECK(weighting(c, {ResidualKind::PseudoPointToPlane, 0.0}, x) ==
          weighting(c, {ResidualKind::PointToPlane, 0.0}, x));
    CHECK(weighting(c, {ResidualKind::PseudoPlaneToPlane, 0.0}, x) ==
          weighting(c, {ResidualKind::PlaneToPlane, 0.0}, x));
    CHECK(weighting(c, {ResidualKind::PseudoPlaneToPlane, 1.0}, x) == 2.0 * Mat3::Identity());
  }
  Correspondence e;
  e.target = Feature::edge(Vec3::Zero(), Vec3::UnitZ());
  const Mat3 a = weighting(e, {ResidualKind::PointToEdge, 0.0}, Pose::identity());
  CHECK(a == Vec3(1, 1, 0).asDiagonal().toDenseMatrix());
}

TEST_CASE("property: weighting matrices are symmetric PSD and annihilators idempotent") {
  Rng rng(32);
  for (int i = 0; i < 500; ++i) {
    Correspondence c = planar_pair(rng);
    const Pose x = rng.pose();
    for (ResidualKind k : {ResidualKind::PointToPoint, ResidualKind::PointToPlane, ResidualKind::PseudoPointToPlane,
                           ResidualKind::PlaneToPlane, ResidualKind::PseudoPlaneToPlane}) {
      for (double eps : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const Mat3 w = weighting(c, {k, eps}, x);
        CHECK((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(w).eigenvalues().minCoeff() >= -1e-12);
      }
    }
    Correspondence e;
    const Vec3 d = rng.unit();
    e.target = Feature::edge(rng.vec(3.0), d);
    const Mat3 a = weighting(e, {ResidualKind::PointToEdge, 0.0}, x);
    CHECK((a * a - a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a * d).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("weighting requires attributes") {
  Correspondence c;
  c.source = Feature::point(Vec3::Zero());
  c.target = Feature::point(Vec3::Zero());
  CHECK_THROWS_AS(weighting(c, {ResidualKind::PointToPlane, 0.0}, Pose::identity()), ConfigError);
  CHECK_THROWS_AS(weighting(c, {ResidualKind::PointToEdge, 0.0}, Pose::identity()), ConfigError);
  CHECK_THROWS_AS(ResidualVariant({ResidualKind::PseudoPointToPlane, 1.5}).validate(), ConfigError);
}

TEST_CASE("effective variant per feature kind") {
  const ResidualVariant p2p{ResidualKind::PlaneToPlane, 0.0};
  CHECK(effective_variant(FeatureKind::Planar, p2p).kind == ResidualKind::PlaneToPlane);
  CHECK(effective_variant(FeatureKind::Edge, p2p).kind == ResidualKind::PointToEdge);
  CHECK(effective_variant(FeatureKind::Point, p2p).kind == ResidualKind::PointToPoint);
  CHECK(effective_variant(FeatureKind::Planar, {ResidualKind::PointToPoint, 0.0}).kind == ResidualKind::PointToPoint);
}

TEST_CASE("residual examples") {
  Correspondence c;
  c.source = Feature::point({2, 1, 0});
  c.target = Feature::point({1, 2, 0});
  CHECK(residual(c, Pose::translate(-1, 1, 0)).norm() == 0.0);
  c.source = Feature::point(Vec3::Zero());
  c.target = Feature::point({1, 0, 0});
  CHECK(residual(c, Pose::identity()) == Vec3(1, 0, 0));
  c.source = Feature::point({1, 0, 0});
  c.target = Feature::point(Vec3::Zero());
  CHECK((residual(c, Pose::rot_z(kPi / 2)) - Vec3(0, -1, 0)).norm() < 1e-15);
}

TEST_CASE("property: analytic jacobian matches central differences") {
  Rng rng(33);
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const Pose x = rng.pose();
    Correspondence c;
    c.source = Feature::point(rng.vec(10.0));
    c.target = Feature::point(rng.vec(10.0));
    const Eigen::Matrix<double, 3, 6> j = residual_jacobian(x, c.source.position);
    Eigen::Matrix<double, 3, 6> fd;
    for (int k = 0; k < 6; ++k) {
      Vec6 d = Vec6::Zero();
      d[k] = h;
      const Vec3 plus = residual(c, compose(x, exp(Twist::from_vector(d))));
      const Vec3 minus = residual(c, compose(x, exp(Twist::from_vector(-d))));
      fd.col(k) = (plus - minus) / (2.0 * h);
    }
    CHECK((j - fd).norm() / std::max(1.0, j.norm()) < 1e-5);
  }
}

TEST_CASE("constant velocity init examples") {
  CHECK(poses_close(init_constant_velocity(Pose::identity(), 0.1, 0.1), Pose::identity(), 0.0));
  Rng rng(34);
  const Pose d = rng.pose(1.0, 2.0);
  const Pose same = init_constant_velocity(d, 0.1, 0.1);
  CHECK(same.translation() == d.translation());
  CHECK(same.rotation().coeffs() == d.rotation().coeffs());
  CHECK(poses_close(init_constant_velocity(Pose::translate(2, 0, 0), 0.2, 0.1), Pose::translate(1, 0, 0), 1e-15));
  CHECK_THROWS_AS(init_constant_velocity(d, 0.0, 0.1), ConfigError);
}

TEST_CASE("imu init examples") {
  synth::ConstantScrew still;
  still.start = Pose::translate(1, 2, 3);
  const auto imu = synth::simulate_imu(still, 200.0, 0.0, 0.2);
  const ImuState s0 = synth::true_imu_state(still, 0.0);
  CHECK(poses_close(init_imu(still.start, s0, imu, 0.0, 0.1), Pose::identity(), 1e-12));

  synth::ConstantScrew screw;
  screw.start = Pose(so3_exp(Vec3(0.1, 0, 0.3)), Vec3(1, 0, 0));
  screw.rate = {{0.05, 0.02, 0.4}, {1.5, 0.1, 0.05}};
  const auto m = synth::simulate_imu(screw, 40000.0, 0.0, 0.2);
  const ImuState s = synth::true_imu_state(screw, 0.0);
  const Pose predicted = init_imu(screw.start, s, m, 0.0, 0.1);
  const Pose cv = init_constant_velocity(exp(screw.rate.scaled(0.2)), 0.2, 0.1);
  CHECK(poses_close(predicted, cv, 1e-6));

  std::vector<ImuMeasurement> gap(m.begin(), m.begin() + 1000);
  gap.insert(gap.end(), m.begin() + 3000, m.end());
  CHECK_THROWS_AS(init_imu(screw.start, s, gap, 0.0, 0.2), CoverageError);
}

TEST_CASE("matching examples") {
  std::vector<Feature> grid;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 2; ++z) grid.push_back(Feature::point(Vec3(2.0 * x, 2.0 * y, 2.0 * z)));
  IcpConfig cfg;
  const auto self = match(grid, grid, Pose::identity(), cfg);
  REQUIRE(self.size() == grid.size());
  for (std::size_t i = 0; i < self.size(); ++i) {
    CHECK(self[i].target.position == grid[i].position);
    CHECK(residual(self[i], Pose::identity()).norm() == 0.0);
  }
  std::vector<Feature> shifted;
  for (const Feature& f : grid) shifted.push_back(Feature::point(f.position + Vec3(0.5, 0, 0)));
  const auto m = match(shifted, grid, Pose::identity(), cfg);
  REQUIRE(m.size() == grid.size());
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i].target.position == grid[i].position);
  cfg.max_correspondence_distance = 0.0;
  CHECK_THROWS_AS(match(shifted, grid, Pose::identity(), cfg), DegenerateMatchError);
}

TEST_CASE("matching keeps feature classes apart") {
  std::vector<Feature> target{Feature::planar({0, 0, 0}, Vec3::UnitZ()), Feature::edge({0.1, 0, 0}, Vec3::UnitZ())};
  std::vector<Feature> source{Feature::edge({0.01, 0, 0}, Vec3::UnitZ())};
  const auto m = match(source, target, Pose::identity(), IcpConfig{});
  REQUIRE(m.size() == 1);
  CHECK(m[0].target.kind == FeatureKind::Edge);
}

TEST_CASE("solve on identical scans") {
  const synth::Scene scene = synth::box_room();
  const auto fs = extract(scene, Pose::identity());
  const IcpResult r = solve(fs, fs, {ResidualKind::PointToPlane, 0.0}, Pose::identity(), IcpConfig{});
  CHECK(poses_close(r.pose, Pose::identity(), 1e-12));
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
}

TEST_CASE("solve recovers a box-room delta with plane-to-plane residuals") {
  const synth::Scene scene = synth::box_room();
  const Pose a = Pose::identity();
  const Pose b = compose(Pose::translate(0.1, 0.05, 0.0), Pose::rot_z(2.0 * kPi / 180.0));
  const auto target = extract(scene, a);
  const auto source = extract(scene, b);
  const Pose truth = between(a, b);
  const IcpResult r = solve(source, target, {ResidualKind::PlaneToPlane, 0.0}, truth, IcpConfig{});
  CHECK(lo::test::translation_error(r.pose, truth) < 1e-3);
  CHECK(lo::test::rotation_error(r.pose, truth) < 1e-3);
  // The cost at the start of each iteration never rises on a converging problem.
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) {
    CHECK(r.cost_history[i] <= r.cost_history[i - 1] * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("solve rejects degenerate geometry and direct point-to-edge") {
  const std::vector<Feature> one{Feature::planar({1, 0, 0}, Vec3::UnitX())};
  CHECK_THROWS_AS(solve(one, one, {ResidualKind::PointToPlane, 0.0}, Pose::identity(), IcpConfig{}),
                  DegenerateGeometryError);
  CHECK_THROWS_AS(solve(one, one, {ResidualKind::PointToEdge, 0.0}, Pose::identity(), IcpConfig{}), ConfigError);
  IcpConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("property: converged solves stop below both tolerances") {
  const synth::Scene scene = synth::box_room();
  Rng rng(35);
  const auto target = extract(scene, Pose::identity());
  for (int i = 0; i < 3; ++i) {
    const Pose b(so3_exp(Vec3(0, 0, rng.uniform(-0.05, 0.05))), Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0));
    const auto source = extract(scene, b);
    IcpConfig cfg;
    const IcpResult r = solve(source, target, {ResidualKind::PointToPlane, 0.0}, Pose::identity(), cfg);
    if (!r.converged) continue;
    // One more iteration from the result moves less than the tolerances.
    cfg.max_iterations = 1;
    const IcpResult again = solve(source, target, {ResidualKind::PointToPlane, 0.0}, r.pose, cfg);
    const Twist step = log(between(r.pose, again.pose));
    CHECK(step.angular.norm() < 1e-4);
    CHECK(step.linear.norm() < 1e-4);
  }
}
