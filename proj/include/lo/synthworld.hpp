#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/imu.hpp"
#include "lo/pointcloud.hpp"
#include "lo/trajectory.hpp"

namespace lo::synth {

/// Bounded rectangle: center, unit normal, in-plane unit axis u (v = normal x u).
struct PlaneSurface {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 axis_u = Vec3::UnitX();
  double half_u = 1.0;
  double half_v = 1.0;
  std::string label;
};

/// Finite open cylinder starting at `base` and extending `length` along `direction`.
struct PoleSurface {
  Vec3 base = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double radius = 0.1;
  double length = 1.0;
  std::string label;
};

struct Scene {
  std::vector<PlaneSurface> planes;
  std::vector<PoleSurface> poles;

  /// Surface ids: planes first, then poles.
  std::size_t surface_count() const { return planes.size() + poles.size(); }
  bool is_plane(int id) const { return id >= 0 && static_cast<std::size_t>(id) < planes.size(); }
  const std::string& label(int id) const;
  /// Signed distance-like residual of a world point to a surface (0 when on it).
  double surface_distance(int id, const Vec3& world) const;

  void validate() const;
};

/// Interior faces of an axis-aligned box (walls, floor, ceiling).
void add_room(Scene& scene, const Vec3& center, const Vec3& size, const std::string& prefix = "room");
/// Outer faces of an axis-aligned box obstacle.
void add_box(Scene& scene, const Vec3& center, const Vec3& size, const std::string& prefix = "box");
void add_pole(Scene& scene, const Vec3& base, double radius, double height,
              const std::string& label = "pole");

Scene box_room(const Vec3& size = {12.0, 9.0, 4.0}, const Vec3& center = {0.0, 0.0, 1.0});

struct LidarModel {
  int num_scanlines = 32;
  double vertical_fov_min = -25.0 * std::numbers::pi / 180.0;
  double vertical_fov_max = 20.0 * std::numbers::pi / 180.0;
  int points_per_line = 400;
  double period = 0.1;
  double min_range = 0.3;
  double max_range = 100.0;

  void validate() const;
  double elevation(int line) const;
};

/// pose(t) = start * exp(rate * (t - t_start)); rate is a body-frame twist per second.
struct ConstantScrew {
  Pose start;
  double t_start = 0.0;
  Twist rate;
};

/// Polynomial world translation sum_k c_k (t - t_start)^k and constant body rate rotation.
struct PolynomialSlerp {
  double t_start = 0.0;
  std::vector<Vec3> coefficients{Vec3::Zero()};
  Eigen::Quaterniond rotation_start = Eigen::Quaterniond::Identity();
  Vec3 angular_rate = Vec3::Zero();
};

/// Geodesic interpolation between keyframes; no analytic derivatives.
struct Waypoints {
  Trajectory keyframes;
};

class MotionSource {
 public:
  using Family = std::variant<ConstantScrew, PolynomialSlerp, Waypoints>;

  MotionSource() = default;
  MotionSource(Family f) : family_(std::move(f)) {}  // NOLINT implicit
  MotionSource(ConstantScrew m) : family_(std::move(m)) {}  // NOLINT implicit
  MotionSource(PolynomialSlerp m) : family_(std::move(m)) {}  // NOLINT implicit
  MotionSource(Waypoints m) : family_(std::move(m)) {}  // NOLINT implicit

  const Family& family() const { return family_; }
  Pose pose(double t) const;
  bool has_derivatives() const { return !std::holds_alternative<Waypoints>(family_); }
  /// The remaining queries throw ConfigError for families without derivatives.
  Vec3 body_angular_velocity(double t) const;
  Vec3 world_velocity(double t) const;
  Vec3 world_acceleration(double t) const;

 private:
  Family family_ = ConstantScrew{};
};

struct SimulatedScan {
  LidarScan scan;
  std::vector<int> labels;          // surface id per point
  std::vector<Vec3> world_points;   // noise-free hit point per return
};

struct ScanNoise {
  double range_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Ray-casts one rotation. With warp each ray leaves from the pose at its emission time,
/// otherwise every ray leaves from the stamp pose. Rays hitting nothing are omitted.
SimulatedScan simulate_scan(const Scene& scene, const MotionSource& motion, double stamp,
                            const LidarModel& model, bool warp, const ScanNoise& noise = {});

struct ImuBiases {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// Exact body rate and specific force (plus biases) sampled at t0 + k / rate, k = 0.. until
/// the first sample at or beyond t1. Rejects families without analytic derivatives.
std::vector<ImuMeasurement> simulate_imu(const MotionSource& motion, double rate, double t0,
                                         double t1, const Vec3& gravity = default_gravity(),
                                         const ImuBiases& biases = {});

/// True kinematic state at t for seeding integration.
ImuState true_imu_state(const MotionSource& motion, double t, const Vec3& gravity = default_gravity(),
                        const ImuBiases& biases = {});

struct SequenceSpec {
  Scene scene;
  MotionSource motion;
  LidarModel lidar;
  double t_start = 0.0;
  int num_scans = 10;
  bool warp = true;
  ScanNoise noise;
  double imu_rate = 200.0;  // ignored for motion without derivatives
  Vec3 gravity = default_gravity();
  ImuBiases biases;
};

struct VelocityBiasSample {
  double stamp = 0.0;
  Vec3 velocity = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
};

struct SyntheticSequence {
  std::vector<LidarScan> scans;
  std::vector<std::vector<int>> labels;
  Trajectory gt;                            // LiDAR pose at each scan stamp
  std::vector<ImuMeasurement> imu;          // empty without analytic derivatives
  std::vector<VelocityBiasSample> states;   // per scan stamp, empty without derivatives
};

SyntheticSequence generate_sequence(const SequenceSpec& spec);

}  // namespace lo::synth
