#include "lo/synthworld.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lo/error.hpp"

namespace lo::synth {

const std::string& Scene::label(int id) const {
  if (is_plane(id)) return planes[static_cast<std::size_t>(id)].label;
  return poles.at(static_cast<std::size_t>(id) - planes.size()).label;
}

double Scene::surface_distance(int id, const Vec3& w) const {
  if (is_plane(id)) {
    const PlaneSurface& p = planes[static_cast<std::size_t>(id)];
    return p.normal.dot(w - p.center);
  }
  const PoleSurface& c = poles.at(static_cast<std::size_t>(id) - planes.size());
  const Vec3 m = w - c.base;
  return (m - m.dot(c.direction) * c.direction).norm() - c.radius;
}

void Scene::validate() const {
  for (const PlaneSurface& p : planes) {
    if (std::abs(p.normal.norm() - 1.0) > 1e-9 || std::abs(p.axis_u.norm() - 1.0) > 1e-9) {
      throw ConfigError("scene plane '" + p.label + "': normal and axis must be unit vectors");
    }
    if (std::abs(p.normal.dot(p.axis_u)) > 1e-9) {
      throw ConfigError("scene plane '" + p.label + "': axis must lie in the plane");
    }
    if (!(p.half_u > 0.0 && p.half_v > 0.0)) {
      throw ConfigError("scene plane '" + p.label + "': extents must be positive");
    }
  }
  for (const PoleSurface& c : poles) {
    if (std::abs(c.direction.norm() - 1.0) > 1e-9) {
      throw ConfigError("scene pole '" + c.label + "': direction must be a unit vector");
    }
    if (!(c.radius > 0.0 && c.length > 0.0)) {
      throw ConfigError("scene pole '" + c.label + "': radius and length must be positive");
    }
  }
}

namespace {

void add_faces(Scene& scene, const Vec3& center, const Vec3& size, const std::string& prefix,
               double inward) {
  const Vec3 h = 0.5 * size;
  const char* names[3][2] = {{"-x", "+x"}, {"-y", "+y"}, {"-z", "+z"}};
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const double s = side == 0 ? -1.0 : 1.0;
      PlaneSurface p;
      p.center = center;
      p.center[axis] += s * h[axis];
      p.normal = Vec3::Zero();
      p.normal[axis] = -s * inward;
      p.axis_u = Vec3::Zero();
      p.axis_u[a1] = 1.0;
      p.half_u = h[a1];
      p.half_v = h[a2];
      p.label = prefix + names[axis][side];
      scene.planes.push_back(p);
    }
  }
}

}  // namespace

void add_room(Scene& scene, const Vec3& center, const Vec3& size, const std::string& prefix) {
  add_faces(scene, center, size, prefix, 1.0);
}

void add_box(Scene& scene, const Vec3& center, const Vec3& size, const std::string& prefix) {
  add_faces(scene, center, size, prefix, -1.0);
}

void add_pole(Scene& scene, const Vec3& base, double radius, double height,
              const std::string& label) {
  scene.poles.push_back({base, Vec3::UnitZ(), radius, height, label});
}

Scene box_room(const Vec3& size, const Vec3& center) {
  Scene s;
  add_room(s, center, size);
  return s;
}

void LidarModel::validate() const {
  if (num_scanlines < 1 || points_per_line < 1) {
    throw ConfigError("LidarModel: scanline and point counts must be >= 1");
  }
  if (!(vertical_fov_min < vertical_fov_max)) {
    throw ConfigError("LidarModel: vertical_fov_min must be below vertical_fov_max");
  }
  if (!(period > 0.0)) throw ConfigError("LidarModel: period must be positive");
  if (!(min_range >= 0.0 && min_range < max_range)) {
    throw ConfigError("LidarModel: require 0 <= min_range < max_range");
  }
}

double LidarModel::elevation(int line) const {
  if (num_scanlines == 1) return vertical_fov_min;
  return vertical_fov_min +
         (vertical_fov_max - vertical_fov_min) * line / static_cast<double>(num_scanlines - 1);
}

// ---------------------------------------------------------------------------
// Motion

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec3 poly(const std::vector<Vec3>& c, double s, int derivative) {
  Vec3 out = Vec3::Zero();
  for (std::size_t k = static_cast<std::size_t>(derivative); k < c.size(); ++k) {
    double coef = 1.0;
    for (int d = 0; d < derivative; ++d) coef *= static_cast<double>(k - static_cast<std::size_t>(d));
    out += coef * std::pow(s, static_cast<double>(k - static_cast<std::size_t>(derivative))) * c[k];
  }
  return out;
}

[[noreturn]] void no_derivatives() {
  throw ConfigError("motion family 'waypoints' has no analytic derivatives");
}

}  // namespace

Pose MotionSource::pose(double t) const {
  return std::visit(
      Overloaded{
          [&](const ConstantScrew& m) {
            return compose(m.start, exp(m.rate.scaled(t - m.t_start)));
          },
          [&](const PolynomialSlerp& m) {
            const double s = t - m.t_start;
            return Pose(m.rotation_start * so3_exp(m.angular_rate * s), poly(m.coefficients, s, 0));
          },
          [&](const Waypoints& m) {
            const auto& k = m.keyframes;
            if (!k.empty() && t < k.front().stamp) return k.front().pose;
            if (!k.empty() && t > k.back().stamp) return k.back().pose;
            return pose_at(k, t);
          },
      },
      family_);
}

Vec3 MotionSource::body_angular_velocity(double) const {
  return std::visit(Overloaded{
                        [](const ConstantScrew& m) -> Vec3 { return m.rate.angular; },
                        [](const PolynomialSlerp& m) -> Vec3 { return m.angular_rate; },
                        [](const Waypoints&) -> Vec3 { no_derivatives(); },
                    },
                    family_);
}

Vec3 MotionSource::world_velocity(double t) const {
  return std::visit(Overloaded{
                        [&](const ConstantScrew& m) -> Vec3 {
                          return pose(t).rotation() * m.rate.linear;
                        },
                        [&](const PolynomialSlerp& m) -> Vec3 {
                          return poly(m.coefficients, t - m.t_start, 1);
                        },
                        [](const Waypoints&) -> Vec3 { no_derivatives(); },
                    },
                    family_);
}

Vec3 MotionSource::world_acceleration(double t) const {
  return std::visit(Overloaded{
                        [&](const ConstantScrew& m) -> Vec3 {
                          return pose(t).rotation() * m.rate.angular.cross(m.rate.linear);
                        },
                        [&](const PolynomialSlerp& m) -> Vec3 {
                          return poly(m.coefficients, t - m.t_start, 2);
                        },
                        [](const Waypoints&) -> Vec3 { no_derivatives(); },
                    },
                    family_);
}

// ---------------------------------------------------------------------------
// Ray casting

namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

double hit_plane(const PlaneSurface& p, const Vec3& o, const Vec3& d) {
  const double denom = p.normal.dot(d);
  if (std::abs(denom) < 1e-12) return kNoHit;
  const double t = p.normal.dot(p.center - o) / denom;
  if (!(t > 0.0)) return kNoHit;
  const Vec3 rel = o + t * d - p.center;
  const Vec3 axis_v = p.normal.cross(p.axis_u);
  if (std::abs(rel.dot(p.axis_u)) > p.half_u || std::abs(rel.dot(axis_v)) > p.half_v) {
    return kNoHit;
  }
  return t;
}

double hit_pole(const PoleSurface& c, const Vec3& o, const Vec3& d) {
  const Vec3 m = o - c.base;
  const Vec3 dp = d - d.dot(c.direction) * c.direction;
  const Vec3 mp = m - m.dot(c.direction) * c.direction;
  const double a = dp.squaredNorm();
  if (a < 1e-15) return kNoHit;
  const double b = 2.0 * dp.dot(mp);
  const double cc = mp.squaredNorm() - c.radius * c.radius;
  const double disc = b * b - 4.0 * a * cc;
  if (disc < 0.0) return kNoHit;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (!(t > 0.0)) continue;
    const double axial = (m + t * d).dot(c.direction);
    if (axial >= 0.0 && axial <= c.length) return t;
  }
  return kNoHit;
}

}  // namespace

SimulatedScan simulate_scan(const Scene& scene, const MotionSource& motion, double stamp,
                            const LidarModel& model, bool warp, const ScanNoise& noise) {
  model.validate();
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Pose stamp_pose = motion.pose(stamp);
  std::vector<Pose> column_poses(static_cast<std::size_t>(model.points_per_line), stamp_pose);
  std::vector<double> offsets(static_cast<std::size_t>(model.points_per_line));
  for (int k = 0; k < model.points_per_line; ++k) {
    offsets[k] = model.period * k / static_cast<double>(model.points_per_line);
    if (warp) column_poses[k] = motion.pose(stamp + offsets[k]);
  }

  SimulatedScan out;
  std::vector<Point> points;
  for (int line = 0; line < model.num_scanlines; ++line) {
    const double el = model.elevation(line);
    for (int k = 0; k < model.points_per_line; ++k) {
      const double az = 2.0 * std::numbers::pi * k / static_cast<double>(model.points_per_line);
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Pose& x = column_poses[k];
      const Vec3 o = x.translation();
      const Vec3 d = x.rotation() * dir;

      double best = kNoHit;
      int best_id = -1;
      for (std::size_t i = 0; i < scene.planes.size(); ++i) {
        const double t = hit_plane(scene.planes[i], o, d);
        if (t < best) {
          best = t;
          best_id = static_cast<int>(i);
        }
      }
      for (std::size_t i = 0; i < scene.poles.size(); ++i) {
        const double t = hit_pole(scene.poles[i], o, d);
        if (t < best) {
          best = t;
          best_id = static_cast<int>(scene.planes.size() + i);
        }
      }
      const double jitter = noise.range_sigma > 0.0 ? noise.range_sigma * gauss(rng) : 0.0;
      if (best_id < 0 || best < model.min_range || best > model.max_range) continue;
      points.emplace_back((best + jitter) * dir, offsets[k], line);
      out.labels.push_back(best_id);
      out.world_points.push_back(o + best * d);
    }
  }
  out.scan = LidarScan(stamp, model.period, model.num_scanlines, std::move(points));
  return out;
}

std::vector<ImuMeasurement> simulate_imu(const MotionSource& motion, double rate, double t0,
                                         double t1, const Vec3& gravity, const ImuBiases& biases) {
  if (!motion.has_derivatives()) no_derivatives();
  if (!(rate > 0.0)) throw ConfigError("simulate_imu: rate must be positive");
  std::vector<ImuMeasurement> out;
  for (long k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    const Pose x = motion.pose(t);
    ImuMeasurement m;
    m.stamp = t;
    m.angular_velocity = motion.body_angular_velocity(t) + biases.gyro;
    m.linear_acceleration =
        x.rotation().conjugate() * (motion.world_acceleration(t) - gravity) + biases.accel;
    out.push_back(m);
    if (t >= t1) break;
  }
  return out;
}

ImuState true_imu_state(const MotionSource& motion, double t, const Vec3& gravity,
                        const ImuBiases& biases) {
  ImuState s;
  s.pose = motion.pose(t);
  s.velocity = motion.world_velocity(t);
  s.gyro_bias = biases.gyro;
  s.accel_bias = biases.accel;
  s.gravity = gravity;
  return s;
}

SyntheticSequence generate_sequence(const SequenceSpec& spec) {
  spec.scene.validate();
  spec.lidar.validate();
  if (spec.num_scans < 1) throw ConfigError("sequence: num_scans must be >= 1");
  SyntheticSequence seq;
  for (int i = 0; i < spec.num_scans; ++i) {
    const double stamp = spec.t_start + i * spec.lidar.period;
    ScanNoise noise = spec.noise;
    noise.seed = spec.noise.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    SimulatedScan s = simulate_scan(spec.scene, spec.motion, stamp, spec.lidar, spec.warp, noise);
    seq.scans.push_back(std::move(s.scan));
    seq.labels.push_back(std::move(s.labels));
    seq.gt.push_back({stamp, spec.motion.pose(stamp)});
  }
  if (spec.motion.has_derivatives()) {
    const double t_end = spec.t_start + spec.num_scans * spec.lidar.period;
    seq.imu = simulate_imu(spec.motion, spec.imu_rate, spec.t_start, t_end, spec.gravity,
                           spec.biases);
    for (const StampedPose& g : seq.gt) {
      seq.states.push_back({g.stamp, spec.motion.world_velocity(g.stamp), spec.biases.gyro,
                            spec.biases.accel});
    }
  }
  return seq;
}

}  // namespace lo::synth
