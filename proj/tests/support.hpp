#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "lo/geometry.hpp"
#include "lo/metrics.hpp"
#include "lo/trajectory.hpp"

namespace lo::test {

/// Seeded generator for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(gen_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen_); }

  Vec3 vec(double half_extent) {
    return {uniform(-half_extent, half_extent), uniform(-half_extent, half_extent),
            uniform(-half_extent, half_extent)};
  }
  Vec3 unit() {
    Vec3 v;
    do {
      v = {normal(), normal(), normal()};
    } while (v.norm() < 1e-6);
    return v.normalized();
  }
  Twist twist(double max_angle, double max_translation) {
    return {unit() * uniform(0.0, max_angle), vec(max_translation)};
  }
  Pose pose(double max_angle = std::numbers::pi - 0.1, double max_translation = 10.0) {
    return exp(twist(max_angle, max_translation));
  }

 private:
  std::mt19937_64 gen_;
};

inline double translation_error(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

inline double rotation_error(const Pose& a, const Pose& b) {
  return a.rotation().angularDistance(b.rotation());
}

inline bool poses_close(const Pose& a, const Pose& b, double tol) {
  return translation_error(a, b) <= tol && rotation_error(a, b) <= tol;
}

/// Cyclic Jacobi rotations on a symmetric 3x3 matrix; ascending eigenvalues.
inline Vec3 jacobi_eigenvalues(Mat3 a) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 j = Mat3::Identity();
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transpose() * a * j;
      }
    }
  }
  std::array<double, 3> v{a(0, 0), a(1, 1), a(2, 2)};
  std::sort(v.begin(), v.end());
  return {v[0], v[1], v[2]};
}

inline Eigen::Matrix4d rigid_inverse(const Eigen::Matrix4d& m) {
  Eigen::Matrix4d out = Eigen::Matrix4d::Identity();
  out.topLeftCorner<3, 3>() = m.topLeftCorner<3, 3>().transpose();
  out.topRightCorner<3, 1>() = -m.topLeftCorner<3, 3>().transpose() * m.topRightCorner<3, 1>();
  return out;
}

inline double matrix_angle(const Eigen::Matrix4d& m) {
  const Mat3 r = m.topLeftCorner<3, 3>();
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (r.trace() - 1.0));
}

struct NaiveErrors {
  double ate_t = 0.0;
  double ate_r = 0.0;
  double wrte_t = 0.0;
  double wrte_r = 0.0;
};

/// Reference metrics on homogeneous matrices with explicit double loops.
inline NaiveErrors naive_metrics(const std::vector<Pose>& gt, const std::vector<Pose>& est, int j) {
  const std::size_t n = gt.size();
  std::vector<Eigen::Matrix4d> g, e;
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(gt[i].matrix());
    e.push_back(est[i].matrix());
  }
  NaiveErrors out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Matrix4d d = rigid_inverse(g[i]) * e[i];
    out.ate_t += d.topRightCorner<3, 1>().squaredNorm();
    out.ate_r += std::pow(matrix_angle(d), 2);
  }
  out.ate_t = std::sqrt(out.ate_t / n);
  out.ate_r = std::sqrt(out.ate_r / n);
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      if (b - a != static_cast<std::size_t>(j)) continue;
      const Eigen::Matrix4d dg = rigid_inverse(g[a]) * g[b];
      const Eigen::Matrix4d de = rigid_inverse(e[a]) * e[b];
      const Eigen::Matrix4d err = rigid_inverse(dg) * de;
      out.wrte_t += err.topRightCorner<3, 1>().squaredNorm();
      out.wrte_r += std::pow(matrix_angle(err), 2);
      ++count;
    }
  }
  out.wrte_t = std::sqrt(out.wrte_t / count);
  out.wrte_r = std::sqrt(out.wrte_r / count);
  return out;
}

inline PairedTrajectory make_paired(const std::vector<Pose>& gt, const std::vector<Pose>& est,
                                    double dt = 0.1) {
  PairedTrajectory p;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    p.stamps.push_back(static_cast<double>(i) * dt);
    p.gt.push_back(gt[i]);
    p.est.push_back(est[i]);
  }
  return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lo_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace lo::test
