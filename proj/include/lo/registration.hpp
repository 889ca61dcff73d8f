#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lo/features.hpp"
#include "lo/geometry.hpp"
#include "lo/imu.hpp"
#include "lo/kdtree.hpp"

namespace lo {

enum class InitMethod { Identity, ConstantVelocity, Imu };

std::string_view to_string(InitMethod m);

enum class ResidualKind {
  PointToPoint,
  PointToEdge,
  PointToPlane,
  PseudoPointToPlane,
  PlaneToPlane,
  PseudoPlaneToPlane,
};

std::string_view to_string(ResidualKind k);
ResidualKind parse_residual_kind(std::string_view s);

struct ResidualVariant {
  ResidualKind kind = ResidualKind::PointToPlane;
  double epsilon = 0.0;  // only used by the pseudo variants, in [0, 1]

  bool uses_epsilon() const {
    return kind == ResidualKind::PseudoPointToPlane || kind == ResidualKind::PseudoPlaneToPlane;
  }
  void validate() const;
};

/// Matched pair: target plays the role of p_i, source of p_j.
struct Correspondence {
  Feature source;
  Feature target;
  Mat3 weight = Mat3::Identity();
};

struct IcpConfig {
  int max_iterations = 30;
  double rotation_tol = 1e-5;
  double translation_tol = 1e-5;
  double max_correspondence_distance = 1.0;
  bool re_match_every_iteration = true;
  /// Huber threshold on sqrt(r^T W r); <= 0 disables the kernel (default).
  double huber_delta = 0.0;
  double max_condition_number = 1e12;

  void validate() const;
};

struct IcpResult {
  Pose pose;  // source -> target
  int iterations = 0;
  bool converged = false;
  double final_cost = 0.0;
  std::size_t correspondences_used = 0;
  /// Cost at the start of every iteration, at the linearization point.
  std::vector<double> cost_history;
};

Pose init_identity();
/// exp(log(prev_delta) * dt / prev_dt).
Pose init_constant_velocity(const Pose& prev_delta, double prev_dt, double dt);
/// Relative LiDAR motion over [t_prev, t_now] predicted by integrating the IMU from
/// prev_pose (a LiDAR pose) with the velocity, biases and gravity in `state`.
Pose init_imu(const Pose& prev_pose, const ImuState& state,
              std::span<const ImuMeasurement> measurements, double t_prev, double t_now,
              const Pose& lidar_to_imu = Pose::identity());

/// Target features split per class, each with its own spatial index.
class FeatureMap {
 public:
  explicit FeatureMap(std::span<const Feature> features);

  const std::vector<Feature>& features(FeatureKind kind) const;
  const KdTree& tree(FeatureKind kind) const;

 private:
  std::vector<Feature> planar_, edge_, point_;
  KdTree planar_tree_, edge_tree_, point_tree_;
};

/// Nearest same-class target for every source feature moved by x0, within the configured
/// distance. Throws DegenerateMatchError when nothing matches.
std::vector<Correspondence> match(std::span<const Feature> source, const FeatureMap& target,
                                  const Pose& x0, const IcpConfig& cfg);
std::vector<Correspondence> match(std::span<const Feature> source,
                                  std::span<const Feature> target, const Pose& x0,
                                  const IcpConfig& cfg);

/// Weighting matrix of a correspondence for a residual variant evaluated at pose x.
/// Throws ConfigError when a required normal or direction is missing.
Mat3 weighting(const Correspondence& corr, const ResidualVariant& variant, const Pose& x);

/// Residual variant actually applied to a correspondence: the configured variant drives
/// Planar pairs, Edge pairs use PointToEdge and Point pairs PointToPoint. A PointToPoint
/// configuration turns every pair into PointToPoint.
ResidualVariant effective_variant(FeatureKind kind, const ResidualVariant& configured);

/// target - x * source.
Vec3 residual(const Correspondence& corr, const Pose& x);

/// d residual / d delta for the right perturbation x * exp(delta), delta = [angular; linear]:
/// J = [R skew(p_j) | -R].
Eigen::Matrix<double, 3, 6> residual_jacobian(const Pose& x, const Vec3& source_point);

/// Gauss-Newton over SE(3) minimizing sum r^T W r. Throws DegenerateGeometryError when the
/// normal equations are ill-conditioned, DegenerateMatchError when matching fails.
IcpResult solve(std::span<const Feature> source, const FeatureMap& target,
                const ResidualVariant& variant, const Pose& x0, const IcpConfig& cfg);
IcpResult solve(std::span<const Feature> source, std::span<const Feature> target,
                const ResidualVariant& variant, const Pose& x0, const IcpConfig& cfg);

}  // namespace lo
