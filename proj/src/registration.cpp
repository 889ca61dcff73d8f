#include "lo/registration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "lo/error.hpp"

namespace lo {

std::string_view to_string(InitMethod m) {
  switch (m) {
    case InitMethod::Identity: return "identity";
    case InitMethod::ConstantVelocity: return "constant_velocity";
    case InitMethod::Imu: return "imu";
  }
  return "identity";
}

std::string_view to_string(ResidualKind k) {
  switch (k) {
    case ResidualKind::PointToPoint: return "point_to_point";
    case ResidualKind::PointToEdge: return "point_to_edge";
    case ResidualKind::PointToPlane: return "point_to_plane";
    case ResidualKind::PseudoPointToPlane: return "pseudo_point_to_plane";
    case ResidualKind::PlaneToPlane: return "plane_to_plane";
    case ResidualKind::PseudoPlaneToPlane: return "pseudo_plane_to_plane";
  }
  return "point_to_plane";
}

ResidualKind parse_residual_kind(std::string_view s) {
  for (ResidualKind k :
       {ResidualKind::PointToPoint, ResidualKind::PointToEdge, ResidualKind::PointToPlane,
        ResidualKind::PseudoPointToPlane, ResidualKind::PlaneToPlane,
        ResidualKind::PseudoPlaneToPlane}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown residual '" + std::string(s) + "'");
}

void ResidualVariant::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("residual epsilon " + std::to_string(epsilon) + " outside [0, 1]");
  }
}

void IcpConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("IcpConfig: max_iterations must be >= 1");
  if (!(rotation_tol > 0.0) || !(translation_tol > 0.0)) {
    throw ConfigError("IcpConfig: tolerances must be positive");
  }
  if (!(max_correspondence_distance >= 0.0)) {
    throw ConfigError("IcpConfig: max_correspondence_distance must be non-negative");
  }
}

Pose init_identity() { return Pose::identity(); }

Pose init_constant_velocity(const Pose& prev_delta, double prev_dt, double dt) {
  if (!(prev_dt > 0.0)) throw ConfigError("init_constant_velocity: prev_dt must be positive");
  if (dt == prev_dt) return prev_delta;
  return exp(log(prev_delta).scaled(dt / prev_dt));
}

Pose init_imu(const Pose& prev_pose, const ImuState& state,
              std::span<const ImuMeasurement> measurements, double t_prev, double t_now,
              const Pose& lidar_to_imu) {
  ImuState start = state;
  start.pose = compose(prev_pose, lidar_to_imu.inverse());
  const ImuState end = integrate_state(start, measurements, t_prev, t_now);
  return between(prev_pose, compose(end.pose, lidar_to_imu));
}

namespace {

KdTree tree_of(const std::vector<Feature>& fs) {
  std::vector<Vec3> pts;
  pts.reserve(fs.size());
  for (const Feature& f : fs) pts.push_back(f.position);
  return KdTree(std::move(pts));
}

}  // namespace

FeatureMap::FeatureMap(std::span<const Feature> features) {
  for (const Feature& f : features) {
    switch (f.kind) {
      case FeatureKind::Planar: planar_.push_back(f); break;
      case FeatureKind::Edge: edge_.push_back(f); break;
      case FeatureKind::Point: point_.push_back(f); break;
    }
  }
  planar_tree_ = tree_of(planar_);
  edge_tree_ = tree_of(edge_);
  point_tree_ = tree_of(point_);
}

const std::vector<Feature>& FeatureMap::features(FeatureKind kind) const {
  switch (kind) {
    case FeatureKind::Planar: return planar_;
    case FeatureKind::Edge: return edge_;
    case FeatureKind::Point: break;
  }
  return point_;
}

const KdTree& FeatureMap::tree(FeatureKind kind) const {
  switch (kind) {
    case FeatureKind::Planar: return planar_tree_;
    case FeatureKind::Edge: return edge_tree_;
    case FeatureKind::Point: break;
  }
  return point_tree_;
}

std::vector<Correspondence> match(std::span<const Feature> source, const FeatureMap& target,
                                  const Pose& x0, const IcpConfig& cfg) {
  const double max_d2 = cfg.max_correspondence_distance * cfg.max_correspondence_distance;
  std::vector<Correspondence> out;
  out.reserve(source.size());
  for (const Feature& s : source) {
    const Vec3 q = transform_point(x0, s.position);
    Neighbor nn;
    if (!target.tree(s.kind).nearest(q, nn)) continue;
    if (nn.squared_distance > max_d2) continue;
    out.push_back({s, target.features(s.kind)[nn.index], Mat3::Identity()});
  }
  if (out.empty()) throw DegenerateMatchError("degenerate match: no correspondences");
  return out;
}

std::vector<Correspondence> match(std::span<const Feature> source,
                                  std::span<const Feature> target, const Pose& x0,
                                  const IcpConfig& cfg) {
  return match(source, FeatureMap(target), x0, cfg);
}

namespace {

const Vec3& require(const std::optional<Vec3>& v, const char* what) {
  if (!v) throw ConfigError(std::string("weighting: correspondence lacks ") + what);
  return *v;
}

}  // namespace

Mat3 weighting(const Correspondence& corr, const ResidualVariant& variant, const Pose& x) {
  const Mat3 eye = Mat3::Identity();
  const double eps = variant.epsilon;
  switch (variant.kind) {
    case ResidualKind::PointToPoint:
      return eye;
    case ResidualKind::PointToEdge: {
      const Vec3& d = require(corr.target.direction, "a target edge direction");
      return eye - d * d.transpose();
    }
    case ResidualKind::PointToPlane: {
      const Vec3& n = require(corr.target.normal, "a target normal");
      return n * n.transpose();
    }
    case ResidualKind::PseudoPointToPlane: {
      const Vec3& n = require(corr.target.normal, "a target normal");
      return (1.0 - eps) * (n * n.transpose()) + eps * eye;
    }
    case ResidualKind::PlaneToPlane: {
      const Vec3& ni = require(corr.target.normal, "a target normal");
      const Vec3 nj = x.rotation() * require(corr.source.normal, "a source normal");
      return ni * ni.transpose() + nj * nj.transpose();
    }
    case ResidualKind::PseudoPlaneToPlane: {
      const Vec3& ni = require(corr.target.normal, "a target normal");
      const Vec3 nj = x.rotation() * require(corr.source.normal, "a source normal");
      return (1.0 - eps) * (ni * ni.transpose() + nj * nj.transpose()) + 2.0 * eps * eye;
    }
  }
  return eye;
}

ResidualVariant effective_variant(FeatureKind kind, const ResidualVariant& configured) {
  if (configured.kind == ResidualKind::PointToPoint) return configured;
  switch (kind) {
    case FeatureKind::Planar: return configured;
    case FeatureKind::Edge: return {ResidualKind::PointToEdge, 0.0};
    case FeatureKind::Point: break;
  }
  return {ResidualKind::PointToPoint, 0.0};
}

Vec3 residual(const Correspondence& corr, const Pose& x) {
  return corr.target.position - transform_point(x, corr.source.position);
}

Eigen::Matrix<double, 3, 6> residual_jacobian(const Pose& x, const Vec3& source_point) {
  const Mat3 r = x.rotation_matrix();
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = r * skew(source_point);
  j.rightCols<3>() = -r;
  return j;
}

namespace {

struct System {
  Mat6 h = Mat6::Zero();
  Vec6 b = Vec6::Zero();
  double cost = 0.0;
};

System accumulate(std::vector<Correspondence>& corrs, const ResidualVariant& variant,
                  const Pose& x, const IcpConfig& cfg) {
  System sys;
  const Mat3 rot = x.rotation_matrix();
  for (Correspondence& c : corrs) {
    c.weight = weighting(c, effective_variant(c.source.kind, variant), x);
    const Vec3 r = residual(c, x);
    Eigen::Matrix<double, 3, 6> j;
    j.leftCols<3>() = rot * skew(c.source.position);
    j.rightCols<3>() = -rot;
    const double e2 = r.dot(c.weight * r);
    double w = 1.0;
    double rho = e2;
    if (cfg.huber_delta > 0.0) {
      const double e = std::sqrt(std::max(0.0, e2));
      if (e > cfg.huber_delta) {
        w = cfg.huber_delta / e;
        rho = 2.0 * cfg.huber_delta * e - cfg.huber_delta * cfg.huber_delta;
      }
    }
    const Eigen::Matrix<double, 6, 3> jtw = j.transpose() * c.weight;
    sys.h += w * (jtw * j);
    sys.b += w * (jtw * r);
    sys.cost += rho;
  }
  return sys;
}

void check_conditioning(const Mat6& h, double max_condition) {
  Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
  const double lmin = eig.eigenvalues()[0];
  const double lmax = eig.eigenvalues()[5];
  if (!(lmin > 0.0) || lmax / lmin > max_condition) {
    std::ostringstream msg;
    msg << "degenerate geometry: condition number "
        << (lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity())
        << ", near-null direction [angular; linear] = ["
        << eig.eigenvectors().col(0).transpose() << "]";
    throw DegenerateGeometryError(msg.str());
  }
}

}  // namespace

IcpResult solve(std::span<const Feature> source, const FeatureMap& target,
                const ResidualVariant& variant, const Pose& x0, const IcpConfig& cfg) {
  cfg.validate();
  variant.validate();
  if (variant.kind == ResidualKind::PointToEdge) {
    throw ConfigError("point_to_edge is applied to edge pairs automatically; choose a planar "
                      "residual variant");
  }

  IcpResult result;
  Pose x = x0;
  std::vector<Correspondence> corrs = match(source, target, x, cfg);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (it > 1 && cfg.re_match_every_iteration) corrs = match(source, target, x, cfg);
    const System sys = accumulate(corrs, variant, x, cfg);
    result.cost_history.push_back(sys.cost);
    check_conditioning(sys.h, cfg.max_condition_number);
    const Vec6 delta = -sys.h.ldlt().solve(sys.b);
    x = compose(x, exp(Twist::from_vector(delta)));
    result.iterations = it;
    if (delta.head<3>().norm() < cfg.rotation_tol && delta.tail<3>().norm() < cfg.translation_tol) {
      result.converged = true;
      break;
    }
  }
  result.pose = x;
  result.final_cost = accumulate(corrs, variant, x, cfg).cost;
  result.correspondences_used = corrs.size();
  return result;
}

IcpResult solve(std::span<const Feature> source, std::span<const Feature> target,
                const ResidualVariant& variant, const Pose& x0, const IcpConfig& cfg) {
  return solve(source, FeatureMap(target), variant, x0, cfg);
}

}  // namespace lo
