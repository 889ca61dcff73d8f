#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lo/geometry.hpp"
#include "lo/kdtree.hpp"
#include "lo/pointcloud.hpp"

namespace lo {

enum class CurvatureMethod { Classical, ScanlineEigen, NearestNeighborEigen };

std::string_view to_string(CurvatureMethod m);
CurvatureMethod parse_curvature_method(std::string_view s);

/// Units depend on the method: meters for Classical, square meters for the eigen methods.
/// Values are only comparable between the same method.
struct Curvature {
  double value = 0.0;
  CurvatureMethod method = CurvatureMethod::Classical;
  bool valid = false;
};

enum class FeatureKind { Planar, Edge, Point };

std::string_view to_string(FeatureKind k);

struct Feature {
  FeatureKind kind = FeatureKind::Point;
  Vec3 position = Vec3::Zero();
  std::optional<Vec3> normal;     // Planar only, points toward the sensor
  std::optional<Vec3> direction;  // Edge only
  Curvature curvature;
  int scanline = 0;

  static Feature point(const Vec3& p, int scanline = 0);
  static Feature planar(const Vec3& p, const Vec3& normal, int scanline = 0);
  static Feature edge(const Vec3& p, const Vec3& direction, int scanline = 0);
};

struct FeatureParams {
  int window_half_size = 5;
  double planar_threshold = 0.02;
  double edge_threshold = 0.2;
  int knn_k = 10;
  /// Upper bound per feature class per scanline, split evenly over azimuth sectors. <= 0 disables.
  int max_per_class_per_scanline = 0;
  int min_scanline_spread = 2;
  int azimuth_sectors = 6;
  /// Edge candidates must be the curvature maximum within this many samples along their
  /// scanline; 0 keeps every candidate.
  int edge_suppression = 5;

  // Neighborhood used for normal fitting: the closest points of each nearby scanline.
  double normal_radius = 1.0;
  int normal_points_per_scanline = 3;
  int normal_scanline_reach = 3;
  /// Largest RMS distance of the neighborhood to its fitted plane; <= 0 disables the check.
  double normal_max_rms = 0.01;
  // Edge direction: edge-classified points within this radius.
  double edge_radius = 0.6;

  void validate(CurvatureMethod method) const;
};

/// Default thresholds for a method (classical values are meters, eigen values square meters).
FeatureParams default_feature_params(CurvatureMethod method);

/// norm((1/n) sum_{-n<=j<=n} (p_{i+j} - p_i)); invalid where the window leaves the scanline.
std::vector<Curvature> curvature_classical(std::span<const Point> scanline, int n);

/// Second-smallest eigenvalue of (1/2n) sum (p_{i+j} - p_i)(p_{i+j} - p_i)^T.
std::vector<Curvature> curvature_scanline_eigen(std::span<const Point> scanline, int n);

/// Smallest eigenvalue of the covariance of the k nearest neighbors of a scan point; invalid
/// unless the neighbors span at least min_scanline_spread scanlines.
Curvature curvature_nn_eigen(const ScanIndex& index, std::size_t point_index, int k,
                             int min_scanline_spread);

/// Plane normal at a position from the closest points of nearby scanlines. Empty when fewer
/// than 5 neighbors on at least 2 scanlines support a non-degenerate fit, or when the fit
/// residual exceeds params.normal_max_rms.
std::optional<Vec3> estimate_normal(const ScanIndex& index, const Vec3& position,
                                    const FeatureParams& params = {});

struct EdgeDirection {
  Vec3 direction = Vec3::UnitZ();
  bool low_confidence = false;
};

/// Principal direction of the edge points around a position; empty with fewer than 3 points.
std::optional<EdgeDirection> estimate_edge_direction(const KdTree& edge_points,
                                                     const Vec3& position, double radius);

/// Labels scan points as Planar / Edge features. Features whose normal or direction cannot be
/// estimated are returned with kind Point. Output is ordered by point index. The nn_eigen
/// method only measures planarity and never yields edges.
std::vector<Feature> classify(const ScanIndex& index, const FeatureParams& params,
                              CurvatureMethod method);

/// Ascending eigenvalues and matching eigenvectors (columns) of a symmetric 3x3 matrix.
struct SymmetricEigen {
  Vec3 values;
  Mat3 vectors;
};
SymmetricEigen symmetric_eigen(const Mat3& m);

}  // namespace lo
