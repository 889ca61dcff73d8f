#include "lo/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "lo/error.hpp"

namespace lo {

std::string_view to_string(CurvatureMethod m) {
  switch (m) {
    case CurvatureMethod::Classical: return "classical";
    case CurvatureMethod::ScanlineEigen: return "scanline_eigen";
    case CurvatureMethod::NearestNeighborEigen: return "nn_eigen";
  }
  return "classical";
}

CurvatureMethod parse_curvature_method(std::string_view s) {
  if (s == "classical") return CurvatureMethod::Classical;
  if (s == "scanline_eigen") return CurvatureMethod::ScanlineEigen;
  if (s == "nn_eigen") return CurvatureMethod::NearestNeighborEigen;
  throw ConfigError("unknown curvature method '" + std::string(s) + "'");
}

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Planar: return "planar";
    case FeatureKind::Edge: return "edge";
    case FeatureKind::Point: return "point";
  }
  return "point";
}

Feature Feature::point(const Vec3& p, int scanline) {
  Feature f;
  f.kind = FeatureKind::Point;
  f.position = p;
  f.scanline = scanline;
  return f;
}

Feature Feature::planar(const Vec3& p, const Vec3& normal, int scanline) {
  Feature f = point(p, scanline);
  f.kind = FeatureKind::Planar;
  f.normal = normal.normalized();
  return f;
}

Feature Feature::edge(const Vec3& p, const Vec3& direction, int scanline) {
  Feature f = point(p, scanline);
  f.kind = FeatureKind::Edge;
  f.direction = direction.normalized();
  return f;
}

void FeatureParams::validate(CurvatureMethod method) const {
  if (window_half_size < 1) throw ConfigError("FeatureParams: window_half_size must be >= 1");
  if (planar_threshold < 0.0 || edge_threshold <= 0.0) {
    throw ConfigError("FeatureParams: thresholds must be positive");
  }
  if (method != CurvatureMethod::NearestNeighborEigen && !(planar_threshold < edge_threshold)) {
    throw ConfigError("FeatureParams: planar_threshold must be below edge_threshold");
  }
  if (knn_k < 3) throw ConfigError("FeatureParams: knn_k must be >= 3");
  if (min_scanline_spread < 1) throw ConfigError("FeatureParams: min_scanline_spread must be >= 1");
  if (azimuth_sectors < 1) throw ConfigError("FeatureParams: azimuth_sectors must be >= 1");
  if (edge_suppression < 0) throw ConfigError("FeatureParams: edge_suppression must be >= 0");
  if (normal_points_per_scanline < 1 || normal_scanline_reach < 1 || !(normal_radius > 0.0) ||
      !(edge_radius > 0.0)) {
    throw ConfigError("FeatureParams: neighborhood sizes must be positive");
  }
}

FeatureParams default_feature_params(CurvatureMethod method) {
  FeatureParams p;
  switch (method) {
    case CurvatureMethod::Classical:
      p.planar_threshold = 0.02;
      p.edge_threshold = 0.2;
      break;
    case CurvatureMethod::ScanlineEigen:
      p.planar_threshold = 1e-4;
      p.edge_threshold = 1e-2;
      break;
    case CurvatureMethod::NearestNeighborEigen:
      p.planar_threshold = 1e-4;
      p.edge_threshold = 1e-2;
      break;
  }
  return p;
}

SymmetricEigen symmetric_eigen(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(m);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

Mat3 covariance_about_mean(std::span<const Vec3> pts) {
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 c = Mat3::Zero();
  for (const Vec3& p : pts) {
    const Vec3 d = p - mean;
    c += d * d.transpose();
  }
  return c / static_cast<double>(pts.size());
}

}  // namespace

std::vector<Curvature> curvature_classical(std::span<const Point> line, int n) {
  std::vector<Curvature> out(line.size(), Curvature{0.0, CurvatureMethod::Classical, false});
  const auto size = static_cast<std::ptrdiff_t>(line.size());
  for (std::ptrdiff_t i = n; i + n < size; ++i) {
    Vec3 sum = Vec3::Zero();
    for (std::ptrdiff_t j = -n; j <= n; ++j) sum += line[i + j].position - line[i].position;
    out[i].value = (sum / n).norm();
    out[i].valid = true;
  }
  return out;
}

std::vector<Curvature> curvature_scanline_eigen(std::span<const Point> line, int n) {
  std::vector<Curvature> out(line.size(), Curvature{0.0, CurvatureMethod::ScanlineEigen, false});
  const auto size = static_cast<std::ptrdiff_t>(line.size());
  for (std::ptrdiff_t i = n; i + n < size; ++i) {
    Mat3 sigma = Mat3::Zero();
    for (std::ptrdiff_t j = -n; j <= n; ++j) {
      const Vec3 d = line[i + j].position - line[i].position;
      sigma += d * d.transpose();
    }
    sigma /= 2.0 * n;
    if (!(sigma.trace() > 0.0)) continue;  // coincident window
    out[i].value = std::max(0.0, symmetric_eigen(sigma).values[1]);
    out[i].valid = true;
  }
  return out;
}

Curvature curvature_nn_eigen(const ScanIndex& index, std::size_t point_index, int k,
                             int min_scanline_spread) {
  Curvature c{0.0, CurvatureMethod::NearestNeighborEigen, false};
  const auto& pts = index.scan().points();
  const auto nn = index.knn(pts[point_index].position, static_cast<std::size_t>(k));
  if (nn.size() < static_cast<std::size_t>(k)) return c;
  std::vector<Vec3> neighborhood;
  std::set<int> lines;
  for (const Neighbor& n : nn) {
    neighborhood.push_back(pts[n.index].position);
    lines.insert(pts[n.index].scanline);
  }
  c.value = std::max(0.0, symmetric_eigen(covariance_about_mean(neighborhood)).values[0]);
  c.valid = static_cast<int>(lines.size()) >= min_scanline_spread;
  return c;
}

std::optional<Vec3> estimate_normal(const ScanIndex& index, const Vec3& position,
                                    const FeatureParams& params) {
  const LidarScan& scan = index.scan();
  Neighbor closest;
  if (!index.tree().nearest(position, closest)) return std::nullopt;
  const int center = scan.points()[closest.index].scanline;
  const double r2 = params.normal_radius * params.normal_radius;

  std::vector<Vec3> neighborhood;
  int lines_used = 0;
  const int lo_line = std::max(0, center - params.normal_scanline_reach);
  const int hi_line = std::min(scan.num_scanlines() - 1, center + params.normal_scanline_reach);
  for (int l = lo_line; l <= hi_line; ++l) {
    const auto nn = index.scanline_tree(l).knn(
        position, static_cast<std::size_t>(params.normal_points_per_scanline));
    bool used = false;
    for (const Neighbor& n : nn) {
      if (n.squared_distance > r2) break;
      neighborhood.push_back(index.scanline_tree(l).point(n.index));
      used = true;
    }
    lines_used += used ? 1 : 0;
  }
  if (neighborhood.size() < 5 || lines_used < 2) return std::nullopt;

  const SymmetricEigen eig = symmetric_eigen(covariance_about_mean(neighborhood));
  // Collinear support leaves the normal undetermined.
  if (!(eig.values[1] > 1e-6 * eig.values[2])) return std::nullopt;
  if (params.normal_max_rms > 0.0 &&
      std::sqrt(std::max(0.0, eig.values[0])) > params.normal_max_rms) {
    return std::nullopt;
  }
  Vec3 normal = eig.vectors.col(0).normalized();
  if (normal.dot(position) > 0.0) normal = -normal;
  return normal;
}

std::optional<EdgeDirection> estimate_edge_direction(const KdTree& edge_points,
                                                     const Vec3& position, double radius) {
  const auto nn = edge_points.radius(position, radius);
  if (nn.size() < 3) return std::nullopt;
  std::vector<Vec3> pts;
  pts.reserve(nn.size());
  for (const Neighbor& n : nn) pts.push_back(edge_points.point(n.index));
  const SymmetricEigen eig = symmetric_eigen(covariance_about_mean(pts));
  EdgeDirection out;
  out.direction = eig.vectors.col(2).normalized();
  // A line has one dominant spread direction.
  out.low_confidence = !(eig.values[1] < 0.25 * eig.values[2]);
  return out;
}

namespace {

struct Candidate {
  std::size_t index;
  double value;
};

int sector_of(const Vec3& p, int sectors) {
  const double az = std::atan2(p.y(), p.x()) + std::numbers::pi;
  const int s = static_cast<int>(az / (2.0 * std::numbers::pi) * sectors);
  return std::clamp(s, 0, sectors - 1);
}

// Keeps the most extreme values per azimuth sector; `ascending` keeps the smallest.
void cap_per_sector(std::vector<Candidate>& cands, const LidarScan& scan, const FeatureParams& p,
                    bool ascending) {
  if (p.max_per_class_per_scanline <= 0) return;
  const int per_sector = std::max(1, p.max_per_class_per_scanline / p.azimuth_sectors);
  std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return ascending ? a.value < b.value : a.value > b.value;
    return a.index < b.index;
  });
  std::vector<int> used(static_cast<std::size_t>(p.azimuth_sectors), 0);
  std::vector<Candidate> kept;
  for (const Candidate& c : cands) {
    int& n = used[sector_of(scan.points()[c.index].position, p.azimuth_sectors)];
    if (n < per_sector) {
      ++n;
      kept.push_back(c);
    }
  }
  cands = std::move(kept);
}

}  // namespace

std::vector<Feature> classify(const ScanIndex& index, const FeatureParams& params,
                              CurvatureMethod method) {
  params.validate(method);
  const LidarScan& scan = index.scan();
  const auto& pts = scan.points();

  std::vector<Feature> planar;
  std::vector<Feature> edges;
  std::vector<std::size_t> planar_idx;
  std::vector<std::size_t> edge_idx;

  for (int l = 0; l < scan.num_scanlines(); ++l) {
    const auto line = scan.scanline(l);
    const std::size_t base = scan.scanline_begin(l);
    std::vector<Curvature> curv;
    switch (method) {
      case CurvatureMethod::Classical:
        curv = curvature_classical(line, params.window_half_size);
        break;
      case CurvatureMethod::ScanlineEigen:
        curv = curvature_scanline_eigen(line, params.window_half_size);
        break;
      case CurvatureMethod::NearestNeighborEigen:
        curv.reserve(line.size());
        for (std::size_t i = 0; i < line.size(); ++i) {
          curv.push_back(
              curvature_nn_eigen(index, base + i, params.knn_k, params.min_scanline_spread));
        }
        break;
    }

    auto local_max = [&](std::size_t i) {
      const std::size_t s = static_cast<std::size_t>(params.edge_suppression);
      const std::size_t from = i > s ? i - s : 0;
      const std::size_t to = std::min(line.size(), i + s + 1);
      for (std::size_t k = from; k < to; ++k) {
        if (k == i || !curv[k].valid) continue;
        if (curv[k].value > curv[i].value || (curv[k].value == curv[i].value && k < i)) return false;
      }
      return true;
    };

    std::vector<Candidate> flat;
    std::vector<Candidate> sharp;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (!curv[i].valid) continue;
      if (curv[i].value < params.planar_threshold) {
        flat.push_back({base + i, curv[i].value});
      } else if (method != CurvatureMethod::NearestNeighborEigen &&
                 curv[i].value > params.edge_threshold && local_max(i)) {
        sharp.push_back({base + i, curv[i].value});
      }
    }
    cap_per_sector(flat, scan, params, true);
    cap_per_sector(sharp, scan, params, false);

    for (const Candidate& c : flat) {
      Feature f = Feature::point(pts[c.index].position, l);
      f.kind = FeatureKind::Planar;
      f.curvature = curv[c.index - base];
      planar.push_back(f);
      planar_idx.push_back(c.index);
    }
    for (const Candidate& c : sharp) {
      Feature f = Feature::point(pts[c.index].position, l);
      f.kind = FeatureKind::Edge;
      f.curvature = curv[c.index - base];
      edges.push_back(f);
      edge_idx.push_back(c.index);
    }
  }

  for (Feature& f : planar) {
    f.normal = estimate_normal(index, f.position, params);
    if (!f.normal) f.kind = FeatureKind::Point;
  }

  std::vector<Vec3> edge_positions;
  edge_positions.reserve(edges.size());
  for (const Feature& f : edges) edge_positions.push_back(f.position);
  const KdTree edge_tree(std::move(edge_positions));
  for (Feature& f : edges) {
    const auto dir = estimate_edge_direction(edge_tree, f.position, params.edge_radius);
    if (dir && !dir->low_confidence) {
      f.direction = dir->direction;
    } else {
      f.kind = FeatureKind::Point;
    }
  }

  std::vector<std::pair<std::size_t, Feature>> all;
  all.reserve(planar.size() + edges.size());
  for (std::size_t i = 0; i < planar.size(); ++i) all.emplace_back(planar_idx[i], planar[i]);
  for (std::size_t i = 0; i < edges.size(); ++i) all.emplace_back(edge_idx[i], edges[i]);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Feature> out;
  out.reserve(all.size());
  for (auto& [_, f] : all) out.push_back(std::move(f));
  return out;
}

}  // namespace lo
