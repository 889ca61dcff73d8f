#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lo/geometry.hpp"

namespace lo {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;

  /// Ordering used by every query: distance, then insertion index.
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
    return a.index < b.index;
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

/// Static 3-d tree over a point set. Queries are exact and deterministic: results are
/// sorted by distance with ties resolved by the index of the point in the input sequence.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// k nearest points; returns all points when k exceeds the point count.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  std::vector<Neighbor> radius(const Vec3& query, double radius) const;
  /// Nearest point, or nothing on an empty tree.
  bool nearest(const Vec3& query, Neighbor& out) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
  };

  int build(std::uint32_t begin, std::uint32_t end);
  void knn_recurse(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;
  void radius_recurse(int node, const Vec3& q, double r2, std::vector<Neighbor>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lo
