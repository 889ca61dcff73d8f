#include "lo/kdtree.hpp"

#include <algorithm>

namespace lo {

namespace {
constexpr std::uint32_t kLeafSize = 12;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

int KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, -1, 0.0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  const double extent = (hi - lo).maxCoeff(&axis);
  if (extent <= 0.0) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::knn_recurse(int node_id, const Vec3& q, std::size_t k,
                         std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const int first = diff <= 0.0 ? node.left : node.right;
  const int second = diff <= 0.0 ? node.right : node.left;
  knn_recurse(first, q, k, heap);
  // Equal distances must still be visited so that the index tie-break stays exact.
  if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
    knn_recurse(second, q, k, heap);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (points_.empty() || k == 0) return heap;
  k = std::min(k, points_.size());
  heap.reserve(k);
  knn_recurse(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

bool KdTree::nearest(const Vec3& query, Neighbor& out) const {
  auto result = knn(query, 1);
  if (result.empty()) return false;
  out = result.front();
  return true;
}

void KdTree::radius_recurse(int node_id, const Vec3& q, double r2,
                            std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 <= r2) out.push_back({idx, d2});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_recurse(node.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_recurse(node.right, q, r2, out);
}

std::vector<Neighbor> KdTree::radius(const Vec3& query, double radius) const {
  std::vector<Neighbor> out;
  if (points_.empty() || radius < 0.0) return out;
  radius_recurse(0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lo
