#include "licam/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace licam {

SpatialIndex::SpatialIndex(const std::vector<Eigen::Vector3d>& points)
    : points_(points) {
  if (points_.empty()) return;
  std::vector<int> indices(points_.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(indices, 0, static_cast<int>(indices.size()), 0);
}

int SpatialIndex::build(std::vector<int>& indices, int begin, int end,
                        int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(indices.begin() + begin, indices.begin() + mid,
                   indices.begin() + end, [&](int a, int b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const int node_index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{axis, indices[mid], -1, -1});
  const int left = build(indices, begin, mid, depth + 1);
  const int right = build(indices, mid + 1, end, depth + 1);
  nodes_[node_index].left = left;
  nodes_[node_index].right = right;
  return node_index;
}

namespace {

struct KnnQueue {
  // Max-heap of (distance^2, point index), capped at k entries.
  explicit KnnQueue(int k) : k(k) {}

  void offer(double dist2, int point) {
    if (static_cast<int>(heap.size()) < k) {
      heap.emplace_back(dist2, point);
      std::push_heap(heap.begin(), heap.end());
    } else if (dist2 < heap.front().first) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = {dist2, point};
      std::push_heap(heap.begin(), heap.end());
    }
  }

  double worst() const {
    return static_cast<int>(heap.size()) < k
               ? std::numeric_limits<double>::infinity()
               : heap.front().first;
  }

  int k;
  std::vector<std::pair<double, int>> heap;
};

}  // namespace

SpatialIndex::Neighbor SpatialIndex::nearest(
    const Eigen::Vector3d& query) const {
  auto result = knn(query, 1);
  return result.empty() ? Neighbor{} : result.front();
}

std::vector<SpatialIndex::Neighbor> SpatialIndex::knn(
    const Eigen::Vector3d& query, int k) const {
  std::vector<Neighbor> out;
  if (root_ < 0 || k <= 0) return out;

  KnnQueue best(k);
  // Iterative depth-first descent, near child first, far child pruned
  // against the current k-th best distance when revisited.
  std::vector<std::pair<int, double>> stack{{root_, 0.0}};
  stack.reserve(64);
  while (!stack.empty()) {
    const auto [ni, min_dist2] = stack.back();
    stack.pop_back();
    if (ni < 0 || min_dist2 > best.worst()) continue;
    const Node& node = nodes_[ni];
    const Eigen::Vector3d& p = points_[node.point];
    best.offer((p - query).squaredNorm(), node.point);

    const double plane_delta = query[node.axis] - p[node.axis];
    const int near_child = plane_delta <= 0.0 ? node.left : node.right;
    const int far_child = plane_delta <= 0.0 ? node.right : node.left;
    if (far_child >= 0) {
      stack.emplace_back(far_child, plane_delta * plane_delta);
    }
    if (near_child >= 0) stack.emplace_back(near_child, 0.0);
  }

  out.reserve(best.heap.size());
  std::sort_heap(best.heap.begin(), best.heap.end());
  for (const auto& [dist2, index] : best.heap) {
    out.push_back(Neighbor{index, std::sqrt(dist2)});
  }
  return out;
}

}  // namespace licam
