#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "licam/point_cloud.hpp"

namespace licam {

/// Exact nearest-neighbor search over a fixed point set (3D kd-tree).
/// The index is immutable after construction and safe to query from
/// multiple threads.
class SpatialIndex {
 public:
  struct Neighbor {
    int index = -1;
    double distance = 0.0;
  };

  SpatialIndex() = default;
  explicit SpatialIndex(const std::vector<Eigen::Vector3d>& points);
  explicit SpatialIndex(const PointCloud& cloud)
      : SpatialIndex(cloud.points) {}

  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  /// Exact nearest neighbor; index < 0 when the index is empty.
  Neighbor nearest(const Eigen::Vector3d& query) const;

  /// k exact nearest neighbors ordered by increasing distance.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const;

 private:
  struct Node {
    int axis = 0;
    int point = -1;   // index into points_
    int left = -1;    // children as node indices, -1 = leaf side empty
    int right = -1;
  };

  int build(std::vector<int>& indices, int begin, int end, int depth);

  std::vector<Eigen::Vector3d> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace licam
