#pragma once

#include <cstdint>
#include <vector>

#include "licam/graph.hpp"
#include "licam/point_cloud.hpp"
#include "licam/spatial_index.hpp"

namespace licam {

struct CorrespondConfig {
  /// Association gate on the nearest-neighbor distance [m].
  double max_dist = 0.1;
  /// Random key points sampled per source cloud.
  int keypoints_per_cloud = 2000;
  /// Neighbor count for normal estimation.
  int normal_k = 20;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Reusable per-dataset state for repeated LiDAR observation extraction:
/// one nearest-neighbor index per cloud and one fixed key point sample per
/// cloud (key points are kept fixed across re-association rounds unless
/// resampled explicitly).
class CorrespondenceContext {
 public:
  CorrespondenceContext(const std::vector<PointCloud>& clouds,
                        const CorrespondConfig& config);

  /// Draws a fresh key point sample (used when resampling per round).
  void resample(std::uint64_t seed);

  /// Point-plane pairs for every adjacent pair (i < j) under the current
  /// pose and extrinsic estimates. Pairs that yield zero observations are
  /// logged, not fatal. Throws MissingNormals when a target cloud lacks
  /// normals.
  std::vector<LidarObservation> extract(const Adjacency& lidar_adjacency,
                                        const std::vector<Pose>& poses,
                                        const Pose& extrinsic) const;

  const std::vector<std::vector<int>>& keypoints() const { return keypoints_; }

 private:
  const std::vector<PointCloud>* clouds_;
  CorrespondConfig config_;
  std::vector<SpatialIndex> indices_;
  std::vector<std::vector<int>> keypoints_;
};

/// One-shot convenience wrapper around CorrespondenceContext.
std::vector<LidarObservation> extract_lidar_observations(
    const std::vector<PointCloud>& clouds, const Adjacency& lidar_adjacency,
    const std::vector<Pose>& poses, const Pose& extrinsic,
    const CorrespondConfig& config);

}  // namespace licam
