#include "licam/correspond.hpp"

#include <optional>

#include <spdlog/spdlog.h>

#include "licam/parallel.hpp"

namespace licam {

CorrespondenceContext::CorrespondenceContext(
    const std::vector<PointCloud>& clouds, const CorrespondConfig& config)
    : clouds_(&clouds), config_(config) {
  indices_.reserve(clouds.size());
  for (const auto& cloud : clouds) {
    indices_.emplace_back(cloud);
  }
  resample(config.seed);
}

void CorrespondenceContext::resample(std::uint64_t seed) {
  keypoints_.clear();
  keypoints_.reserve(clouds_->size());
  for (size_t c = 0; c < clouds_->size(); ++c) {
    const auto& cloud = (*clouds_)[c];
    const int count = std::min<int>(config_.keypoints_per_cloud,
                                    static_cast<int>(cloud.size()));
    keypoints_.push_back(sample_keypoints(cloud, count, seed + c));
  }
}

std::vector<LidarObservation> CorrespondenceContext::extract(
    const Adjacency& lidar_adjacency, const std::vector<Pose>& poses,
    const Pose& extrinsic) const {
  const auto& clouds = *clouds_;
  std::vector<LidarObservation> observations;

  for (int i = 0; i < lidar_adjacency.size(); ++i) {
    for (int j = i + 1; j < lidar_adjacency.size(); ++j) {
      if (!lidar_adjacency.at(i, j)) continue;
      if (!clouds[i].has_normals()) {
        throw MissingNormals("target cloud " + std::to_string(i) +
                             " has no normals");
      }
      // Source key points mapped into the target frame, matched against
      // the target's exact nearest neighbor.
      const Pose source_to_target =
          relative_cloud_transform(poses[i], poses[j], extrinsic);
      const auto& kp = keypoints_[j];
      std::vector<std::optional<LidarObservation>> slots(kp.size());
      parallel_for(
          static_cast<int>(kp.size()), config_.threads,
          [&](int begin, int end) {
            for (int s = begin; s < end; ++s) {
              const Eigen::Vector3d& p = clouds[j].points[kp[s]];
              const Eigen::Vector3d p_target =
                  transform_point(p, source_to_target);
              const auto nb = indices_[i].nearest(p_target);
              if (nb.index < 0 || nb.distance > config_.max_dist) continue;
              if (!clouds[i].normal_valid(nb.index)) continue;
              slots[s] = LidarObservation{
                  i, j, p, clouds[i].points[nb.index],
                  clouds[i].normals[nb.index], 1.0};
            }
          });
      size_t before = observations.size();
      for (auto& slot : slots) {
        if (slot) observations.push_back(*slot);
      }
      if (observations.size() == before) {
        spdlog::warn("cloud pair ({}, {}) produced no correspondences", i, j);
      }
    }
  }
  return observations;
}

std::vector<LidarObservation> extract_lidar_observations(
    const std::vector<PointCloud>& clouds, const Adjacency& lidar_adjacency,
    const std::vector<Pose>& poses, const Pose& extrinsic,
    const CorrespondConfig& config) {
  CorrespondenceContext context(clouds, config);
  return context.extract(lidar_adjacency, poses, extrinsic);
}

}  // namespace licam
