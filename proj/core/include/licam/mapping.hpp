#pragma once

#include <cmath>
#include <vector>

#include "licam/point_cloud.hpp"

namespace licam {

/// Per-pixel depth in meters (camera-frame z), NaN = invalid, row-major.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> depth;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w),
        height(h),
        depth(static_cast<size_t>(w) * h,
              std::numeric_limits<float>::quiet_NaN()) {}

  float& at(int col, int row) {
    return depth[static_cast<size_t>(row) * width + col];
  }
  float at(int col, int row) const {
    return depth[static_cast<size_t>(row) * width + col];
  }
  bool valid(int col, int row) const { return std::isfinite(at(col, row)); }
  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  size_t valid_count() const;
};

/// Projects a station's LiDAR cloud (its own LiDAR frame) into that
/// station's camera through the extrinsic, z-buffered so the nearest point
/// wins each pixel.
DepthMap project_lidar_depth(const PointCloud& cloud, const Pose& extrinsic,
                             const CameraIntrinsics& K, int width, int height);

/// Fold one of the depth refinement: invalidates stereo pixels that
/// contradict nearby projected LiDAR depth. A stereo pixel is removed when
/// a valid LiDAR pixel exists within `radius` and the depth difference to
/// the nearest one exceeds max_diff. Pixels without LiDAR support are kept
/// (this fold only removes).
DepthMap remove_outliers(const DepthMap& stereo, const DepthMap& lidar,
                         double max_diff, int radius);

/// Fold two: fills invalid stereo pixels with projected LiDAR depth, but
/// only from locally flat (curvature <= max_curvature), well observed
/// (angle between normal and viewing ray <= max_view_angle) LiDAR points.
/// Valid pixels are never modified (this fold only adds).
DepthMap fill_holes(const DepthMap& stereo, const PointCloud& cloud,
                    const Pose& extrinsic, const CameraIntrinsics& K,
                    double max_curvature, double max_view_angle_rad,
                    int radius = 3);

/// Back-projects every valid pixel of each station's depth map to the world
/// frame and concatenates. voxel_size > 0 downsamples to one centroid per
/// voxel.
PointCloud assemble_model(const std::vector<DepthMap>& depth_maps,
                          const std::vector<Pose>& poses,
                          const CameraIntrinsics& K, double voxel_size = 0.0);

}  // namespace licam
