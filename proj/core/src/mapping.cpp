#include "licam/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>

#include "licam/errors.hpp"

namespace licam {

size_t DepthMap::valid_count() const {
  size_t count = 0;
  for (float d : depth) {
    if (std::isfinite(d)) ++count;
  }
  return count;
}

namespace {

// z-buffered projection that also remembers which point owns each pixel.
struct ProjectedCloud {
  DepthMap map;
  std::vector<int> point_index;  // -1 where empty

  ProjectedCloud(int w, int h)
      : map(w, h), point_index(static_cast<size_t>(w) * h, -1) {}
};

ProjectedCloud project_cloud(const PointCloud& cloud, const Pose& extrinsic,
                             const CameraIntrinsics& K, int width,
                             int height) {
  ProjectedCloud out(width, height);
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d x = transform_point(cloud.points[i], extrinsic);
    if (x.z() <= kMinProjectionDepth) continue;
    const int col = static_cast<int>(std::lround(K.fx * x.x() / x.z() + K.cx));
    const int row = static_cast<int>(std::lround(K.fy * x.y() / x.z() + K.cy));
    if (!out.map.in_bounds(col, row)) continue;
    float& cell = out.map.at(col, row);
    if (!std::isfinite(cell) || x.z() < cell) {
      cell = static_cast<float>(x.z());
      out.point_index[static_cast<size_t>(row) * width + col] =
          static_cast<int>(i);
    }
  }
  return out;
}

// Nearest valid pixel of `map` within a square search radius; returns
// (col, row) or nullopt.
std::optional<std::pair<int, int>> nearest_valid(const DepthMap& map, int col,
                                                 int row, int radius) {
  std::optional<std::pair<int, int>> best;
  double best_dist2 = std::numeric_limits<double>::infinity();
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      const int c = col + dc;
      const int r = row + dr;
      if (!map.in_bounds(c, r) || !map.valid(c, r)) continue;
      const double dist2 = double(dc) * dc + double(dr) * dr;
      if (dist2 < best_dist2 && dist2 <= double(radius) * radius) {
        best_dist2 = dist2;
        best = {c, r};
      }
    }
  }
  return best;
}

}  // namespace

DepthMap project_lidar_depth(const PointCloud& cloud, const Pose& extrinsic,
                             const CameraIntrinsics& K, int width,
                             int height) {
  return project_cloud(cloud, extrinsic, K, width, height).map;
}

DepthMap remove_outliers(const DepthMap& stereo, const DepthMap& lidar,
                         double max_diff, int radius) {
  if (stereo.width != lidar.width || stereo.height != lidar.height) {
    throw DimensionMismatch("stereo and lidar depth maps differ in size");
  }
  DepthMap out = stereo;
  for (int row = 0; row < stereo.height; ++row) {
    for (int col = 0; col < stereo.width; ++col) {
      if (!stereo.valid(col, row)) continue;
      const auto support = nearest_valid(lidar, col, row, radius);
      if (!support) continue;  // no LiDAR support: keep
      const double diff =
          std::abs(double(stereo.at(col, row)) -
                   double(lidar.at(support->first, support->second)));
      if (diff > max_diff) {
        out.at(col, row) = std::numeric_limits<float>::quiet_NaN();
      }
    }
  }
  return out;
}

DepthMap fill_holes(const DepthMap& stereo, const PointCloud& cloud,
                    const Pose& extrinsic, const CameraIntrinsics& K,
                    double max_curvature, double max_view_angle_rad,
                    int radius) {
  if (!cloud.has_normals() || !cloud.has_curvatures()) {
    throw MissingNormals("hole filling needs cloud normals and curvatures");
  }
  const ProjectedCloud projected =
      project_cloud(cloud, extrinsic, K, stereo.width, stereo.height);
  const double cos_max = std::cos(max_view_angle_rad);

  DepthMap out = stereo;
  for (int row = 0; row < stereo.height; ++row) {
    for (int col = 0; col < stereo.width; ++col) {
      if (stereo.valid(col, row)) continue;
      const auto support = nearest_valid(projected.map, col, row, radius);
      if (!support) continue;
      const int pi =
          projected.point_index[static_cast<size_t>(support->second) *
                                    stereo.width +
                                support->first];
      if (pi < 0 || !cloud.normal_valid(pi)) continue;
      const double curvature = cloud.curvatures[pi];
      if (!(curvature <= max_curvature)) continue;
      // View angle between the surface normal and the viewing ray, both in
      // the camera frame.
      const Eigen::Vector3d x = transform_point(cloud.points[pi], extrinsic);
      const Eigen::Vector3d n_cam = extrinsic.rotation * cloud.normals[pi];
      const double c = std::abs(n_cam.dot(x.normalized()));
      if (c < cos_max) continue;
      out.at(col, row) = projected.map.at(support->first, support->second);
    }
  }
  return out;
}

PointCloud assemble_model(const std::vector<DepthMap>& depth_maps,
                          const std::vector<Pose>& poses,
                          const CameraIntrinsics& K, double voxel_size) {
  PointCloud model;
  for (size_t s = 0; s < depth_maps.size(); ++s) {
    const DepthMap& map = depth_maps[s];
    const Pose& pose = poses.at(s);
    for (int row = 0; row < map.height; ++row) {
      for (int col = 0; col < map.width; ++col) {
        if (!map.valid(col, row)) continue;
        const double z = map.at(col, row);
        const Eigen::Vector3d x((col - K.cx) / K.fx * z,
                                (row - K.cy) / K.fy * z, z);
        model.points.push_back(transform_point(x, pose));
      }
    }
  }
  if (voxel_size <= 0.0 || model.points.empty()) {
    return model;
  }

  // Centroid per occupied voxel.
  struct Cell {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int count = 0;
  };
  std::unordered_map<std::uint64_t, Cell> grid;
  std::vector<std::uint64_t> order;  // deterministic output ordering
  auto key_of = [voxel_size](const Eigen::Vector3d& p) {
    const auto q = [voxel_size](double v) {
      return static_cast<std::uint64_t>(
                 static_cast<std::int64_t>(std::floor(v / voxel_size)) +
                 (1ll << 20)) &
             0x1FFFFF;
    };
    return q(p.x()) | (q(p.y()) << 21) | (q(p.z()) << 42);
  };
  for (const auto& p : model.points) {
    const std::uint64_t key = key_of(p);
    auto [it, inserted] = grid.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.sum += p;
    it->second.count += 1;
  }
  PointCloud down;
  down.points.reserve(order.size());
  for (const auto key : order) {
    const Cell& cell = grid.at(key);
    down.points.push_back(cell.sum / cell.count);
  }
  return down;
}

}  // namespace licam
