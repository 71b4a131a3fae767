#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "licam/errors.hpp"
#include "licam/geometry.hpp"

namespace licam {

/// Indexed 3D point set in the LiDAR frame of its station. Normals and
/// curvatures are optional and, when present, have the same cardinality as
/// the points. An invalid normal (degenerate neighborhood) is stored as NaN.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> curvatures;

  size_t size() const { return points.size(); }
  bool has_normals() const { return normals.size() == points.size(); }
  bool has_curvatures() const { return curvatures.size() == points.size(); }

  bool normal_valid(size_t i) const {
    return has_normals() && normals[i].allFinite();
  }
};

/// Rigidly transforms points and rotates normals.
PointCloud transform_cloud(const PointCloud& cloud, const Pose& T);

/// Per-point normal and curvature from the covariance of the k nearest
/// neighbors (the point itself included). The normal is the eigenvector of
/// the smallest eigenvalue, oriented toward the sensor origin; curvature is
/// lambda0 / (lambda0 + lambda1 + lambda2).
///
/// Points with a degenerate (rank < 2) neighborhood get a NaN normal and
/// are skipped by the correspondence search. Requires k >= 3 and
/// cloud.size() >= k + 1.
void estimate_normals(PointCloud& cloud, int k);

/// Uniform sample of `count` distinct point indices, deterministic in seed.
/// Throws CountExceedsCloud when count > cloud size.
std::vector<int> sample_keypoints(const PointCloud& cloud, int count,
                                  std::uint64_t seed);

}  // namespace licam
