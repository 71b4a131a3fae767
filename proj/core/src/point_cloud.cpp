#include "licam/point_cloud.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "licam/spatial_index.hpp"

namespace licam {

PointCloud transform_cloud(const PointCloud& cloud, const Pose& T) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    out.points.push_back(transform_point(p, T));
  }
  if (cloud.has_normals()) {
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) {
      out.normals.push_back(T.rotation * n);
    }
  }
  out.curvatures = cloud.curvatures;
  return out;
}

void estimate_normals(PointCloud& cloud, int k) {
  if (k < 3) {
    throw InvalidSpec("normal estimation requires k >= 3");
  }
  if (cloud.size() < static_cast<size_t>(k) + 1) {
    throw InvalidSpec("normal estimation requires at least k+1 points");
  }

  const SpatialIndex index(cloud);
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  cloud.normals.assign(cloud.size(), Eigen::Vector3d::Constant(nan));
  cloud.curvatures.assign(cloud.size(), nan);

  for (size_t i = 0; i < cloud.size(); ++i) {
    // k nearest neighbors; the query point itself comes back at distance 0.
    const auto neighbors = index.knn(cloud.points[i], k + 1);

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& nb : neighbors) mean += cloud.points[nb.index];
    mean /= static_cast<double>(neighbors.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : neighbors) {
      const Eigen::Vector3d d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(neighbors.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
    // Collinear neighborhood: the two smallest eigenvalues vanish.
    const double scale = std::max(lambda[2], 1e-300);
    if (lambda[1] <= 1e-9 * scale) {
      continue;  // normal stays NaN
    }

    Eigen::Vector3d normal = eig.eigenvectors().col(0);
    // Orient toward the sensor origin of this cloud's frame.
    if (normal.dot(-cloud.points[i]) < 0.0) normal = -normal;
    cloud.normals[i] = normal;
    cloud.curvatures[i] = lambda[0] / (lambda[0] + lambda[1] + lambda[2]);
  }
}

std::vector<int> sample_keypoints(const PointCloud& cloud, int count,
                                  std::uint64_t seed) {
  if (count < 0 || static_cast<size_t>(count) > cloud.size()) {
    throw CountExceedsCloud("keypoint count exceeds cloud size");
  }
  std::vector<int> all(cloud.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> picked;
  picked.reserve(count);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
  return picked;
}

}  // namespace licam
