#include "licam/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "licam/spatial_index.hpp"

namespace licam {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const Pose& init, const IcpConfig& config) {
  if (!target.has_normals()) {
    throw MissingNormals("point-to-plane ICP needs target normals");
  }
  if (source.points.empty() || target.points.empty()) {
    throw EmptyInput("ICP needs non-empty clouds");
  }

  const SpatialIndex index(target);
  IcpResult result;
  result.transform = init;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    result.iterations = iter + 1;

    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Vector6d g = Vector6d::Zero();
    double sum_sq = 0.0;
    int count = 0;
    for (const auto& p : source.points) {
      const Eigen::Vector3d moved = transform_point(p, result.transform);
      const auto nb = index.nearest(moved);
      if (nb.index < 0 || nb.distance > config.max_correspondence_dist) {
        continue;
      }
      if (!target.normal_valid(nb.index)) continue;
      const Eigen::Vector3d& n = target.normals[nb.index];
      const double r = n.dot(moved - target.points[nb.index]);

      // Left-multiplied increment on the current transform.
      Eigen::Matrix<double, 1, 6> J;
      J.leftCols<3>() = -n.transpose() * skew(moved);
      J.rightCols<3>() = n.transpose();
      H += J.transpose() * J;
      g += J.transpose() * r;
      sum_sq += r * r;
      ++count;
    }
    if (count == 0) {
      throw NoCorrespondences("no point pairs within the ICP gate");
    }
    result.rms = std::sqrt(sum_sq / count);

    // Tiny ridge keeps under-constrained geometry (single plane) solvable.
    const double ridge = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    H.diagonal().array() += ridge;
    const Vector6d delta = H.ldlt().solve(-g);
    if (!delta.allFinite()) break;
    result.transform = apply_increment(result.transform, delta);
    if (delta.norm() < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

DistanceReport distance_map(const PointCloud& model, const PointCloud& truth,
                            const DistanceConfig& config) {
  if (model.points.empty() || truth.points.empty()) {
    throw EmptyInput("distance evaluation needs non-empty clouds");
  }
  if (!truth.has_normals()) {
    throw MissingNormals("distance evaluation needs truth normals");
  }

  const SpatialIndex index(truth);
  std::vector<double> distances;
  distances.reserve(model.points.size());
  DistanceReport report;
  for (const auto& p : model.points) {
    const auto nb = index.nearest(p);
    if (nb.index < 0 || nb.distance > config.max_dist ||
        !truth.normal_valid(nb.index)) {
      ++report.excluded;
      continue;
    }
    const double d = truth.normals[nb.index].dot(p - truth.points[nb.index]);
    distances.push_back(config.signed_distance ? d : std::abs(d));
  }
  if (distances.empty()) {
    throw NoCorrespondences("no model point close enough to the truth cloud");
  }

  report.sample_count = static_cast<int>(distances.size());
  report.mean = std::accumulate(distances.begin(), distances.end(), 0.0) /
                distances.size();
  std::vector<double> sorted = distances;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  report.median = sorted[sorted.size() / 2];

  const double lo = config.signed_distance ? -config.max_dist : 0.0;
  const double hi = config.max_dist;
  const int bins = std::max(1, config.bins);
  report.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) {
    report.bin_edges[b] = lo + (hi - lo) * b / bins;
  }
  report.counts.assign(bins, 0);
  for (double d : distances) {
    int b = static_cast<int>((d - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++report.counts[b];
  }

  // Mean local surface density [points/cm^2]: neighbors within a 1 cm disk
  // radius around a subsample of model points.
  const SpatialIndex model_index(model);
  const double r = 0.01;
  const size_t step = std::max<size_t>(1, model.points.size() / 1000);
  double acc = 0.0;
  int probes = 0;
  for (size_t i = 0; i < model.points.size(); i += step) {
    const auto nn = model_index.knn(model.points[i], 64);
    int within = 0;
    for (const auto& nb : nn) {
      if (nb.distance <= r) ++within;
    }
    acc += within / (M_PI * (r * 100.0) * (r * 100.0));
    ++probes;
  }
  report.density_per_cm2 = probes > 0 ? acc / probes : 0.0;
  return report;
}

}  // namespace licam
