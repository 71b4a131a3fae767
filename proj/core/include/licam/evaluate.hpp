#pragma once

#include <vector>

#include "licam/point_cloud.hpp"

namespace licam {

struct IcpConfig {
  int max_iterations = 50;
  double tolerance = 1e-10;  // stop when the increment norm drops below this
  double max_correspondence_dist = 0.5;  // [m]
};

struct IcpResult {
  Pose transform;  // refined source-to-target
  bool converged = false;
  int iterations = 0;
  double rms = 0.0;  // point-to-plane RMS over the final correspondences
};

/// Standard point-to-plane ICP: minimizes sum (n^T (R p + t - q))^2 over the
/// nearest-neighbor correspondences, re-associating every iteration.
/// Throws NoCorrespondences when no point pairs fall within the gate; a
/// result that ran out of iterations comes back with converged = false.
IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const Pose& init, const IcpConfig& config = {});

struct DistanceReport {
  double mean = 0.0;    // [m]
  double median = 0.0;  // [m]
  std::vector<double> bin_edges;  // bins + 1 entries
  std::vector<int> counts;        // per bin
  int sample_count = 0;           // points within max_dist of the truth
  int excluded = 0;               // points without a close truth neighbor
  double density_per_cm2 = 0.0;   // mean local model density
};

struct DistanceConfig {
  double max_dist = 0.02;  // [m] association + histogram upper edge
  int bins = 100;
  bool signed_distance = false;  // default: absolute distances
};

/// Point-to-plane distances from each model point to the tangent plane at
/// its nearest truth neighbor, aggregated into a histogram. Truth normals
/// are required. Throws EmptyInput when either cloud is empty.
DistanceReport distance_map(const PointCloud& model, const PointCloud& truth,
                            const DistanceConfig& config = {});

}  // namespace licam
