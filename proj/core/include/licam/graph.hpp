#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "licam/errors.hpp"
#include "licam/geometry.hpp"

namespace licam {

/// An image key point with stereo depth and descriptor, ready for matching.
struct Feature {
  int station = -1;
  Eigen::Vector2d pixel{0.0, 0.0};
  double depth = 0.0;  // range along the viewing ray [m], must be > 0
  Eigen::VectorXd descriptor;
  int label = -1;  // landmark id once associated, -1 = unlabeled
};

using FeatureSet = std::vector<Feature>;

/// Camera observation 5-tuple {camera id, landmark id, pixel, depth, weight}.
struct CameraObservation {
  int camera = -1;
  int landmark = -1;
  Eigen::Vector2d pixel{0.0, 0.0};
  double depth = 0.0;
  double weight = 1.0;  // binary outlier gate
};

/// LiDAR observation 6-tuple {target id, source id, point, neighbor, normal,
/// weight}. `point` is a key point in the source cloud frame, `neighbor` its
/// nearest neighbor in the target cloud frame, `normal` the neighbor's unit
/// normal (target frame).
struct LidarObservation {
  int target = -1;  // i, always < source
  int source = -1;  // j
  Eigen::Vector3d point{0.0, 0.0, 0.0};
  Eigen::Vector3d neighbor{0.0, 0.0, 0.0};
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double weight = 1.0;
};

/// Symmetric boolean adjacency with a zero diagonal.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(int n) : n_(n), cells_(static_cast<size_t>(n) * n, 0) {}

  int size() const { return n_; }

  bool at(int i, int j) const {
    return cells_[static_cast<size_t>(i) * n_ + j] != 0;
  }

  void set(int i, int j, bool value = true) {
    if (i == j) return;  // diagonal stays zero
    cells_[static_cast<size_t>(i) * n_ + j] = value ? 1 : 0;
    cells_[static_cast<size_t>(j) * n_ + i] = value ? 1 : 0;
  }

  int edge_count() const;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct AssociationConfig {
  /// Absolute gate on the Euclidean descriptor distance of the best match.
  double similarity_threshold = 0.5;
  /// Lowe ratio gate: best/second-best distance must not exceed this.
  double ratio_threshold = 0.8;
  /// Optional mutual-consistency check (off by default; the matching loop
  /// as specified does not require it).
  bool cross_check = false;
};

struct AssociationResult {
  std::vector<CameraObservation> observations;
  std::vector<Landmark> landmarks;  // ids contiguous from 0, positions unset
  Adjacency camera_adjacency;
  /// labels[i][f] = landmark id assigned to feature f of station i, or -1.
  std::vector<std::vector<int>> labels;
};

/// Greedy descriptor association over all station pairs (i, j > i), adding
/// landmarks and camera observations incrementally. Landmark positions are
/// left at zero; call initialize_landmarks once pose guesses exist.
///
/// Stations with zero features are allowed (they contribute no matches).
/// Throws DescriptorLengthMismatch when descriptor lengths differ.
AssociationResult associate_features(const std::vector<FeatureSet>& stations,
                                     const AssociationConfig& config);

/// Element-wise OR of two adjacency matrices of equal size.
Adjacency merge_adjacency(const Adjacency& a, const Adjacency& b);

struct ConnectivityReport {
  bool connected = false;
  /// Components as sorted station id lists, ordered by smallest member.
  std::vector<std::vector<int>> components;
};

/// Breadth-first connectivity over the undirected graph.
ConnectivityReport check_connected(const Adjacency& a);

/// Sets every landmark position by back-projecting its first observation
/// (in O_c order) from that station's current pose estimate.
void initialize_landmarks(std::vector<Landmark>& landmarks,
                          const std::vector<CameraObservation>& observations,
                          const std::vector<Pose>& poses,
                          const CameraIntrinsics& K, DepthMode depth_mode);

}  // namespace licam
