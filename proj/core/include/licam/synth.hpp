#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "licam/graph.hpp"
#include "licam/mapping.hpp"
#include "licam/point_cloud.hpp"

namespace licam {

/// Analytic surface primitives; exact geometry makes point-to-plane ground
/// truth exact.
struct Surface {
  enum class Type { kPlane, kBox, kCylinder };
  Type type = Type::kPlane;

  // plane: finite rectangle
  Eigen::Vector3d center{0, 0, 0};
  Eigen::Vector3d normal{0, 0, 1};  // plane normal (also selects the visible side)
  Eigen::Vector2d extent{1, 1};     // width/height along basis_u / basis_v

  // box
  Eigen::Vector3d size{1, 1, 1};
  Eigen::Quaterniond rotation{1, 0, 0, 0};

  // cylinder (lateral surface only)
  Eigen::Vector3d axis{0, 0, 1};
  double radius = 0.5;
  double height = 1.0;

  // Frame fixed at construction so the surface moves rigidly under a world
  // transform (plane: in-plane axes; cylinder: radial reference axes).
  Eigen::Vector3d basis_u{1, 0, 0};
  Eigen::Vector3d basis_v{0, 1, 0};

  static Surface MakePlane(const Eigen::Vector3d& center,
                           const Eigen::Vector3d& normal,
                           const Eigen::Vector2d& extent);
  static Surface MakeBox(const Eigen::Vector3d& center,
                         const Eigen::Vector3d& size,
                         const Eigen::Quaterniond& rotation);
  static Surface MakeCylinder(const Eigen::Vector3d& center,
                              const Eigen::Vector3d& axis, double radius,
                              double height);

  double area() const;

  struct Sample {
    Eigen::Vector3d point;
    Eigen::Vector3d normal;  // outward
  };
  Sample sample(std::mt19937_64& rng) const;

  /// Nearest positive ray hit, if any.
  struct Hit {
    double t = 0.0;
    Eigen::Vector3d normal;
  };
  std::optional<Hit> raycast(const Eigen::Vector3d& origin,
                             const Eigen::Vector3d& dir) const;
};

struct PoseGenerator {
  enum class Type { kOrbit, kLine, kCustom };
  Type type = Type::kOrbit;

  // orbit: stations on a horizontal arc looking at the center; a nonzero
  // alternating tilt adds a second rotation axis.
  Eigen::Vector3d orbit_center{0, 0, 0};
  double orbit_radius = 2.5;
  double orbit_height = 0.0;
  double orbit_sweep_deg = 120.0;
  double orbit_tilt_deg = 0.0;

  // line: fixed orientation, translating stations (degenerate rotation set)
  Eigen::Vector3d line_start{0, 0, 0};
  Eigen::Vector3d line_step{0.5, 0, 0};
  Eigen::Vector3d line_look_at{0, 0, 5};

  std::vector<Pose> custom;
};

struct NoiseSpec {
  double pixel_sigma = 0.0;
  /// Depth noise standard deviation = multiplier * d^2 / (baseline * fx).
  double depth_sigma_multiplier = 0.0;
  double range_sigma = 0.0;
};

struct OutlierSpec {
  double camera_fraction = 0.0;
  double camera_pixel_magnitude = 30.0;  // px
  double camera_depth_magnitude = 0.1;   // m
  double lidar_fraction = 0.0;
  double lidar_magnitude = 1.0;          // m, off-surface displacement
};

struct DepthMapSpec {
  bool enable = false;
  double noise_sigma = 0.0;
  double hole_fraction = 0.0;
  double outlier_fraction = 0.0;
  double outlier_magnitude = 0.2;  // m
};

struct SceneSpec {
  int stations = 5;
  PoseGenerator generator;
  Pose extrinsic;  // ground-truth LiDAR-to-camera
  int landmarks = 200;
  int descriptor_length = 16;
  double descriptor_noise = 0.0;
  /// When > 0, a landmark is only made visible from stations within this
  /// index distance of its anchor station (controls cross-station overlap).
  int visibility_window = 0;
  std::vector<Surface> surfaces;
  /// Surfaces landmarks are sampled on (indices into `surfaces`); empty
  /// means all of them. Clouds always sample every surface.
  std::vector<int> landmark_surfaces;
  int cloud_points = 20000;
  NoiseSpec noise;
  OutlierSpec outliers;
  /// Perturbation of the true pairwise cloud transforms handed out as the
  /// rough registration result.
  double rough_translation_sigma = 0.01;
  double rough_rotation_sigma_deg = 0.5;
  CameraIntrinsics camera{3000.0, 3000.0, 1024.0, 768.0, 0.38};
  int image_width = 2048;
  int image_height = 1536;
  /// Cloud pairs (i, j) with index distance <= window are adjacent
  /// (circular for full orbits).
  int lidar_adjacency_window = 2;
  DepthMapSpec depth_maps;
  /// Optional rigid transform applied to the generated world before
  /// normalization; outputs are invariant to it (gauge freedom).
  Pose world_transform;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Pairwise rough registration estimate: maps source-cloud (j) points into
/// the target cloud (i) frame.
struct RoughTransform {
  int target = -1;
  int source = -1;
  Pose transform;
};

struct GroundTruth {
  std::vector<Pose> poses;  // normalized so poses[0] is the identity
  Pose extrinsic;
  std::vector<Landmark> landmarks;  // all generated landmarks, world frame
  /// feature_landmark[i][f] = generated landmark id of feature f in station i.
  std::vector<std::vector<int>> feature_landmark;
  /// Corrupted feature indices per station.
  std::vector<std::vector<int>> feature_outliers;
  /// Corrupted point indices per cloud.
  std::vector<std::vector<int>> cloud_outliers;
  /// Row-major pixel indices per station (depth map generation only).
  std::vector<std::vector<int>> depth_holes;
  std::vector<std::vector<int>> depth_outliers;
};

struct SynthOutput {
  std::vector<FeatureSet> features;
  std::vector<PointCloud> clouds;  // analytic normals, station LiDAR frames
  std::vector<RoughTransform> rough_transforms;
  Adjacency lidar_adjacency;
  std::vector<DepthMap> stereo_depth_maps;  // empty unless enabled
  /// Noise-free surface samples in the normalized world frame, the stand-in
  /// for a survey-scanner reference model.
  PointCloud truth_cloud;
  GroundTruth truth;
};

/// Generates the full synthetic dataset for a scene specification.
/// Deterministic: identical spec and seed give identical output.
SynthOutput generate(const SceneSpec& spec);

/// Gaussian translation offset plus an axis-angle rotation with Gaussian
/// angle about a uniformly random axis.
Pose perturb_pose(const Pose& pose, double translation_sigma,
                  double rotation_sigma_rad, std::mt19937_64& rng);
Pose perturb_pose(const Pose& pose, double translation_sigma,
                  double rotation_sigma_rad, std::uint64_t seed);

/// Observation-level outlier injection with labels, for gating experiments:
/// camera observations get a pixel offset of the given magnitude in a random
/// direction plus a depth offset; LiDAR observations get their neighbor
/// displaced along the plane normal so the point-to-plane error changes by
/// exactly the given magnitude.
struct InjectedOutliers {
  std::vector<int> camera_indices;
  std::vector<int> lidar_indices;
};
InjectedOutliers inject_outliers(std::vector<CameraObservation>& camera_obs,
                                 std::vector<LidarObservation>& lidar_obs,
                                 const OutlierSpec& spec, std::uint64_t seed);

/// A deterministic stream of sub-seeds decoupling independent draws.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace licam
