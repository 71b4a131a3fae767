#pragma once

#include <filesystem>
#include <vector>

#include "licam/evaluate.hpp"
#include "licam/graph.hpp"
#include "licam/solver.hpp"
#include "licam/synth.hpp"

namespace licam {

struct SweepSpec {
  double half_range_translation = 0.05;  // [m]
  double half_range_rotation_deg = 2.0;
  int steps = 41;
  double rel_tol = 1e-6;  // flatness classification
};

struct RefineSpec {
  double max_diff = 0.05;          // fold one depth gate [m]
  int radius_px = 3;               // pixel neighborhood for both folds
  double max_curvature = 0.01;     // fold two flatness gate
  double max_view_angle_deg = 70;  // fold two view angle gate
  double voxel_size = 0.0;         // assembled model downsampling, 0 = off
};

struct EvalSpec {
  DistanceConfig distance;
  IcpConfig icp;
  bool run_icp = true;
};

/// Everything the pipeline commands need, loaded from one JSON file.
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
  std::filesystem::path features;
  std::vector<std::filesystem::path> clouds;
  std::filesystem::path rough_transforms;
  std::filesystem::path output;
  std::vector<std::filesystem::path> depth_maps;
  std::filesystem::path model;        // eval input; empty = output/model.ply
  std::filesystem::path truth_cloud;  // eval reference

  CameraIntrinsics camera;
  int image_width = 0;
  int image_height = 0;
  DepthMode depth_mode = DepthMode::kRange;
  Pose extrinsic_initial;

  AssociationConfig association;
  SolverConfig solver;
  Sigmas sigmas;
  /// Zero all LiDAR weights before solving (camera-only comparison mode).
  bool zero_lidar_weights = false;

  SweepSpec sweep;
  RefineSpec refine;
  EvalSpec eval;

  std::uint64_t seed = 1;
  int threads = 1;

  enum class Stage { kSolve, kProbe, kRefine, kEval };
  /// Checks that every input the stage needs exists on disk.
  void validate_for(Stage stage) const;
};

RunConfig load_run_config(const std::filesystem::path& path);

SceneSpec load_scene_spec(const std::filesystem::path& path);

}  // namespace licam
