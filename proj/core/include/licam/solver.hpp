#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "licam/correspond.hpp"
#include "licam/graph.hpp"
#include "licam/point_cloud.hpp"

namespace licam {

/// Measurement uncertainties of the three residual types.
struct Sigmas {
  double pixel = 1.0;  // sigma_p [px]
  double lidar = 0.05;  // sigma_l [m]
  /// When > 0, a fixed depth sigma is used for every observation instead of
  /// the per-observation scaling sigma_d = (d^2 / (baseline * fx)) * sigma_p.
  double depth_constant = 0.0;
};

/// Per-observation depth uncertainty: (d^2 / bf) * sigma_p, or the constant
/// override when configured.
double sigma_depth(double depth, const CameraIntrinsics& K,
                   const Sigmas& sigmas);

/// Joint optimization state: poses, landmarks, extrinsic and both
/// observation sets, plus the clouds needed to recompute correspondences.
struct Problem {
  std::vector<Pose> poses;  // poses[0] stays the identity (gauge)
  std::vector<Landmark> landmarks;
  Pose extrinsic;  // LiDAR-to-camera
  std::vector<CameraObservation> camera_observations;
  std::vector<LidarObservation> lidar_observations;
  CameraIntrinsics intrinsics;
  Sigmas sigmas;
  DepthMode depth_mode = DepthMode::kRange;

  // Re-association context (may stay empty when no outer loop is run).
  std::vector<PointCloud> clouds;
  Adjacency lidar_adjacency;

  void validate() const;
};

struct Thresholds {
  double reprojection_px = 3.0;
  double depth_m = 0.01;
  double lidar_m = 0.1;
};

struct SolverConfig {
  int max_iterations = 200;
  double cost_relative_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
  double initial_lambda = 1e-6;
  /// Re-association rounds of the outer loop; the first round always uses
  /// the observations already present. Values < 1 behave like 1.
  int reassociation_rounds = 4;
  Thresholds thresholds;
  CorrespondConfig correspond;
  bool resample_keypoints = false;
  /// Keep the extrinsic fixed (camera-only / pre-calibrated comparisons).
  bool fix_extrinsic = false;
  /// Optional Huber robust weighting (off: plain binary-gated L2).
  bool use_huber = false;
  double huber_delta = 1.0;
  int threads = 1;
};

enum class SolveStatus { kConverged, kMaxIterations, kDiverged };

struct SolveReport {
  double final_cost = 0.0;
  int iterations = 0;                // accepted + rejected LM steps, total
  int camera_outliers = 0;           // observations gated over all passes
  int lidar_outliers = 0;
  int reassociation_rounds = 0;
  SolveStatus status = SolveStatus::kConverged;
  /// Parameter blocks with (numerically) zero information in the reduced
  /// normal equations, e.g. "extrinsic translation" for degenerate motion.
  std::vector<std::string> singular_blocks;
};

std::string to_string(SolveStatus status);

// -- residuals (Eqs. of the joint cost) --------------------------------------

/// Reprojection residual (phi(l|K,T_i) - u) / sigma_p as a smooth 2-vector;
/// its norm is the scalar feature error. Throws NonPositiveDepth when the
/// landmark falls behind camera i.
Eigen::Vector2d residual_feature(const CameraObservation& o,
                                 const Problem& prob);

/// Depth residual (depth(psi(l|T_i^-1)) - d) / sigma_d with the configured
/// depth interpretation. Throws NonPositiveDepth as above.
double residual_depth(const CameraObservation& o, const Problem& prob);

/// Point-to-plane residual n^T (psi(p|T_rel) - q) / sigma_l, where T_rel
/// maps the source cloud j into the target cloud i.
double residual_lidar(const LidarObservation& o, const Problem& prob);

/// 1/2 sum w (E_f^2 + E_d^2) + 1/2 sum w E_l^2. Observations behind the
/// camera contribute zero (they are dropped for the evaluation pass).
double total_cost(const Problem& prob);

/// Camera-only and LiDAR-only parts of total_cost; the LiDAR part accepts
/// an extrinsic override so perturbation sweeps can avoid touching the
/// problem state.
double camera_cost(const Problem& prob);
double lidar_cost(const Problem& prob, const Pose& extrinsic);

// -- analytic jacobians (exposed for verification) ---------------------------

struct CameraResidualJet {
  bool valid = false;  // false when the landmark is behind the camera
  Eigen::Vector2d r_feature = Eigen::Vector2d::Zero();
  double r_depth = 0.0;
  // Derivatives w.r.t. the 6-dof pose increment of camera i (zero block
  // when i == 0) and the landmark position.
  Eigen::Matrix<double, 2, 6> Jf_pose = Eigen::Matrix<double, 2, 6>::Zero();
  Eigen::Matrix<double, 2, 3> Jf_landmark = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Matrix<double, 1, 6> Jd_pose = Eigen::Matrix<double, 1, 6>::Zero();
  Eigen::Matrix<double, 1, 3> Jd_landmark = Eigen::Matrix<double, 1, 3>::Zero();
};

struct LidarResidualJet {
  double r = 0.0;
  Eigen::Matrix<double, 1, 6> J_pose_target = Eigen::Matrix<double, 1, 6>::Zero();
  Eigen::Matrix<double, 1, 6> J_pose_source = Eigen::Matrix<double, 1, 6>::Zero();
  Eigen::Matrix<double, 1, 6> J_extrinsic = Eigen::Matrix<double, 1, 6>::Zero();
};

CameraResidualJet evaluate_camera_residual(const CameraObservation& o,
                                           const Problem& prob);
LidarResidualJet evaluate_lidar_residual(const LidarObservation& o,
                                         const Problem& prob);

// -- optimization -------------------------------------------------------------

/// Levenberg-Marquardt over pose increments (pose 0 excluded), landmark
/// positions and the extrinsic increment, with the landmark block eliminated
/// through a Schur complement. Mutates the problem state in place.
SolveReport optimize(Problem& prob, const SolverConfig& config);

struct GateResult {
  int camera_gated = 0;  // newly gated this pass
  int lidar_gated = 0;
};

/// Zeroes the weight of observations whose unweighted errors exceed the
/// thresholds. Weights never come back within an association round. Throws
/// AllObservationsGated when nothing survives.
GateResult gate_outliers(Problem& prob, const Thresholds& thresholds);

/// Full joint estimation: repeated [optimize + gate] passes until no new
/// outliers, wrapped in the re-association outer loop that recomputes the
/// LiDAR observations from the latest estimates. Camera observations are
/// never recomputed and camera gates persist; LiDAR weights reset whenever
/// fresh correspondences are extracted.
SolveReport solve_joint(Problem& prob, const SolverConfig& config);

}  // namespace licam
