#include "licam/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <spdlog/spdlog.h>

namespace licam {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

constexpr double kLambdaMin = 1e-12;
constexpr double kLambdaMax = 1e14;
constexpr double kDiagFloor = 1e-12;
// A step this small cannot move the state: the iterate sits at the
// numerical floor of the cost, which counts as convergence.
constexpr double kStepTolerance = 1e-14;

}  // namespace

double sigma_depth(double depth, const CameraIntrinsics& K,
                   const Sigmas& sigmas) {
  if (sigmas.depth_constant > 0.0) return sigmas.depth_constant;
  return depth * depth / (K.baseline * K.fx) * sigmas.pixel;
}

void Problem::validate() const {
  if (poses.empty()) throw SolverError("problem has no poses");
  const Pose& anchor = poses.front();
  if (rotation_angle(anchor) > 1e-9 || anchor.translation.norm() > 1e-9) {
    throw SolverError("pose 0 must be the identity (gauge fix)");
  }
  intrinsics.validate();
  const int n_poses = static_cast<int>(poses.size());
  const int n_landmarks = static_cast<int>(landmarks.size());
  for (int k = 0; k < n_landmarks; ++k) {
    if (landmarks[k].id != k) {
      throw SolverError("landmark ids must be contiguous from 0");
    }
  }
  for (const auto& o : camera_observations) {
    if (o.camera < 0 || o.camera >= n_poses || o.landmark < 0 ||
        o.landmark >= n_landmarks) {
      throw SolverError("camera observation references an invalid id");
    }
  }
  for (const auto& o : lidar_observations) {
    if (o.target < 0 || o.source <= o.target || o.source >= n_poses) {
      throw SolverError("lidar observation ids must satisfy 0 <= i < j < N");
    }
  }
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kDiverged:
      return "diverged";
  }
  return "unknown";
}

// -- residual evaluation ------------------------------------------------------

CameraResidualJet evaluate_camera_residual(const CameraObservation& o,
                                           const Problem& prob) {
  CameraResidualJet jet;
  const Pose& pose = prob.poses[o.camera];
  const Eigen::Vector3d& l = prob.landmarks[o.landmark].position;
  const Eigen::Matrix3d Rt = pose.rotationMatrix().transpose();
  const Eigen::Vector3d x = Rt * (l - pose.translation);
  if (x.z() <= kMinProjectionDepth) {
    return jet;  // behind the camera; caller drops the observation
  }
  jet.valid = true;

  const CameraIntrinsics& K = prob.intrinsics;
  const double inv_z = 1.0 / x.z();
  const double inv_sp = 1.0 / prob.sigmas.pixel;

  jet.r_feature =
      (Eigen::Vector2d(K.fx * x.x() * inv_z + K.cx, K.fy * x.y() * inv_z + K.cy) -
       o.pixel) *
      inv_sp;

  // dx/d(landmark) = R^T, dx/d(rot inc) = R^T [l - t]_x, dx/d(t inc) = -R^T
  const Eigen::Matrix3d dx_dtheta = Rt * skew(l - pose.translation);

  Eigen::Matrix<double, 2, 3> P;
  P << K.fx * inv_z, 0.0, -K.fx * x.x() * inv_z * inv_z, 0.0, K.fy * inv_z,
      -K.fy * x.y() * inv_z * inv_z;

  jet.Jf_landmark = P * Rt * inv_sp;
  jet.Jf_pose.leftCols<3>() = P * dx_dtheta * inv_sp;
  jet.Jf_pose.rightCols<3>() = -P * Rt * inv_sp;

  const double sd = sigma_depth(o.depth, K, prob.sigmas);
  const double inv_sd = 1.0 / sd;
  Eigen::RowVector3d ddepth_dx;
  if (prob.depth_mode == DepthMode::kRange) {
    ddepth_dx = x.transpose() / x.norm();
    jet.r_depth = (x.norm() - o.depth) * inv_sd;
  } else {
    ddepth_dx = Eigen::RowVector3d(0.0, 0.0, 1.0);
    jet.r_depth = (x.z() - o.depth) * inv_sd;
  }
  jet.Jd_landmark = ddepth_dx * Rt * inv_sd;
  jet.Jd_pose.leftCols<3>() = ddepth_dx * dx_dtheta * inv_sd;
  jet.Jd_pose.rightCols<3>() = -ddepth_dx * Rt * inv_sd;
  return jet;
}

LidarResidualJet evaluate_lidar_residual(const LidarObservation& o,
                                         const Problem& prob) {
  LidarResidualJet jet;
  const Pose& Ti = prob.poses[o.target];
  const Pose& Tj = prob.poses[o.source];
  const Pose& Te = prob.extrinsic;
  const Eigen::Matrix3d Ri_t = Ti.rotationMatrix().transpose();
  const Eigen::Matrix3d Rj = Tj.rotationMatrix();
  const Eigen::Matrix3d Re = Te.rotationMatrix();
  const Eigen::Matrix3d Re_t = Re.transpose();

  // Chain: source LiDAR -> source camera -> world -> target camera ->
  // target LiDAR.
  const Eigen::Vector3d u = Re * o.point + Te.translation;
  const Eigen::Vector3d g = Rj * u + Tj.translation;
  const Eigen::Vector3d c = Ri_t * (g - Ti.translation);
  const Eigen::Vector3d y = Re_t * (c - Te.translation);

  const double inv_sl = 1.0 / prob.sigmas.lidar;
  jet.r = o.normal.dot(y - o.neighbor) * inv_sl;

  const Eigen::RowVector3d n_t = o.normal.transpose() * inv_sl;
  const Eigen::Matrix3d A = Re_t * Ri_t;  // world -> target LiDAR rotation

  jet.J_pose_source.leftCols<3>() = -n_t * A * skew(g - Tj.translation);
  jet.J_pose_source.rightCols<3>() = n_t * A;
  jet.J_pose_target.leftCols<3>() = n_t * A * skew(g - Ti.translation);
  jet.J_pose_target.rightCols<3>() = -n_t * A;
  jet.J_extrinsic.leftCols<3>() =
      n_t * (Re_t * skew(c - Te.translation) - A * Rj * skew(Re * o.point));
  jet.J_extrinsic.rightCols<3>() = n_t * (A * Rj - Re_t);
  return jet;
}

Eigen::Vector2d residual_feature(const CameraObservation& o,
                                 const Problem& prob) {
  const Pose world_to_camera = inverse(prob.poses[o.camera]);
  const Eigen::Vector2d pixel =
      project(prob.landmarks[o.landmark], world_to_camera, prob.intrinsics);
  return (pixel - o.pixel) / prob.sigmas.pixel;
}

double residual_depth(const CameraObservation& o, const Problem& prob) {
  const Eigen::Vector3d x =
      transform_point(prob.landmarks[o.landmark].position,
                      inverse(prob.poses[o.camera]));
  if (x.z() <= kMinProjectionDepth) {
    throw NonPositiveDepth("landmark behind camera " +
                           std::to_string(o.camera));
  }
  const double sd = sigma_depth(o.depth, prob.intrinsics, prob.sigmas);
  return (depth_of(x, prob.depth_mode) - o.depth) / sd;
}

double residual_lidar(const LidarObservation& o, const Problem& prob) {
  const Pose rel = relative_cloud_transform(
      prob.poses[o.target], prob.poses[o.source], prob.extrinsic);
  return o.normal.dot(transform_point(o.point, rel) - o.neighbor) /
         prob.sigmas.lidar;
}

double camera_cost(const Problem& prob) {
  double cost = 0.0;
  for (const auto& o : prob.camera_observations) {
    if (o.weight == 0.0) continue;
    const CameraResidualJet jet = evaluate_camera_residual(o, prob);
    if (!jet.valid) continue;
    cost += 0.5 * o.weight *
            (jet.r_feature.squaredNorm() + jet.r_depth * jet.r_depth);
  }
  return cost;
}

double lidar_cost(const Problem& prob, const Pose& extrinsic) {
  double cost = 0.0;
  const Eigen::Matrix3d Re = extrinsic.rotationMatrix();
  const Eigen::Matrix3d Re_t = Re.transpose();
  const double inv_sl = 1.0 / prob.sigmas.lidar;
  for (const auto& o : prob.lidar_observations) {
    if (o.weight == 0.0) continue;
    const Pose& Ti = prob.poses[o.target];
    const Pose& Tj = prob.poses[o.source];
    const Eigen::Vector3d g =
        Tj.rotationMatrix() * (Re * o.point + extrinsic.translation) +
        Tj.translation;
    const Eigen::Vector3d y =
        Re_t * (Ti.rotationMatrix().transpose() * (g - Ti.translation) -
                extrinsic.translation);
    const double r = o.normal.dot(y - o.neighbor) * inv_sl;
    cost += 0.5 * o.weight * r * r;
  }
  return cost;
}

double total_cost(const Problem& prob) {
  return camera_cost(prob) + lidar_cost(prob, prob.extrinsic);
}

// -- LM machinery -------------------------------------------------------------

namespace {

using Matrix63 = Eigen::Matrix<double, 6, 3>;

struct LandmarkCoupling {
  int block = -1;  // camera-side block index
  Matrix63 w = Matrix63::Zero();
};

// Normal equations with the landmark block kept separate for the Schur
// complement. Camera-side layout: poses 1..N-1 (6 each), then the extrinsic
// (6) unless fixed.
struct NormalEquations {
  Eigen::MatrixXd H;  // camera-side
  Eigen::VectorXd g;
  std::vector<Eigen::Matrix3d> H_ll;
  std::vector<Eigen::Vector3d> g_l;
  std::vector<std::vector<LandmarkCoupling>> couplings;
  double cost = 0.0;
  bool finite = true;
};

struct BlockLayout {
  int n_poses = 0;
  bool fix_extrinsic = false;

  int pose_block(int pose) const { return pose - 1; }  // pose >= 1
  int extrinsic_block() const { return n_poses - 1; }
  int camera_dim() const {
    return 6 * (n_poses - 1) + (fix_extrinsic ? 0 : 6);
  }
};

double huber_weight(double s, double delta) {
  return s <= delta ? 1.0 : delta / s;
}

double robust_cost(double squared_norm, const SolverConfig& config) {
  if (!config.use_huber) return 0.5 * squared_norm;
  const double s = std::sqrt(squared_norm);
  const double d = config.huber_delta;
  return s <= d ? 0.5 * squared_norm : d * (s - 0.5 * d);
}

double evaluate_cost(const Problem& prob, const SolverConfig& config) {
  if (!config.use_huber) return total_cost(prob);
  double cost = 0.0;
  for (const auto& o : prob.camera_observations) {
    if (o.weight == 0.0) continue;
    const CameraResidualJet jet = evaluate_camera_residual(o, prob);
    if (!jet.valid) continue;
    cost += o.weight * robust_cost(jet.r_feature.squaredNorm() +
                                       jet.r_depth * jet.r_depth,
                                   config);
  }
  for (const auto& o : prob.lidar_observations) {
    if (o.weight == 0.0) continue;
    const double r = residual_lidar(o, prob);
    cost += o.weight * robust_cost(r * r, config);
  }
  return cost;
}

NormalEquations assemble(const Problem& prob, const SolverConfig& config,
                         const BlockLayout& layout) {
  NormalEquations eq;
  const int dim = layout.camera_dim();
  eq.H = Eigen::MatrixXd::Zero(dim, dim);
  eq.g = Eigen::VectorXd::Zero(dim);
  eq.H_ll.assign(prob.landmarks.size(), Eigen::Matrix3d::Zero());
  eq.g_l.assign(prob.landmarks.size(), Eigen::Vector3d::Zero());
  eq.couplings.assign(prob.landmarks.size(), {});

  for (const auto& o : prob.camera_observations) {
    if (o.weight == 0.0) continue;
    const CameraResidualJet jet = evaluate_camera_residual(o, prob);
    if (!jet.valid) continue;

    const double sq = jet.r_feature.squaredNorm() + jet.r_depth * jet.r_depth;
    eq.cost += o.weight * robust_cost(sq, config);
    double w = o.weight;
    if (config.use_huber) {
      w *= huber_weight(std::sqrt(sq), config.huber_delta);
    }

    Eigen::Matrix<double, 3, 6> J_pose;
    J_pose.topRows<2>() = jet.Jf_pose;
    J_pose.row(2) = jet.Jd_pose;
    Eigen::Matrix3d J_lm;
    J_lm.topRows<2>() = jet.Jf_landmark;
    J_lm.row(2) = jet.Jd_landmark;
    Eigen::Vector3d r(jet.r_feature.x(), jet.r_feature.y(), jet.r_depth);

    const int k = o.landmark;
    eq.H_ll[k] += w * J_lm.transpose() * J_lm;
    eq.g_l[k] += w * J_lm.transpose() * r;
    if (o.camera > 0) {
      const int b = layout.pose_block(o.camera);
      eq.H.block<6, 6>(6 * b, 6 * b) += w * J_pose.transpose() * J_pose;
      eq.g.segment<6>(6 * b) += w * J_pose.transpose() * r;
      eq.couplings[k].push_back(
          LandmarkCoupling{b, w * J_pose.transpose() * J_lm});
    }
  }

  for (const auto& o : prob.lidar_observations) {
    if (o.weight == 0.0) continue;
    const LidarResidualJet jet = evaluate_lidar_residual(o, prob);
    eq.cost += o.weight * robust_cost(jet.r * jet.r, config);
    double w = o.weight;
    if (config.use_huber) {
      w *= huber_weight(std::abs(jet.r), config.huber_delta);
    }

    // Up to three coupled blocks: target pose, source pose, extrinsic.
    std::pair<int, Eigen::Matrix<double, 1, 6>> rows[3];
    int count = 0;
    if (o.target > 0) {
      rows[count++] = {layout.pose_block(o.target), jet.J_pose_target};
    }
    if (o.source > 0) {
      rows[count++] = {layout.pose_block(o.source), jet.J_pose_source};
    }
    if (!layout.fix_extrinsic) {
      rows[count++] = {layout.extrinsic_block(), jet.J_extrinsic};
    }
    for (int a = 0; a < count; ++a) {
      eq.g.segment<6>(6 * rows[a].first) +=
          w * rows[a].second.transpose() * jet.r;
      for (int b = 0; b < count; ++b) {
        eq.H.block<6, 6>(6 * rows[a].first, 6 * rows[b].first) +=
            w * rows[a].second.transpose() * rows[b].second;
      }
    }
  }

  eq.finite = std::isfinite(eq.cost) && eq.H.allFinite() && eq.g.allFinite();
  return eq;
}

struct SchurResult {
  Eigen::VectorXd delta_camera;
  std::vector<Eigen::Vector3d> delta_landmarks;
  bool ok = false;
};

// Solves the damped normal equations by eliminating the landmark blocks.
SchurResult solve_normal_equations(const NormalEquations& eq, double lambda) {
  SchurResult result;
  const int dim = static_cast<int>(eq.H.rows());
  Eigen::MatrixXd S = eq.H;
  Eigen::VectorXd b = eq.g;

  for (int d = 0; d < dim; ++d) {
    S(d, d) += lambda * std::max(eq.H(d, d), kDiagFloor);
  }

  const size_t n_landmarks = eq.H_ll.size();
  std::vector<Eigen::Matrix3d> lambda_inv(n_landmarks);
  for (size_t k = 0; k < n_landmarks; ++k) {
    Eigen::Matrix3d damped = eq.H_ll[k];
    for (int d = 0; d < 3; ++d) {
      damped(d, d) += lambda * std::max(eq.H_ll[k](d, d), kDiagFloor);
    }
    // Guard fully-gated landmarks (zero information).
    if (damped(0, 0) == 0.0 && damped(1, 1) == 0.0 && damped(2, 2) == 0.0) {
      damped = Eigen::Matrix3d::Identity() * kDiagFloor;
    }
    lambda_inv[k] = damped.inverse();
    if (!lambda_inv[k].allFinite()) return result;

    const auto& coupled = eq.couplings[k];
    for (const auto& wa : coupled) {
      const Matrix63 wa_li = wa.w * lambda_inv[k];
      b.segment<6>(6 * wa.block) -= wa_li * eq.g_l[k];
      for (const auto& wb : coupled) {
        S.block<6, 6>(6 * wa.block, 6 * wb.block) -=
            wa_li * wb.w.transpose();
      }
    }
  }

  result.delta_camera = Eigen::VectorXd::Zero(dim);
  if (dim > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) return result;
    result.delta_camera = ldlt.solve(-b);
    if (!result.delta_camera.allFinite()) return result;
  }

  result.delta_landmarks.resize(n_landmarks);
  for (size_t k = 0; k < n_landmarks; ++k) {
    Eigen::Vector3d rhs = eq.g_l[k];
    for (const auto& wa : eq.couplings[k]) {
      rhs += wa.w.transpose() * result.delta_camera.segment<6>(6 * wa.block);
    }
    result.delta_landmarks[k] = -lambda_inv[k] * rhs;
    if (!result.delta_landmarks[k].allFinite()) return result;
  }
  result.ok = true;
  return result;
}

void apply_step(Problem& prob, const BlockLayout& layout,
                const SchurResult& step) {
  for (int i = 1; i < layout.n_poses; ++i) {
    const Vector6d delta =
        step.delta_camera.segment<6>(6 * layout.pose_block(i));
    prob.poses[i] = apply_increment(prob.poses[i], delta);
  }
  if (!layout.fix_extrinsic) {
    const Vector6d delta =
        step.delta_camera.segment<6>(6 * layout.extrinsic_block());
    prob.extrinsic = apply_increment(prob.extrinsic, delta);
  }
  for (size_t k = 0; k < prob.landmarks.size(); ++k) {
    prob.landmarks[k].position += step.delta_landmarks[k];
  }
}

// Undamped reduced Hessian diagnostics: 3x3 diagonal sub-blocks whose
// smallest eigenvalue is numerically zero relative to the overall scale are
// reported as unconstrained.
std::vector<std::string> detect_singular_blocks(const NormalEquations& eq,
                                                const BlockLayout& layout) {
  std::vector<std::string> flagged;
  const int dim = layout.camera_dim();
  if (dim == 0) return flagged;

  Eigen::MatrixXd S = eq.H;
  for (size_t k = 0; k < eq.H_ll.size(); ++k) {
    Eigen::Matrix3d h = eq.H_ll[k];
    const double scale = h.diagonal().maxCoeff();
    if (scale <= 0.0) continue;
    Eigen::Matrix3d inv = (h + Eigen::Matrix3d::Identity() * (1e-12 * scale))
                              .inverse();
    for (const auto& wa : eq.couplings[k]) {
      for (const auto& wb : eq.couplings[k]) {
        S.block<6, 6>(6 * wa.block, 6 * wb.block) -=
            wa.w * inv * wb.w.transpose();
      }
    }
  }

  const double scale = std::max(S.diagonal().maxCoeff(), 1e-300);
  auto check = [&](int offset, const std::string& name) {
    const Eigen::Matrix3d sub = S.block<3, 3>(offset, offset);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sub);
    if (eig.eigenvalues()[0] < 1e-10 * scale) {
      flagged.push_back(name);
    }
  };
  for (int i = 1; i < layout.n_poses; ++i) {
    const int b = 6 * layout.pose_block(i);
    check(b, "pose " + std::to_string(i) + " rotation");
    check(b + 3, "pose " + std::to_string(i) + " translation");
  }
  if (!layout.fix_extrinsic) {
    const int b = 6 * layout.extrinsic_block();
    check(b, "extrinsic rotation");
    check(b + 3, "extrinsic translation");
  }
  return flagged;
}

}  // namespace

SolveReport optimize(Problem& prob, const SolverConfig& config) {
  prob.validate();
  BlockLayout layout{static_cast<int>(prob.poses.size()),
                     config.fix_extrinsic};

  SolveReport report;
  NormalEquations eq = assemble(prob, config, layout);
  if (!eq.finite) {
    report.status = SolveStatus::kDiverged;
    report.final_cost = eq.cost;
    return report;
  }

  double cost = eq.cost;
  double lambda = config.initial_lambda;
  report.status = SolveStatus::kMaxIterations;

  auto gradient_norm = [&eq]() {
    double g = eq.g.size() > 0 ? eq.g.lpNorm<Eigen::Infinity>() : 0.0;
    for (const auto& gl : eq.g_l) {
      g = std::max(g, gl.lpNorm<Eigen::Infinity>());
    }
    return g;
  };

  if (gradient_norm() < config.gradient_tolerance) {
    report.status = SolveStatus::kConverged;
  } else {
    while (report.iterations < config.max_iterations) {
      ++report.iterations;

      const SchurResult step = solve_normal_equations(eq, lambda);
      if (!step.ok) {
        lambda *= 10.0;
        if (lambda > kLambdaMax) break;
        continue;
      }

      double step_norm =
          step.delta_camera.size() > 0
              ? step.delta_camera.lpNorm<Eigen::Infinity>()
              : 0.0;
      for (const auto& dl : step.delta_landmarks) {
        step_norm = std::max(step_norm, dl.lpNorm<Eigen::Infinity>());
      }

      Problem candidate = prob;
      apply_step(candidate, layout, step);
      const double new_cost = evaluate_cost(candidate, config);

      if (std::isfinite(new_cost) && new_cost < cost) {
        prob = std::move(candidate);
        const double decrease = (cost - new_cost) / std::max(cost, 1e-300);
        cost = new_cost;
        lambda = std::max(lambda / 10.0, kLambdaMin);

        eq = assemble(prob, config, layout);
        if (!eq.finite) {
          report.status = SolveStatus::kDiverged;
          break;
        }
        if (gradient_norm() < config.gradient_tolerance ||
            decrease < config.cost_relative_tolerance) {
          report.status = SolveStatus::kConverged;
          break;
        }
      } else {
        if (step_norm < kStepTolerance) {
          // The proposed update is below resolution; nothing left to gain.
          report.status = SolveStatus::kConverged;
          break;
        }
        lambda *= 10.0;
        if (lambda > kLambdaMax) break;  // stalled at the numerical floor
      }
    }
  }

  report.final_cost = cost;
  report.singular_blocks = detect_singular_blocks(eq, layout);
  if (!report.singular_blocks.empty()) {
    spdlog::warn("normal equations are singular in: {}",
                 fmt::join(report.singular_blocks, ", "));
  }
  return report;
}

GateResult gate_outliers(Problem& prob, const Thresholds& thresholds) {
  GateResult result;
  for (auto& o : prob.camera_observations) {
    if (o.weight == 0.0) continue;
    const Pose world_to_camera = inverse(prob.poses[o.camera]);
    const Eigen::Vector3d x =
        transform_point(prob.landmarks[o.landmark].position, world_to_camera);
    bool gate = false;
    if (x.z() <= kMinProjectionDepth) {
      gate = true;
    } else {
      const Eigen::Vector2d pixel = project_point(x, prob.intrinsics);
      const double reproj = (pixel - o.pixel).norm();
      const double depth_err =
          std::abs(depth_of(x, prob.depth_mode) - o.depth);
      gate = reproj > thresholds.reprojection_px ||
             depth_err > thresholds.depth_m;
    }
    if (gate) {
      o.weight = 0.0;
      ++result.camera_gated;
    }
  }
  for (auto& o : prob.lidar_observations) {
    if (o.weight == 0.0) continue;
    const Pose rel = relative_cloud_transform(
        prob.poses[o.target], prob.poses[o.source], prob.extrinsic);
    const double err =
        std::abs(o.normal.dot(transform_point(o.point, rel) - o.neighbor));
    if (err > thresholds.lidar_m) {
      o.weight = 0.0;
      ++result.lidar_gated;
    }
  }

  const bool any_active =
      std::any_of(prob.camera_observations.begin(),
                  prob.camera_observations.end(),
                  [](const auto& o) { return o.weight > 0.0; }) ||
      std::any_of(prob.lidar_observations.begin(),
                  prob.lidar_observations.end(),
                  [](const auto& o) { return o.weight > 0.0; });
  if (!any_active) {
    throw AllObservationsGated(
        "every observation was gated; thresholds or data are misconfigured");
  }
  return result;
}

SolveReport solve_joint(Problem& prob, const SolverConfig& config) {
  const int rounds = std::max(1, config.reassociation_rounds);
  SolveReport total;
  std::optional<CorrespondenceContext> context;

  for (int round = 1; round <= rounds; ++round) {
    if (round > 1) {
      if (prob.clouds.empty() || prob.lidar_adjacency.size() == 0) {
        spdlog::warn(
            "no clouds available for re-association; stopping after round {}",
            round - 1);
        break;
      }
      if (!context) {
        CorrespondConfig cc = config.correspond;
        cc.threads = config.threads;
        context.emplace(prob.clouds, cc);
      }
      if (config.resample_keypoints) {
        context->resample(config.correspond.seed + round);
      }
      // Fresh correspondences start un-gated.
      prob.lidar_observations =
          context->extract(prob.lidar_adjacency, prob.poses, prob.extrinsic);
    }

    while (true) {
      const SolveReport pass = optimize(prob, config);
      total.iterations += pass.iterations;
      total.final_cost = pass.final_cost;
      total.status = pass.status;
      total.singular_blocks = pass.singular_blocks;
      if (pass.status == SolveStatus::kDiverged) {
        total.reassociation_rounds = round;
        return total;
      }
      const GateResult gates = gate_outliers(prob, config.thresholds);
      total.camera_outliers += gates.camera_gated;
      total.lidar_outliers += gates.lidar_gated;
      if (gates.camera_gated + gates.lidar_gated == 0) break;
    }
    total.reassociation_rounds = round;
  }
  return total;
}

}  // namespace licam
