#include "licam/observability.hpp"

#include <algorithm>
#include <cmath>

#include "licam/parallel.hpp"

namespace licam {

std::vector<MotionPair> make_motion_pairs(const std::vector<Pose>& poses,
                                          const Pose& extrinsic) {
  std::vector<MotionPair> pairs;
  if (poses.empty()) return pairs;
  const Pose base_inv = inverse(poses.front());
  const Pose e_inv = inverse(extrinsic);
  for (size_t i = 1; i < poses.size(); ++i) {
    MotionPair pair;
    pair.camera_motion = compose(base_inv, poses[i]);
    // LiDAR motion seen from its own frame: T_h = T_e^-1 T_c T_e.
    pair.lidar_motion =
        compose(e_inv, compose(pair.camera_motion, extrinsic));
    pairs.push_back(pair);
  }
  return pairs;
}

UniquenessReport check_uniqueness(const std::vector<MotionPair>& pairs,
                                  double angle_tol_rad) {
  UniquenessReport report;
  if (pairs.size() < 2) {
    report.reasons.push_back("fewer than 2 motion pairs");
  }

  // Axes of pairs with a usable rotation.
  std::vector<Eigen::Vector3d> axes;
  for (const auto& pair : pairs) {
    const Eigen::Vector3d rotvec = quaternion_log(pair.camera_motion.rotation);
    const double angle = rotvec.norm();
    if (angle > angle_tol_rad) {
      axes.push_back(rotvec / angle);
    }
  }

  if (pairs.size() >= 2 && axes.size() < 2) {
    report.reasons.push_back(
        "fewer than 2 motion pairs with a non-negligible rotation");
  } else if (axes.size() >= 2) {
    double max_angle = 0.0;
    for (size_t a = 0; a < axes.size(); ++a) {
      for (size_t b = a + 1; b < axes.size(); ++b) {
        // Axes compared as lines; |dot| folds antiparallel onto parallel.
        const double c = std::clamp(std::abs(axes[a].dot(axes[b])), 0.0, 1.0);
        max_angle = std::max(max_angle, std::acos(c));
      }
    }
    if (max_angle <= angle_tol_rad) {
      report.reasons.push_back("rotation axes are colinear");
    }
  }

  report.unique = report.reasons.empty();
  return report;
}

const char* to_string(SweepDimension dim) {
  switch (dim) {
    case SweepDimension::kX:
      return "x";
    case SweepDimension::kY:
      return "y";
    case SweepDimension::kZ:
      return "z";
    case SweepDimension::kRoll:
      return "roll";
    case SweepDimension::kPitch:
      return "pitch";
    case SweepDimension::kYaw:
      return "yaw";
  }
  return "?";
}

bool is_rotation(SweepDimension dim) {
  return dim == SweepDimension::kRoll || dim == SweepDimension::kPitch ||
         dim == SweepDimension::kYaw;
}

std::vector<SweepDimension> all_sweep_dimensions() {
  return {SweepDimension::kX,    SweepDimension::kY,     SweepDimension::kZ,
          SweepDimension::kRoll, SweepDimension::kPitch, SweepDimension::kYaw};
}

namespace {

Pose perturbed_extrinsic(const Pose& extrinsic, SweepDimension dim,
                         double offset) {
  Pose out = extrinsic;
  switch (dim) {
    case SweepDimension::kX:
      out.translation.x() += offset;
      break;
    case SweepDimension::kY:
      out.translation.y() += offset;
      break;
    case SweepDimension::kZ:
      out.translation.z() += offset;
      break;
    case SweepDimension::kRoll:
      out.rotation =
          (quaternion_exp(Eigen::Vector3d(offset, 0, 0)) * out.rotation)
              .normalized();
      break;
    case SweepDimension::kPitch:
      out.rotation =
          (quaternion_exp(Eigen::Vector3d(0, offset, 0)) * out.rotation)
              .normalized();
      break;
    case SweepDimension::kYaw:
      out.rotation =
          (quaternion_exp(Eigen::Vector3d(0, 0, offset)) * out.rotation)
              .normalized();
      break;
  }
  return out;
}

}  // namespace

SweepResult sweep_extrinsic(const Problem& prob, SweepDimension dimension,
                            double half_range, int steps, int threads) {
  if (steps < 3 || steps % 2 == 0) {
    throw ConfigError("sweep steps must be odd and >= 3");
  }
  SweepResult result;
  result.dimension = dimension;
  result.offsets.resize(steps);
  result.costs.resize(steps);
  const double step = 2.0 * half_range / (steps - 1);
  for (int s = 0; s < steps; ++s) {
    result.offsets[s] = -half_range + s * step;
  }
  // Ensure the middle sample is exactly zero.
  result.offsets[steps / 2] = 0.0;

  // Camera residuals do not involve the extrinsic; evaluate them once so
  // the curve varies only through the LiDAR term.
  const double cam = camera_cost(prob);
  parallel_for(steps, threads, [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      const Pose te = result.offsets[s] == 0.0
                          ? prob.extrinsic
                          : perturbed_extrinsic(prob.extrinsic, dimension,
                                                result.offsets[s]);
      result.costs[s] = cam + lidar_cost(prob, te);
    }
  });
  return result;
}

std::vector<FlatnessEntry> flatness_report(
    const std::vector<SweepResult>& sweeps, double rel_tol, double eps) {
  std::vector<FlatnessEntry> entries;
  for (const auto& sweep : sweeps) {
    FlatnessEntry entry;
    entry.dimension = sweep.dimension;
    const auto [min_it, max_it] =
        std::minmax_element(sweep.costs.begin(), sweep.costs.end());
    const double zero_cost = sweep.costs[sweep.costs.size() / 2];
    entry.relative_variation =
        (*max_it - *min_it) / std::max(zero_cost, eps);
    entry.flat = entry.relative_variation < rel_tol;
    entries.push_back(entry);
  }
  return entries;
}

}  // namespace licam
