#pragma once

#include <string>
#include <vector>

#include "licam/solver.hpp"

namespace licam {

/// Paired relative motions of the camera and the LiDAR with respect to the
/// base station, the inputs of the classical hand-eye uniqueness analysis.
struct MotionPair {
  Pose camera_motion;  // T_c
  Pose lidar_motion;   // T_h
};

/// Relative motions of stations 1..N-1 w.r.t. station 0 under the current
/// pose and extrinsic estimates.
std::vector<MotionPair> make_motion_pairs(const std::vector<Pose>& poses,
                                          const Pose& extrinsic);

struct UniquenessReport {
  bool unique = false;
  std::vector<std::string> reasons;  // one entry per failed condition
};

/// Checks the hand-eye uniqueness conditions: at least two motion pairs
/// whose camera rotation axes are not colinear (axes compared as lines, so
/// antiparallel counts as colinear); pairs with rotation angle below
/// angle_tol carry no usable axis and are ignored.
UniquenessReport check_uniqueness(const std::vector<MotionPair>& pairs,
                                  double angle_tol_rad);

enum class SweepDimension { kX, kY, kZ, kRoll, kPitch, kYaw };

const char* to_string(SweepDimension dim);
bool is_rotation(SweepDimension dim);
std::vector<SweepDimension> all_sweep_dimensions();

struct SweepResult {
  SweepDimension dimension = SweepDimension::kX;
  std::vector<double> offsets;  // meters or radians, symmetric about 0
  std::vector<double> costs;
};

/// Cost curve for a single extrinsic dimension: the offset is applied to
/// the converged extrinsic (translation additively, rotation as an
/// axis-angle about the camera axis on the left), the total cost is
/// recorded without re-optimizing anything, and the extrinsic is restored.
/// `steps` must be odd so the zero offset is sampled; the zero sample
/// reproduces the converged cost exactly.
SweepResult sweep_extrinsic(const Problem& prob, SweepDimension dimension,
                            double half_range, int steps, int threads = 1);

struct FlatnessEntry {
  SweepDimension dimension = SweepDimension::kX;
  bool flat = false;
  double relative_variation = 0.0;
};

/// Flags dimensions whose cost curve is flat:
/// (max - min) / max(cost at zero offset, eps) < rel_tol.
std::vector<FlatnessEntry> flatness_report(
    const std::vector<SweepResult>& sweeps, double rel_tol,
    double eps = 1e-12);

}  // namespace licam
