#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "licam/errors.hpp"

namespace licam {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rigid transform on SE(3), stored as unit quaternion + translation.
///
/// Conventions used throughout the project:
///  - A camera pose T_i maps camera-frame points into the world frame
///    (camera-to-world). The world frame is the camera frame of station 0,
///    so T_0 is always the identity.
///  - The extrinsic transform T_e maps LiDAR-frame points into the camera
///    frame of the same station (LiDAR-to-camera).
///  - Camera frame axes: z forward (optical axis), y downward.
struct Pose {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : rotation(q.normalized()), translation(t) {}

  static Pose Identity() { return Pose(); }

  Eigen::Matrix3d rotationMatrix() const { return rotation.toRotationMatrix(); }

  /// 4x4 homogeneous matrix form (row-major math convention, column vectors).
  Eigen::Matrix4d matrix() const;

  /// Applies the transform to a point: R*p + t.
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

/// compose(a, b): the transform that applies b first and then a.
Pose compose(const Pose& a, const Pose& b);

/// Inverse transform; compose(P, inverse(P)) is the identity.
Pose inverse(const Pose& p);

/// R*p + t.
Eigen::Vector3d transform_point(const Eigen::Vector3d& p, const Pose& T);

/// Quaternion for a rotation vector (axis * angle), safe at zero angle.
Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotvec);

/// Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi].
Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q);

/// Local update used by the optimizer: 3 rotation parameters applied on the
/// left of the base quaternion, 3 additive translation parameters.
///   T' = (exp(delta[0:3]) * R, t + delta[3:6])
Pose apply_increment(const Pose& base, const Vector6d& delta);

/// Rotation angle of the pose in radians, in [0, pi].
double rotation_angle(const Pose& p);

/// Geodesic distance pair (rotation angle [rad], translation norm [m])
/// between two poses, i.e. of inverse(a) * b.
struct PoseError {
  double rotation_rad = 0.0;
  double translation_m = 0.0;
};
PoseError pose_error(const Pose& a, const Pose& b);

/// Pinhole camera intrinsics of the rectified left camera plus the stereo
/// baseline used by the depth uncertainty model.
struct CameraIntrinsics {
  double fx = 0.0;  // focal length [px]
  double fy = 0.0;
  double cx = 0.0;  // principal point [px]
  double cy = 0.0;
  double baseline = 0.0;  // stereo baseline [m]

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !(baseline > 0.0)) {
      throw InvalidSpec("camera intrinsics require fx, fy, baseline > 0");
    }
  }
};

/// A 3D point observed in at least two images.
struct Landmark {
  int id = -1;
  Eigen::Vector3d position{0.0, 0.0, 0.0};
};

/// Minimum depth along the optical axis accepted by project_point.
inline constexpr double kMinProjectionDepth = 1e-9;

/// Pinhole projection of a camera-frame point.
/// Throws NonPositiveDepth when z <= kMinProjectionDepth.
Eigen::Vector2d project_point(const Eigen::Vector3d& camera_point,
                              const CameraIntrinsics& K);

/// Projects a landmark through pose T (applied directly to the landmark, so
/// T must map world to camera here) and the pinhole model.
Eigen::Vector2d project(const Landmark& l, const Pose& T,
                        const CameraIntrinsics& K);

/// Transform from the source cloud j into the target cloud i, both in their
/// LiDAR frames:  (T_i * T_e)^-1 * (T_j * T_e)  with poses camera-to-world
/// and the extrinsic LiDAR-to-camera.
Pose relative_cloud_transform(const Pose& Ti, const Pose& Tj, const Pose& Te);

/// Interpretation of the scalar depth attached to image features.
enum class DepthMode {
  kRange,   // Euclidean distance from the camera center (default)
  kZDepth,  // z coordinate in the camera frame
};

/// Camera-frame point for a pixel plus depth under the given interpretation.
Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth,
                             const CameraIntrinsics& K, DepthMode mode);

/// Depth of a camera-frame point under the given interpretation.
double depth_of(const Eigen::Vector3d& camera_point, DepthMode mode);

}  // namespace licam
