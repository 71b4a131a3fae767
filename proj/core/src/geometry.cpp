#include "licam/geometry.hpp"

#include <cmath>

namespace licam {

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotationMatrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.conjugate();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Eigen::Vector3d transform_point(const Eigen::Vector3d& p, const Pose& T) {
  return T.rotation * p + T.translation;
}

Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    // First order expansion, renormalized.
    Eigen::Quaterniond q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(),
                         0.5 * rotvec.z());
    q.normalize();
    return q;
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
}

Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const double vec_norm = q.vec().norm();
  if (vec_norm < 1e-12) {
    return 2.0 * q.vec();
  }
  const double angle = 2.0 * std::atan2(vec_norm, q.w());
  return (angle / vec_norm) * q.vec();
}

Pose apply_increment(const Pose& base, const Vector6d& delta) {
  Pose out;
  out.rotation = (quaternion_exp(delta.head<3>()) * base.rotation).normalized();
  out.translation = base.translation + delta.tail<3>();
  return out;
}

double rotation_angle(const Pose& p) {
  return quaternion_log(p.rotation).norm();
}

PoseError pose_error(const Pose& a, const Pose& b) {
  const Pose d = compose(inverse(a), b);
  PoseError e;
  e.rotation_rad = rotation_angle(d);
  e.translation_m = d.translation.norm();
  return e;
}

Eigen::Vector2d project_point(const Eigen::Vector3d& camera_point,
                              const CameraIntrinsics& K) {
  const double z = camera_point.z();
  if (z <= kMinProjectionDepth) {
    throw NonPositiveDepth("point at or behind the camera plane, z=" +
                           std::to_string(z));
  }
  return {K.fx * camera_point.x() / z + K.cx,
          K.fy * camera_point.y() / z + K.cy};
}

Eigen::Vector2d project(const Landmark& l, const Pose& T,
                        const CameraIntrinsics& K) {
  return project_point(transform_point(l.position, T), K);
}

Pose relative_cloud_transform(const Pose& Ti, const Pose& Tj, const Pose& Te) {
  // LiDAR pose of a station (LiDAR-to-world) is T_i * T_e; the source-to-
  // target map is the relative transform between the two LiDAR poses.
  return compose(inverse(compose(Ti, Te)), compose(Tj, Te));
}

Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth,
                             const CameraIntrinsics& K, DepthMode mode) {
  Eigen::Vector3d ray((pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy,
                      1.0);
  switch (mode) {
    case DepthMode::kRange:
      return ray * (depth / ray.norm());
    case DepthMode::kZDepth:
      return ray * depth;
  }
  return ray * depth;
}

double depth_of(const Eigen::Vector3d& camera_point, DepthMode mode) {
  return mode == DepthMode::kRange ? camera_point.norm() : camera_point.z();
}

}  // namespace licam
