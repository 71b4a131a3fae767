#include "licam/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "licam/solver.hpp"

namespace licam {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 of the combined value
  std::uint64_t z = seed + tag * 0x9E3779B97F4A7C15ull + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// -- surfaces -----------------------------------------------------------------

namespace {

// Orthonormal in-plane basis for a unit normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(
    const Eigen::Vector3d& n) {
  const Eigen::Vector3d ref =
      std::abs(n.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d e1 = n.cross(ref).normalized();
  const Eigen::Vector3d e2 = n.cross(e1).normalized();
  return {e1, e2};
}

std::optional<Surface::Hit> raycast_rectangle(
    const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
    const Eigen::Vector3d& center, const Eigen::Vector3d& normal,
    const Eigen::Vector3d& e1, const Eigen::Vector3d& e2,
    const Eigen::Vector2d& extent) {
  const double denom = dir.dot(normal);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (center - origin).dot(normal) / denom;
  if (t <= 1e-9) return std::nullopt;
  const Eigen::Vector3d hit = origin + t * dir;
  const Eigen::Vector3d d = hit - center;
  if (std::abs(d.dot(e1)) > 0.5 * extent.x() ||
      std::abs(d.dot(e2)) > 0.5 * extent.y()) {
    return std::nullopt;
  }
  return Surface::Hit{t, normal};
}

}  // namespace

Surface Surface::MakePlane(const Eigen::Vector3d& center,
                           const Eigen::Vector3d& normal,
                           const Eigen::Vector2d& extent) {
  Surface s;
  s.type = Type::kPlane;
  s.center = center;
  s.normal = normal.normalized();
  s.extent = extent;
  std::tie(s.basis_u, s.basis_v) = plane_basis(s.normal);
  return s;
}

Surface Surface::MakeBox(const Eigen::Vector3d& center,
                         const Eigen::Vector3d& size,
                         const Eigen::Quaterniond& rotation) {
  Surface s;
  s.type = Type::kBox;
  s.center = center;
  s.size = size;
  s.rotation = rotation.normalized();
  return s;
}

Surface Surface::MakeCylinder(const Eigen::Vector3d& center,
                              const Eigen::Vector3d& axis, double radius,
                              double height) {
  Surface s;
  s.type = Type::kCylinder;
  s.center = center;
  s.axis = axis.normalized();
  s.radius = radius;
  s.height = height;
  std::tie(s.basis_u, s.basis_v) = plane_basis(s.axis);
  return s;
}

double Surface::area() const {
  switch (type) {
    case Type::kPlane:
      return extent.x() * extent.y();
    case Type::kBox:
      return 2.0 * (size.x() * size.y() + size.y() * size.z() +
                    size.z() * size.x());
    case Type::kCylinder:
      return 2.0 * M_PI * radius * height;
  }
  return 0.0;
}

Surface::Sample Surface::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (type) {
    case Type::kPlane: {
      const double u = (unit(rng) - 0.5) * extent.x();
      const double v = (unit(rng) - 0.5) * extent.y();
      return {center + u * basis_u + v * basis_v, normal};
    }
    case Type::kBox: {
      // Pick a face proportionally to its area, then sample on it.
      const double ax = size.y() * size.z();
      const double ay = size.z() * size.x();
      const double az = size.x() * size.y();
      const double pick = unit(rng) * 2.0 * (ax + ay + az);
      int axis;
      double acc_ax = 2.0 * ax, acc_ay = acc_ax + 2.0 * ay;
      if (pick < acc_ax) {
        axis = 0;
      } else if (pick < acc_ay) {
        axis = 1;
      } else {
        axis = 2;
      }
      const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
      Eigen::Vector3d local;
      local[axis] = side * 0.5 * size[axis];
      const int u_axis = (axis + 1) % 3;
      const int v_axis = (axis + 2) % 3;
      local[u_axis] = (unit(rng) - 0.5) * size[u_axis];
      local[v_axis] = (unit(rng) - 0.5) * size[v_axis];
      Eigen::Vector3d n_local = Eigen::Vector3d::Zero();
      n_local[axis] = side;
      return {rotation * local + center, rotation * n_local};
    }
    case Type::kCylinder: {
      const double phi = unit(rng) * 2.0 * M_PI;
      const double h = (unit(rng) - 0.5) * height;
      const Eigen::Vector3d radial =
          std::cos(phi) * basis_u + std::sin(phi) * basis_v;
      return {center + radius * radial + h * axis, radial};
    }
  }
  return {center, normal};
}

std::optional<Surface::Hit> Surface::raycast(const Eigen::Vector3d& origin,
                                             const Eigen::Vector3d& dir) const {
  switch (type) {
    case Type::kPlane:
      return raycast_rectangle(origin, dir, center, normal, basis_u, basis_v,
                               extent);
    case Type::kBox: {
      std::optional<Hit> best;
      for (int axis = 0; axis < 3; ++axis) {
        for (double side : {-1.0, 1.0}) {
          Eigen::Vector3d n_local = Eigen::Vector3d::Zero();
          n_local[axis] = side;
          const Eigen::Vector3d n_world = rotation * n_local;
          const Eigen::Vector3d face_center =
              center + n_world * (0.5 * size[axis]);
          const int u_axis = (axis + 1) % 3;
          const int v_axis = (axis + 2) % 3;
          // rectangle extents in the face plane
          const Eigen::Vector3d eu = rotation * Eigen::Vector3d::Unit(u_axis);
          const Eigen::Vector3d ev = rotation * Eigen::Vector3d::Unit(v_axis);
          const double denom = dir.dot(n_world);
          if (std::abs(denom) < 1e-12) continue;
          const double t = (face_center - origin).dot(n_world) / denom;
          if (t <= 1e-9) continue;
          const Eigen::Vector3d d = origin + t * dir - face_center;
          if (std::abs(d.dot(eu)) > 0.5 * size[u_axis] ||
              std::abs(d.dot(ev)) > 0.5 * size[v_axis]) {
            continue;
          }
          if (!best || t < best->t) best = Hit{t, n_world};
        }
      }
      return best;
    }
    case Type::kCylinder: {
      // Solve |(o + t d) - axis component - center|^2 = r^2 radially.
      const Eigen::Vector3d oc = origin - center;
      const Eigen::Vector3d d_r = dir - axis * dir.dot(axis);
      const Eigen::Vector3d o_r = oc - axis * oc.dot(axis);
      const double a = d_r.squaredNorm();
      if (a < 1e-15) return std::nullopt;
      const double b = 2.0 * o_r.dot(d_r);
      const double c = o_r.squaredNorm() - radius * radius;
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) return std::nullopt;
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t <= 1e-9) continue;
        const Eigen::Vector3d hit = origin + t * dir;
        const double h = (hit - center).dot(axis);
        if (std::abs(h) > 0.5 * height) continue;
        const Eigen::Vector3d radial = (hit - center - h * axis) / radius;
        return Hit{t, radial};
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// -- scene generation ---------------------------------------------------------

void SceneSpec::validate() const {
  if (stations < 1) throw InvalidSpec("stations must be >= 1");
  if (landmarks < 0) throw InvalidSpec("landmarks must be >= 0");
  if (descriptor_length < 1) throw InvalidSpec("descriptor_length must be >= 1");
  if (surfaces.empty()) throw InvalidSpec("at least one surface is required");
  if (noise.pixel_sigma < 0.0 || noise.depth_sigma_multiplier < 0.0 ||
      noise.range_sigma < 0.0) {
    throw InvalidSpec("noise sigmas must be >= 0");
  }
  auto fraction_ok = [](double f) { return f >= 0.0 && f < 1.0; };
  if (!fraction_ok(outliers.camera_fraction) ||
      !fraction_ok(outliers.lidar_fraction)) {
    throw InvalidSpec("outlier fractions must be in [0, 1)");
  }
  if (generator.type == PoseGenerator::Type::kCustom &&
      static_cast<int>(generator.custom.size()) != stations) {
    throw InvalidSpec("custom generator must supply one pose per station");
  }
  camera.validate();
  if (image_width < 2 || image_height < 2) {
    throw InvalidSpec("image size must be at least 2x2");
  }
}

namespace {

// Camera looking from `eye` toward `target`: z forward, y down.
Eigen::Quaterniond look_at(const Eigen::Vector3d& eye,
                           const Eigen::Vector3d& target,
                           const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ()) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Eigen::Vector3d::UnitX());
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Eigen::Quaterniond(r).normalized();
}

std::vector<Pose> generate_poses(const SceneSpec& spec) {
  const PoseGenerator& gen = spec.generator;
  std::vector<Pose> poses;
  switch (gen.type) {
    case PoseGenerator::Type::kOrbit: {
      const double sweep = gen.orbit_sweep_deg * M_PI / 180.0;
      const bool full_circle = gen.orbit_sweep_deg >= 359.0;
      const double step =
          spec.stations > 1
              ? sweep / (full_circle ? spec.stations : spec.stations - 1)
              : 0.0;
      for (int i = 0; i < spec.stations; ++i) {
        const double phi = i * step;
        const Eigen::Vector3d eye =
            gen.orbit_center + Eigen::Vector3d(gen.orbit_radius * std::cos(phi),
                                               gen.orbit_radius * std::sin(phi),
                                               gen.orbit_height);
        Eigen::Quaterniond q = look_at(eye, gen.orbit_center);
        if (gen.orbit_tilt_deg != 0.0) {
          // Alternating pitch about the camera x axis adds a second
          // rotation axis to the motion set.
          const double tilt = gen.orbit_tilt_deg * M_PI / 180.0 *
                              (i % 2 == 0 ? 1.0 : -1.0);
          q = (q * Eigen::Quaterniond(Eigen::AngleAxisd(
                       tilt, Eigen::Vector3d::UnitX())))
                  .normalized();
        }
        poses.push_back(Pose(q, eye));
      }
      break;
    }
    case PoseGenerator::Type::kLine: {
      const Eigen::Quaterniond q = look_at(gen.line_start, gen.line_look_at);
      for (int i = 0; i < spec.stations; ++i) {
        poses.push_back(Pose(q, gen.line_start + i * gen.line_step));
      }
      break;
    }
    case PoseGenerator::Type::kCustom:
      poses = gen.custom;
      break;
  }
  return poses;
}

Adjacency make_lidar_adjacency(const SceneSpec& spec) {
  Adjacency a(spec.stations);
  const bool circular = spec.generator.type == PoseGenerator::Type::kOrbit &&
                        spec.generator.orbit_sweep_deg >= 359.0;
  for (int i = 0; i < spec.stations; ++i) {
    for (int j = i + 1; j < spec.stations; ++j) {
      int dist = j - i;
      if (circular) dist = std::min(dist, spec.stations - dist);
      if (dist <= spec.lidar_adjacency_window) a.set(i, j);
    }
  }
  return a;
}

// Distinct indices, floor(fraction * n) of them.
std::vector<int> pick_fraction(int n, double fraction, std::mt19937_64& rng) {
  const int count = static_cast<int>(fraction * n);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> picked;
  picked.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
  return picked;
}

}  // namespace

Pose perturb_pose(const Pose& pose, double translation_sigma,
                  double rotation_sigma_rad, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d dt(gauss(rng), gauss(rng), gauss(rng));
  dt *= translation_sigma;
  Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
  while (axis.norm() < 1e-12) {
    axis = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
  }
  axis.normalize();
  const double angle = gauss(rng) * rotation_sigma_rad;
  Pose out;
  out.rotation = (quaternion_exp(axis * angle) * pose.rotation).normalized();
  out.translation = pose.translation + dt;
  return out;
}

Pose perturb_pose(const Pose& pose, double translation_sigma,
                  double rotation_sigma_rad, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return perturb_pose(pose, translation_sigma, rotation_sigma_rad, rng);
}

SynthOutput generate(const SceneSpec& spec) {
  spec.validate();
  SynthOutput out;

  // True poses in generator coordinates, then shifted by the world
  // transform. All observations are invariant to that shift; only the
  // normalized ground truth below is reported.
  std::vector<Pose> world_poses = generate_poses(spec);
  std::vector<Surface> surfaces = spec.surfaces;
  for (auto& pose : world_poses) {
    pose = compose(spec.world_transform, pose);
  }
  const Pose& G = spec.world_transform;
  for (auto& s : surfaces) {
    s.center = transform_point(s.center, G);
    s.normal = G.rotation * s.normal;
    s.axis = G.rotation * s.axis;
    s.rotation = (G.rotation * s.rotation).normalized();
    s.basis_u = G.rotation * s.basis_u;
    s.basis_v = G.rotation * s.basis_v;
  }

  const int n = spec.stations;
  const Pose& te = spec.extrinsic;

  // Surface picker weighted by area.
  std::vector<double> weights;
  for (const auto& s : surfaces) weights.push_back(s.area());

  // Landmarks with descriptors and anchor stations, restricted to the
  // configured landmark surfaces.
  std::vector<int> lm_surfaces = spec.landmark_surfaces;
  if (lm_surfaces.empty()) {
    lm_surfaces.resize(surfaces.size());
    std::iota(lm_surfaces.begin(), lm_surfaces.end(), 0);
  }
  std::vector<double> lm_weights;
  for (int s : lm_surfaces) {
    if (s < 0 || s >= static_cast<int>(surfaces.size())) {
      throw InvalidSpec("landmark_surfaces index out of range");
    }
    lm_weights.push_back(surfaces[s].area());
  }
  std::mt19937_64 lm_rng(sub_seed(spec.seed, 1));
  std::discrete_distribution<int> pick_surface(lm_weights.begin(),
                                               lm_weights.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  struct GenLandmark {
    Eigen::Vector3d position;
    Eigen::Vector3d normal;
    Eigen::VectorXd descriptor;
    int anchor = 0;
  };
  std::vector<GenLandmark> gen_landmarks;
  gen_landmarks.reserve(spec.landmarks);
  for (int k = 0; k < spec.landmarks; ++k) {
    const Surface& s = surfaces[lm_surfaces[pick_surface(lm_rng)]];
    const auto sample = s.sample(lm_rng);
    GenLandmark lm;
    lm.position = sample.point;
    lm.normal = sample.normal;
    lm.descriptor = Eigen::VectorXd::NullaryExpr(
        spec.descriptor_length, [&](Eigen::Index) { return gauss(lm_rng); });
    lm.descriptor.normalize();
    gen_landmarks.push_back(std::move(lm));
  }
  // Anchor = station with the smallest viewing distance.
  for (auto& lm : gen_landmarks) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double d = (lm.position - world_poses[i].translation).norm();
      if (d < best) {
        best = d;
        lm.anchor = i;
      }
    }
  }

  const bool circular = spec.generator.type == PoseGenerator::Type::kOrbit &&
                        spec.generator.orbit_sweep_deg >= 359.0;
  auto station_distance = [&](int a, int b) {
    int d = std::abs(a - b);
    if (circular) d = std::min(d, n - d);
    return d;
  };

  // Features: true projections plus noise, FOV and frontal gating.
  out.features.resize(n);
  out.truth.feature_landmark.resize(n);
  out.truth.feature_outliers.resize(n);
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(sub_seed(spec.seed, 100 + i));
    std::normal_distribution<double> gauss_i(0.0, 1.0);
    const Pose world_to_camera = inverse(world_poses[i]);
    for (size_t k = 0; k < gen_landmarks.size(); ++k) {
      const GenLandmark& lm = gen_landmarks[k];
      if (spec.visibility_window > 0 &&
          station_distance(static_cast<int>(lm.anchor), i) >
              spec.visibility_window) {
        continue;
      }
      const Eigen::Vector3d x = transform_point(lm.position, world_to_camera);
      if (x.z() <= 0.1) continue;
      // Landmarks sit on opaque surfaces; require the camera on the normal
      // side.
      if ((lm.position - world_poses[i].translation).dot(lm.normal) >= 0.0) {
        continue;
      }
      Eigen::Vector2d pixel;
      try {
        pixel = project_point(x, spec.camera);
      } catch (const NonPositiveDepth&) {
        continue;
      }
      if (pixel.x() < 0.0 || pixel.x() >= spec.image_width ||
          pixel.y() < 0.0 || pixel.y() >= spec.image_height) {
        continue;
      }

      Feature f;
      f.station = i;
      f.pixel = pixel + Eigen::Vector2d(gauss_i(rng), gauss_i(rng)) *
                            spec.noise.pixel_sigma;
      const double range = x.norm();
      const double depth_sigma = spec.noise.depth_sigma_multiplier * range *
                                 range /
                                 (spec.camera.baseline * spec.camera.fx);
      f.depth = range + gauss_i(rng) * depth_sigma;
      if (f.depth <= 0.0) continue;  // extreme noise draw; drop, stays rare
      f.descriptor = lm.descriptor;
      if (spec.descriptor_noise > 0.0) {
        for (Eigen::Index d = 0; d < f.descriptor.size(); ++d) {
          f.descriptor[d] += gauss_i(rng) * spec.descriptor_noise;
        }
      }
      out.features[i].push_back(std::move(f));
      out.truth.feature_landmark[i].push_back(static_cast<int>(k));
    }

    // Feature-level outliers: features stay matchable but carry corrupted
    // pixel and depth values.
    std::mt19937_64 orow(sub_seed(spec.seed, 200 + i));
    const auto corrupted = pick_fraction(
        static_cast<int>(out.features[i].size()), spec.outliers.camera_fraction,
        orow);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    for (int idx : corrupted) {
      const double phi = angle(orow);
      out.features[i][idx].pixel +=
          Eigen::Vector2d(std::cos(phi), std::sin(phi)) *
          spec.outliers.camera_pixel_magnitude;
      out.features[i][idx].depth +=
          (orow() % 2 == 0 ? 1.0 : -1.0) * spec.outliers.camera_depth_magnitude;
      out.truth.feature_outliers[i].push_back(idx);
    }
    std::sort(out.truth.feature_outliers[i].begin(),
              out.truth.feature_outliers[i].end());
  }

  // Clouds: fresh surface samples per station, mapped into the LiDAR frame,
  // analytic normals oriented toward the sensor.
  out.clouds.resize(n);
  out.truth.cloud_outliers.resize(n);
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(sub_seed(spec.seed, 300 + i));
    std::normal_distribution<double> gauss_c(0.0, 1.0);
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    const Pose world_to_lidar = inverse(compose(world_poses[i], te));
    PointCloud& cloud = out.clouds[i];
    cloud.points.reserve(spec.cloud_points);
    cloud.normals.reserve(spec.cloud_points);
    for (int p = 0; p < spec.cloud_points; ++p) {
      const auto sample = surfaces[pick(rng)].sample(rng);
      Eigen::Vector3d point = transform_point(sample.point, world_to_lidar);
      Eigen::Vector3d normal = world_to_lidar.rotation * sample.normal;
      if (spec.noise.range_sigma > 0.0) {
        const double r = point.norm();
        if (r > 1e-9) {
          point += (point / r) * (gauss_c(rng) * spec.noise.range_sigma);
        }
      }
      if (normal.dot(-point) < 0.0) normal = -normal;
      cloud.points.push_back(point);
      cloud.normals.push_back(normal);
    }
    // Curvatures are left unset: analytic primitives carry no meaningful
    // curvature at surface junctions, so consumers estimate them instead.

    std::mt19937_64 orow(sub_seed(spec.seed, 400 + i));
    const auto corrupted = pick_fraction(static_cast<int>(cloud.size()),
                                         spec.outliers.lidar_fraction, orow);
    for (int idx : corrupted) {
      cloud.points[idx] += cloud.normals[idx] * spec.outliers.lidar_magnitude;
      out.truth.cloud_outliers[i].push_back(idx);
    }
    std::sort(out.truth.cloud_outliers[i].begin(),
              out.truth.cloud_outliers[i].end());
  }

  // Rough pairwise cloud transforms: truth composed with bounded noise.
  out.lidar_adjacency = make_lidar_adjacency(spec);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!out.lidar_adjacency.at(i, j)) continue;
      const Pose truth =
          relative_cloud_transform(world_poses[i], world_poses[j], te);
      std::mt19937_64 rng(
          sub_seed(spec.seed, 500 + static_cast<std::uint64_t>(i) * n + j));
      out.rough_transforms.push_back(RoughTransform{
          i, j,
          perturb_pose(truth, spec.rough_translation_sigma,
                       spec.rough_rotation_sigma_deg * M_PI / 180.0, rng)});
    }
  }

  // Optional stereo depth maps with labeled holes and outliers.
  if (spec.depth_maps.enable) {
    out.truth.depth_holes.resize(n);
    out.truth.depth_outliers.resize(n);
    for (int i = 0; i < n; ++i) {
      std::mt19937_64 rng(sub_seed(spec.seed, 600 + i));
      std::normal_distribution<double> gauss_d(0.0, 1.0);
      DepthMap map(spec.image_width, spec.image_height);
      const Pose world_to_camera = inverse(world_poses[i]);
      for (int row = 0; row < spec.image_height; ++row) {
        for (int col = 0; col < spec.image_width; ++col) {
          const Eigen::Vector3d dir_cam((col - spec.camera.cx) / spec.camera.fx,
                                        (row - spec.camera.cy) / spec.camera.fy,
                                        1.0);
          const Eigen::Vector3d dir_world =
              (world_poses[i].rotation * dir_cam).normalized();
          double best_t = std::numeric_limits<double>::infinity();
          for (const auto& s : surfaces) {
            const auto hit = s.raycast(world_poses[i].translation, dir_world);
            if (hit && hit->t < best_t) best_t = hit->t;
          }
          if (!std::isfinite(best_t)) continue;
          const Eigen::Vector3d hit_cam = transform_point(
              world_poses[i].translation + best_t * dir_world,
              world_to_camera);
          if (hit_cam.z() <= 0.0) continue;
          map.at(col, row) = static_cast<float>(
              hit_cam.z() + gauss_d(rng) * spec.depth_maps.noise_sigma);
        }
      }

      // Outliers first, then holes, over the valid pixels.
      std::vector<int> valid_pixels;
      for (int px = 0; px < spec.image_width * spec.image_height; ++px) {
        if (std::isfinite(map.depth[px])) valid_pixels.push_back(px);
      }
      std::mt19937_64 orow(sub_seed(spec.seed, 700 + i));
      auto outlier_picks =
          pick_fraction(static_cast<int>(valid_pixels.size()),
                        spec.depth_maps.outlier_fraction, orow);
      for (int pick : outlier_picks) {
        const int px = valid_pixels[pick];
        map.depth[px] += static_cast<float>(
            (orow() % 2 == 0 ? 1.0 : -1.0) * spec.depth_maps.outlier_magnitude);
        out.truth.depth_outliers[i].push_back(px);
      }
      std::sort(out.truth.depth_outliers[i].begin(),
                out.truth.depth_outliers[i].end());

      auto hole_picks = pick_fraction(static_cast<int>(valid_pixels.size()),
                                      spec.depth_maps.hole_fraction, orow);
      for (int pick : hole_picks) {
        const int px = valid_pixels[pick];
        if (std::binary_search(out.truth.depth_outliers[i].begin(),
                               out.truth.depth_outliers[i].end(), px)) {
          continue;  // don't turn an injected outlier into a hole
        }
        map.depth[px] = std::numeric_limits<float>::quiet_NaN();
        out.truth.depth_holes[i].push_back(px);
      }
      std::sort(out.truth.depth_holes[i].begin(),
                out.truth.depth_holes[i].end());
      out.stereo_depth_maps.push_back(std::move(map));
    }
  }

  // Ground truth, normalized so station 0 is the identity.
  const Pose norm = inverse(world_poses[0]);
  {
    std::mt19937_64 rng(sub_seed(spec.seed, 800));
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    out.truth_cloud.points.reserve(spec.cloud_points);
    out.truth_cloud.normals.reserve(spec.cloud_points);
    for (int p = 0; p < spec.cloud_points; ++p) {
      const auto sample = surfaces[pick(rng)].sample(rng);
      out.truth_cloud.points.push_back(transform_point(sample.point, norm));
      out.truth_cloud.normals.push_back(norm.rotation * sample.normal);
    }
  }
  out.truth.poses.reserve(n);
  for (const auto& pose : world_poses) {
    out.truth.poses.push_back(compose(norm, pose));
  }
  out.truth.extrinsic = te;
  out.truth.landmarks.reserve(gen_landmarks.size());
  for (size_t k = 0; k < gen_landmarks.size(); ++k) {
    out.truth.landmarks.push_back(Landmark{
        static_cast<int>(k),
        transform_point(gen_landmarks[k].position, norm)});
  }
  return out;
}

InjectedOutliers inject_outliers(std::vector<CameraObservation>& camera_obs,
                                 std::vector<LidarObservation>& lidar_obs,
                                 const OutlierSpec& spec, std::uint64_t seed) {
  InjectedOutliers labels;
  std::mt19937_64 rng(sub_seed(seed, 1));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  labels.camera_indices = pick_fraction(static_cast<int>(camera_obs.size()),
                                        spec.camera_fraction, rng);
  std::sort(labels.camera_indices.begin(), labels.camera_indices.end());
  for (int idx : labels.camera_indices) {
    const double phi = angle(rng);
    camera_obs[idx].pixel += Eigen::Vector2d(std::cos(phi), std::sin(phi)) *
                             spec.camera_pixel_magnitude;
    camera_obs[idx].depth +=
        (rng() % 2 == 0 ? 1.0 : -1.0) * spec.camera_depth_magnitude;
  }

  std::mt19937_64 rng_l(sub_seed(seed, 2));
  labels.lidar_indices = pick_fraction(static_cast<int>(lidar_obs.size()),
                                       spec.lidar_fraction, rng_l);
  std::sort(labels.lidar_indices.begin(), labels.lidar_indices.end());
  for (int idx : labels.lidar_indices) {
    // Shifting the neighbor along its normal changes the point-to-plane
    // error by exactly the magnitude.
    const double sign = rng_l() % 2 == 0 ? 1.0 : -1.0;
    lidar_obs[idx].neighbor -=
        sign * spec.lidar_magnitude * lidar_obs[idx].normal;
  }
  return labels;
}

}  // namespace licam
