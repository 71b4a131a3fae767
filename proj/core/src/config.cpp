#include "licam/config.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "licam/io.hpp"

namespace licam {

using nlohmann::json;

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

Pose pose_field(const json& j) {
  try {
    return pose_from_json(j);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid pose: ") + e.what());
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_camera(const json& j, CameraIntrinsics& K, int& width,
                  int& height) {
  K.fx = j.at("fx").get<double>();
  K.fy = j.at("fy").get<double>();
  K.cx = j.at("cx").get<double>();
  K.cy = j.at("cy").get<double>();
  K.baseline = j.at("baseline").get<double>();
  maybe(j, "width", width);
  maybe(j, "height", height);
  K.validate();
}

DepthMode parse_depth_mode(const std::string& s) {
  if (s == "range") return DepthMode::kRange;
  if (s == "z") return DepthMode::kZDepth;
  throw ConfigError("depth_interpretation must be \"range\" or \"z\"");
}

void require_exists(const std::filesystem::path& p, const char* what) {
  if (p.empty()) {
    throw ConfigError(std::string("missing required path: ") + what);
  }
  if (!std::filesystem::exists(p)) {
    throw ConfigError(std::string(what) + " does not exist: " + p.string());
  }
}

}  // namespace

void RunConfig::validate_for(Stage stage) const {
  switch (stage) {
    case Stage::kSolve:
      require_exists(features, "features");
      if (clouds.empty()) throw ConfigError("no cloud paths configured");
      for (const auto& c : clouds) require_exists(c, "cloud");
      require_exists(rough_transforms, "rough_transforms");
      break;
    case Stage::kProbe:
      // Solved state files are checked by the command itself.
      if (output.empty()) throw ConfigError("output directory required");
      break;
    case Stage::kRefine:
      if (clouds.empty()) throw ConfigError("no cloud paths configured");
      for (const auto& c : clouds) require_exists(c, "cloud");
      if (depth_maps.empty()) {
        throw ConfigError("no stereo depth map paths configured");
      }
      for (const auto& d : depth_maps) require_exists(d, "depth map");
      if (depth_maps.size() != clouds.size()) {
        throw ConfigError("depth map count must match cloud count");
      }
      break;
    case Stage::kEval:
      require_exists(truth_cloud, "truth_cloud");
      break;
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  const std::filesystem::path base = path.parent_path();
  RunConfig cfg;

  if (j.contains("features")) {
    cfg.features = resolve(base, j.at("features").get<std::string>());
  }
  if (j.contains("clouds")) {
    for (const auto& c : j.at("clouds")) {
      cfg.clouds.push_back(resolve(base, c.get<std::string>()));
    }
  }
  if (j.contains("rough_transforms")) {
    cfg.rough_transforms =
        resolve(base, j.at("rough_transforms").get<std::string>());
  }
  cfg.output = resolve(base, j.value("output", std::string("out")));
  if (j.contains("depth_maps")) {
    for (const auto& d : j.at("depth_maps")) {
      cfg.depth_maps.push_back(resolve(base, d.get<std::string>()));
    }
  }
  if (j.contains("model")) {
    cfg.model = resolve(base, j.at("model").get<std::string>());
  }
  if (j.contains("truth_cloud")) {
    cfg.truth_cloud = resolve(base, j.at("truth_cloud").get<std::string>());
  }

  parse_camera(j.at("camera"), cfg.camera, cfg.image_width, cfg.image_height);
  if (j.contains("depth_interpretation")) {
    cfg.depth_mode =
        parse_depth_mode(j.at("depth_interpretation").get<std::string>());
  }
  if (j.contains("extrinsic_initial")) {
    cfg.extrinsic_initial = pose_field(j.at("extrinsic_initial"));
  }

  if (j.contains("association")) {
    const json& a = j.at("association");
    maybe(a, "similarity_threshold", cfg.association.similarity_threshold);
    maybe(a, "ratio_threshold", cfg.association.ratio_threshold);
    maybe(a, "cross_check", cfg.association.cross_check);
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    maybe(s, "max_iterations", cfg.solver.max_iterations);
    maybe(s, "cost_relative_tolerance", cfg.solver.cost_relative_tolerance);
    maybe(s, "gradient_tolerance", cfg.solver.gradient_tolerance);
    maybe(s, "initial_lambda", cfg.solver.initial_lambda);
    maybe(s, "reassociation_rounds", cfg.solver.reassociation_rounds);
    maybe(s, "fix_extrinsic", cfg.solver.fix_extrinsic);
    maybe(s, "use_huber", cfg.solver.use_huber);
    maybe(s, "huber_delta", cfg.solver.huber_delta);
    maybe(s, "resample_keypoints", cfg.solver.resample_keypoints);
    maybe(s, "zero_lidar_weights", cfg.zero_lidar_weights);
    if (s.contains("sigmas")) {
      const json& g = s.at("sigmas");
      maybe(g, "pixel", cfg.sigmas.pixel);
      maybe(g, "lidar", cfg.sigmas.lidar);
      maybe(g, "depth_constant", cfg.sigmas.depth_constant);
    }
    if (s.contains("thresholds")) {
      const json& t = s.at("thresholds");
      maybe(t, "reprojection_px", cfg.solver.thresholds.reprojection_px);
      maybe(t, "depth_m", cfg.solver.thresholds.depth_m);
      maybe(t, "lidar_m", cfg.solver.thresholds.lidar_m);
    }
    if (s.contains("correspond")) {
      const json& c = s.at("correspond");
      maybe(c, "max_dist", cfg.solver.correspond.max_dist);
      maybe(c, "keypoints_per_cloud",
            cfg.solver.correspond.keypoints_per_cloud);
      maybe(c, "normal_k", cfg.solver.correspond.normal_k);
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    maybe(s, "half_range_translation", cfg.sweep.half_range_translation);
    maybe(s, "half_range_rotation_deg", cfg.sweep.half_range_rotation_deg);
    maybe(s, "steps", cfg.sweep.steps);
    maybe(s, "rel_tol", cfg.sweep.rel_tol);
  }

  if (j.contains("refine")) {
    const json& r = j.at("refine");
    maybe(r, "max_diff", cfg.refine.max_diff);
    maybe(r, "radius_px", cfg.refine.radius_px);
    maybe(r, "max_curvature", cfg.refine.max_curvature);
    maybe(r, "max_view_angle_deg", cfg.refine.max_view_angle_deg);
    maybe(r, "voxel_size", cfg.refine.voxel_size);
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    maybe(e, "max_dist", cfg.eval.distance.max_dist);
    maybe(e, "bins", cfg.eval.distance.bins);
    maybe(e, "signed", cfg.eval.distance.signed_distance);
    maybe(e, "run_icp", cfg.eval.run_icp);
    if (e.contains("icp")) {
      const json& i = e.at("icp");
      maybe(i, "max_iterations", cfg.eval.icp.max_iterations);
      maybe(i, "tolerance", cfg.eval.icp.tolerance);
      maybe(i, "max_correspondence_dist",
            cfg.eval.icp.max_correspondence_dist);
    }
  }

  maybe(j, "seed", cfg.seed);
  maybe(j, "threads", cfg.threads);
  cfg.solver.correspond.seed = cfg.seed;
  cfg.solver.correspond.threads = cfg.threads;
  cfg.solver.threads = cfg.threads;
  return cfg;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  SceneSpec spec;

  maybe(j, "stations", spec.stations);
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    const std::string type = g.value("type", std::string("orbit"));
    if (type == "orbit") {
      spec.generator.type = PoseGenerator::Type::kOrbit;
      if (g.contains("center")) spec.generator.orbit_center = vec3(g.at("center"));
      maybe(g, "radius", spec.generator.orbit_radius);
      maybe(g, "height", spec.generator.orbit_height);
      maybe(g, "sweep_deg", spec.generator.orbit_sweep_deg);
      maybe(g, "tilt_deg", spec.generator.orbit_tilt_deg);
    } else if (type == "line") {
      spec.generator.type = PoseGenerator::Type::kLine;
      if (g.contains("start")) spec.generator.line_start = vec3(g.at("start"));
      if (g.contains("step")) spec.generator.line_step = vec3(g.at("step"));
      if (g.contains("look_at")) {
        spec.generator.line_look_at = vec3(g.at("look_at"));
      }
    } else if (type == "custom") {
      spec.generator.type = PoseGenerator::Type::kCustom;
      for (const auto& p : g.at("poses")) {
        spec.generator.custom.push_back(pose_field(p));
      }
    } else {
      throw ConfigError("unknown generator type: " + type);
    }
  }

  if (j.contains("extrinsic")) spec.extrinsic = pose_field(j.at("extrinsic"));
  maybe(j, "landmarks", spec.landmarks);
  maybe(j, "descriptor_length", spec.descriptor_length);
  maybe(j, "descriptor_noise", spec.descriptor_noise);
  maybe(j, "visibility_window", spec.visibility_window);

  if (j.contains("surfaces")) {
    for (const auto& s : j.at("surfaces")) {
      const std::string type = s.at("type").get<std::string>();
      if (type == "plane") {
        spec.surfaces.push_back(Surface::MakePlane(
            vec3(s.at("center")), vec3(s.at("normal")), vec2(s.at("extent"))));
      } else if (type == "box") {
        Eigen::Quaterniond q(1, 0, 0, 0);
        if (s.contains("rotation")) {
          const auto& r = s.at("rotation");
          q = Eigen::Quaterniond(r[0].get<double>(), r[1].get<double>(),
                                 r[2].get<double>(), r[3].get<double>());
        }
        spec.surfaces.push_back(
            Surface::MakeBox(vec3(s.at("center")), vec3(s.at("size")), q));
      } else if (type == "cylinder") {
        spec.surfaces.push_back(Surface::MakeCylinder(
            vec3(s.at("center")), vec3(s.at("axis")),
            s.at("radius").get<double>(), s.at("height").get<double>()));
      } else {
        throw ConfigError("unknown surface type: " + type);
      }
    }
  }

  if (j.contains("landmark_surfaces")) {
    spec.landmark_surfaces =
        j.at("landmark_surfaces").get<std::vector<int>>();
  }
  maybe(j, "cloud_points", spec.cloud_points);
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    maybe(n, "pixel_sigma", spec.noise.pixel_sigma);
    maybe(n, "depth_sigma_multiplier", spec.noise.depth_sigma_multiplier);
    maybe(n, "range_sigma", spec.noise.range_sigma);
  }
  if (j.contains("outliers")) {
    const json& o = j.at("outliers");
    maybe(o, "camera_fraction", spec.outliers.camera_fraction);
    maybe(o, "camera_pixel_magnitude", spec.outliers.camera_pixel_magnitude);
    maybe(o, "camera_depth_magnitude", spec.outliers.camera_depth_magnitude);
    maybe(o, "lidar_fraction", spec.outliers.lidar_fraction);
    maybe(o, "lidar_magnitude", spec.outliers.lidar_magnitude);
  }
  if (j.contains("rough_noise")) {
    const json& r = j.at("rough_noise");
    maybe(r, "translation_sigma", spec.rough_translation_sigma);
    maybe(r, "rotation_sigma_deg", spec.rough_rotation_sigma_deg);
  }
  if (j.contains("camera")) {
    parse_camera(j.at("camera"), spec.camera, spec.image_width,
                 spec.image_height);
  }
  maybe(j, "lidar_adjacency_window", spec.lidar_adjacency_window);
  if (j.contains("depth_maps")) {
    const json& d = j.at("depth_maps");
    maybe(d, "enable", spec.depth_maps.enable);
    maybe(d, "noise_sigma", spec.depth_maps.noise_sigma);
    maybe(d, "hole_fraction", spec.depth_maps.hole_fraction);
    maybe(d, "outlier_fraction", spec.depth_maps.outlier_fraction);
    maybe(d, "outlier_magnitude", spec.depth_maps.outlier_magnitude);
  }
  if (j.contains("world_transform")) {
    spec.world_transform = pose_field(j.at("world_transform"));
  }
  maybe(j, "seed", spec.seed);
  spec.validate();
  return spec;
}

}  // namespace licam
