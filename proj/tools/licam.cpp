// Command line front end: synth | solve | probe | refine | eval.
// Stage outputs are plain files so every stage can be re-run independently.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "licam/config.hpp"
#include "licam/io.hpp"
#include "licam/observability.hpp"
#include "licam/solver.hpp"
#include "licam/synth.hpp"

namespace fs = std::filesystem;
using namespace licam;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitAssociation = 3;
constexpr int kExitSolver = 4;
constexpr int kExitEvaluation = 5;

std::string station_name(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.%s", prefix, i, ext);
  return buf;
}

struct GlobalOverrides {
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = keep config value
};

void apply_overrides(RunConfig& cfg, const GlobalOverrides& overrides) {
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.threads > 0) cfg.threads = overrides.threads;
  cfg.solver.correspond.seed = cfg.seed;
  cfg.solver.correspond.threads = cfg.threads;
  cfg.solver.threads = cfg.threads;
}

int run_guarded(int fallback_code, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    spdlog::error("io: {}", e.what());
    return kExitIo;
  } catch (const AssociationError& e) {
    spdlog::error("association: {}", e.what());
    return kExitAssociation;
  } catch (const SolverError& e) {
    spdlog::error("solver: {}", e.what());
    return kExitSolver;
  } catch (const EvaluationError& e) {
    spdlog::error("evaluation: {}", e.what());
    return kExitEvaluation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return fallback_code;
  }
}

// -- synth --------------------------------------------------------------------

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override) {
  return run_guarded(kExitConfig, [&] {
    SceneSpec spec = load_scene_spec(spec_path);
    if (seed_override) spec.seed = *seed_override;
    const SynthOutput data = generate(spec);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string());

    write_feature_sets(out_dir / "features.json", data.features);
    for (size_t i = 0; i < data.clouds.size(); ++i) {
      write_ply(out_dir / station_name("cloud", static_cast<int>(i), "ply"),
                data.clouds[i]);
    }
    write_rough_transforms(out_dir / "rough_transforms.json",
                           data.rough_transforms);
    write_ground_truth(out_dir / "ground_truth.json", data.truth);
    write_ply(out_dir / "truth.ply", data.truth_cloud);
    for (size_t i = 0; i < data.stereo_depth_maps.size(); ++i) {
      write_depth_map(
          out_dir / station_name("stereo", static_cast<int>(i), "dmap"),
          data.stereo_depth_maps[i]);
    }

    // Ready-to-edit run config wired to the generated files. The initial
    // extrinsic stands in for a hand measurement: truth plus rough noise.
    const Pose te_initial =
        perturb_pose(data.truth.extrinsic, spec.rough_translation_sigma,
                     spec.rough_rotation_sigma_deg * M_PI / 180.0,
                     sub_seed(spec.seed, 900));
    nlohmann::json cfg;
    cfg["features"] = "features.json";
    std::vector<std::string> cloud_names;
    std::vector<std::string> map_names;
    for (size_t i = 0; i < data.clouds.size(); ++i) {
      cloud_names.push_back(station_name("cloud", static_cast<int>(i), "ply"));
      if (!data.stereo_depth_maps.empty()) {
        map_names.push_back(
            station_name("stereo", static_cast<int>(i), "dmap"));
      }
    }
    cfg["clouds"] = cloud_names;
    if (!map_names.empty()) cfg["depth_maps"] = map_names;
    cfg["rough_transforms"] = "rough_transforms.json";
    cfg["truth_cloud"] = "truth.ply";
    cfg["output"] = "out";
    cfg["camera"] = {{"fx", spec.camera.fx},     {"fy", spec.camera.fy},
                     {"cx", spec.camera.cx},     {"cy", spec.camera.cy},
                     {"baseline", spec.camera.baseline},
                     {"width", spec.image_width},
                     {"height", spec.image_height}};
    cfg["extrinsic_initial"] = pose_to_json(te_initial);
    cfg["seed"] = spec.seed;
    std::ofstream out(out_dir / "run_config.json");
    out << cfg.dump(2) << '\n';
    if (!out) throw IoError("cannot write run_config.json");

    spdlog::info("wrote dataset with {} stations to {}", spec.stations,
                 out_dir.string());
  });
}

// -- solve --------------------------------------------------------------------

struct LoadedDataset {
  std::vector<FeatureSet> features;
  std::vector<PointCloud> clouds;
  std::vector<RoughTransform> rough;
  Adjacency lidar_adjacency;
};

LoadedDataset load_dataset(const RunConfig& cfg) {
  LoadedDataset data;
  data.features = read_feature_sets(cfg.features);
  for (const auto& path : cfg.clouds) {
    data.clouds.push_back(read_ply(path));
  }
  if (data.features.size() != data.clouds.size()) {
    throw ConfigError("feature stations and cloud count differ");
  }
  data.rough = read_rough_transforms(cfg.rough_transforms);
  data.lidar_adjacency = Adjacency(static_cast<int>(data.clouds.size()));
  for (const auto& t : data.rough) {
    data.lidar_adjacency.set(t.target, t.source);
  }
  for (auto& cloud : data.clouds) {
    if (!cloud.has_normals()) {
      estimate_normals(cloud, cfg.solver.correspond.normal_k);
    }
  }
  return data;
}

// Chains rough pairwise cloud transforms through a spanning tree from
// station 0 and maps them into camera poses via the extrinsic guess.
std::vector<Pose> chain_initial_poses(const LoadedDataset& data,
                                      const Pose& extrinsic_guess) {
  const int n = static_cast<int>(data.clouds.size());
  std::vector<std::vector<std::pair<int, Pose>>> edges(n);  // (peer, j->i map)
  for (const auto& t : data.rough) {
    edges[t.target].push_back({t.source, t.transform});
    edges[t.source].push_back({t.target, inverse(t.transform)});
  }

  std::vector<std::optional<Pose>> lidar_pose(n);  // LiDAR-to-world
  lidar_pose[0] = extrinsic_guess;                  // so camera 0 = identity
  std::vector<int> queue{0};
  for (size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (const auto& [v, map_v_to_u] : edges[u]) {
      if (lidar_pose[v]) continue;
      lidar_pose[v] = compose(*lidar_pose[u], map_v_to_u);
      queue.push_back(v);
    }
  }

  std::vector<int> unreachable;
  for (int i = 0; i < n; ++i) {
    if (!lidar_pose[i]) unreachable.push_back(i);
  }
  if (!unreachable.empty()) {
    std::string msg = "no rough-transform chain from station 0 to stations:";
    for (int i : unreachable) msg += " " + std::to_string(i);
    throw AssociationError(msg);
  }

  const Pose e_inv = inverse(extrinsic_guess);
  std::vector<Pose> poses;
  poses.reserve(n);
  for (int i = 0; i < n; ++i) {
    poses.push_back(compose(*lidar_pose[i], e_inv));
  }
  // Remove rounding on the gauge pose.
  poses[0] = Pose::Identity();
  return poses;
}

int cmd_solve(const fs::path& config_path, const GlobalOverrides& overrides) {
  return run_guarded(kExitSolver, [&] {
    RunConfig cfg = load_run_config(config_path);
    apply_overrides(cfg, overrides);
    cfg.validate_for(RunConfig::Stage::kSolve);
    LoadedDataset data = load_dataset(cfg);

    AssociationResult assoc = associate_features(data.features, cfg.association);
    spdlog::info("association: {} landmarks, {} observations",
                 assoc.landmarks.size(), assoc.observations.size());

    const Adjacency merged =
        merge_adjacency(assoc.camera_adjacency, data.lidar_adjacency);
    const ConnectivityReport conn = check_connected(merged);
    if (!conn.connected) {
      std::string msg = "merged pose graph is disconnected; components:";
      for (const auto& comp : conn.components) {
        msg += " [";
        for (size_t k = 0; k < comp.size(); ++k) {
          msg += (k ? " " : "") + std::to_string(comp[k]);
        }
        msg += "]";
      }
      throw AssociationError(msg);
    }

    Problem prob;
    prob.poses = chain_initial_poses(data, cfg.extrinsic_initial);
    prob.landmarks = std::move(assoc.landmarks);
    prob.extrinsic = cfg.extrinsic_initial;
    prob.camera_observations = std::move(assoc.observations);
    prob.intrinsics = cfg.camera;
    prob.sigmas = cfg.sigmas;
    prob.depth_mode = cfg.depth_mode;
    prob.clouds = std::move(data.clouds);
    prob.lidar_adjacency = data.lidar_adjacency;
    initialize_landmarks(prob.landmarks, prob.camera_observations, prob.poses,
                         prob.intrinsics, prob.depth_mode);

    const UniquenessReport uniq = check_uniqueness(
        make_motion_pairs(prob.poses, prob.extrinsic), 1.0 * M_PI / 180.0);
    if (!uniq.unique) {
      for (const auto& reason : uniq.reasons) {
        spdlog::warn("extrinsic may not be fully observable: {}", reason);
      }
    }

    CorrespondConfig cc = cfg.solver.correspond;
    cc.seed = cfg.seed;
    cc.threads = cfg.threads;
    prob.lidar_observations = extract_lidar_observations(
        prob.clouds, prob.lidar_adjacency, prob.poses, prob.extrinsic, cc);
    spdlog::info("initial correspondences: {}", prob.lidar_observations.size());
    if (cfg.zero_lidar_weights) {
      for (auto& o : prob.lidar_observations) o.weight = 0.0;
    }

    SolverConfig sc = cfg.solver;
    sc.correspond = cc;
    SolveReport report;
    if (cfg.zero_lidar_weights) {
      // Camera-only mode: no re-association (it would reset the weights).
      sc.reassociation_rounds = 1;
      report = solve_joint(prob, sc);
    } else {
      report = solve_joint(prob, sc);
    }

    spdlog::info("status={} cost={:.6e} iterations={} gated(cam={}, lidar={})",
                 to_string(report.status), report.final_cost,
                 report.iterations, report.camera_outliers,
                 report.lidar_outliers);
    for (const auto& block : report.singular_blocks) {
      spdlog::warn("unconstrained parameter block: {}", block);
    }

    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw IoError("cannot create " + cfg.output.string());
    write_poses(cfg.output / "poses.json", prob.poses);
    write_pose(cfg.output / "extrinsic.json", prob.extrinsic);
    write_landmarks(cfg.output / "landmarks.json", prob.landmarks);
    write_camera_observations(cfg.output / "camera_observations.json",
                              prob.camera_observations);
    write_lidar_observations(cfg.output / "lidar_observations.json",
                             prob.lidar_observations);
    write_solve_report(cfg.output / "report.json", report);
  });
}

// -- probe --------------------------------------------------------------------

Problem load_solved_state(const RunConfig& cfg) {
  const fs::path dir = cfg.output;
  for (const char* name :
       {"poses.json", "extrinsic.json", "landmarks.json",
        "camera_observations.json", "lidar_observations.json"}) {
    if (!fs::exists(dir / name)) {
      throw IoError("missing solved state file: " + (dir / name).string());
    }
  }
  Problem prob;
  prob.poses = read_poses(dir / "poses.json");
  prob.extrinsic = read_pose(dir / "extrinsic.json");
  prob.landmarks = read_landmarks(dir / "landmarks.json");
  prob.camera_observations =
      read_camera_observations(dir / "camera_observations.json");
  prob.lidar_observations =
      read_lidar_observations(dir / "lidar_observations.json");
  prob.intrinsics = cfg.camera;
  prob.sigmas = cfg.sigmas;
  prob.depth_mode = cfg.depth_mode;
  return prob;
}

int cmd_probe(const fs::path& config_path, const GlobalOverrides& overrides) {
  return run_guarded(kExitSolver, [&] {
    RunConfig cfg = load_run_config(config_path);
    apply_overrides(cfg, overrides);
    cfg.validate_for(RunConfig::Stage::kProbe);
    const Problem prob = load_solved_state(cfg);

    std::vector<SweepResult> sweeps;
    for (SweepDimension dim : all_sweep_dimensions()) {
      const double half = is_rotation(dim)
                              ? cfg.sweep.half_range_rotation_deg * M_PI / 180.0
                              : cfg.sweep.half_range_translation;
      sweeps.push_back(
          sweep_extrinsic(prob, dim, half, cfg.sweep.steps, cfg.threads));
      write_sweep_csv(cfg.output / ("sweep_" +
                                    std::string(to_string(dim)) + ".csv"),
                      sweeps.back());
    }
    const auto entries = flatness_report(sweeps, cfg.sweep.rel_tol);
    write_flatness_json(cfg.output / "flatness.json", entries,
                        cfg.sweep.rel_tol);
    for (const auto& e : entries) {
      spdlog::info("{}: {} (relative variation {:.3e})", to_string(e.dimension),
                   e.flat ? "flat" : "constrained", e.relative_variation);
    }
  });
}

// -- refine -------------------------------------------------------------------

int cmd_refine(const fs::path& config_path,
               const GlobalOverrides& overrides) {
  return run_guarded(kExitEvaluation, [&] {
    RunConfig cfg = load_run_config(config_path);
    apply_overrides(cfg, overrides);
    cfg.validate_for(RunConfig::Stage::kRefine);

    const fs::path dir = cfg.output;
    if (!fs::exists(dir / "poses.json") ||
        !fs::exists(dir / "extrinsic.json")) {
      throw IoError("missing solved state (poses.json / extrinsic.json) in " +
                    dir.string());
    }
    const std::vector<Pose> poses = read_poses(dir / "poses.json");
    const Pose extrinsic = read_pose(dir / "extrinsic.json");

    std::vector<DepthMap> refined;
    for (size_t i = 0; i < cfg.depth_maps.size(); ++i) {
      PointCloud cloud = read_ply(cfg.clouds[i]);
      if (!cloud.has_normals() || !cloud.has_curvatures()) {
        estimate_normals(cloud, cfg.solver.correspond.normal_k);
      }
      const DepthMap stereo = read_depth_map(cfg.depth_maps[i]);
      const DepthMap lidar = project_lidar_depth(cloud, extrinsic, cfg.camera,
                                                 stereo.width, stereo.height);
      const DepthMap fold1 =
          remove_outliers(stereo, lidar, cfg.refine.max_diff,
                          cfg.refine.radius_px);
      DepthMap fold2 = fill_holes(
          fold1, cloud, extrinsic, cfg.camera, cfg.refine.max_curvature,
          cfg.refine.max_view_angle_deg * M_PI / 180.0, cfg.refine.radius_px);
      spdlog::info(
          "station {}: stereo {} valid -> removed to {}, filled to {}", i,
          stereo.valid_count(), fold1.valid_count(), fold2.valid_count());
      write_depth_map(dir / station_name("refined", static_cast<int>(i),
                                         "dmap"),
                      fold2);
      refined.push_back(std::move(fold2));
    }

    const PointCloud model =
        assemble_model(refined, poses, cfg.camera, cfg.refine.voxel_size);
    write_ply(dir / "model.ply", model);
    spdlog::info("assembled model: {} points", model.size());
  });
}

// -- eval ---------------------------------------------------------------------

int cmd_eval(const fs::path& config_path, const GlobalOverrides& overrides) {
  return run_guarded(kExitEvaluation, [&] {
    RunConfig cfg = load_run_config(config_path);
    apply_overrides(cfg, overrides);
    cfg.validate_for(RunConfig::Stage::kEval);

    const fs::path model_path =
        cfg.model.empty() ? cfg.output / "model.ply" : cfg.model;
    if (!fs::exists(model_path)) {
      throw IoError("model cloud not found: " + model_path.string());
    }
    PointCloud model = read_ply(model_path);
    PointCloud truth = read_ply(cfg.truth_cloud);
    if (!truth.has_normals()) {
      estimate_normals(truth, cfg.solver.correspond.normal_k);
    }

    if (cfg.eval.run_icp) {
      const IcpResult icp =
          icp_point_to_plane(model, truth, Pose::Identity(), cfg.eval.icp);
      spdlog::info("ICP: {} iterations, rms {:.6e}, converged={}",
                   icp.iterations, icp.rms, icp.converged);
      model = transform_cloud(model, icp.transform);
    }

    const DistanceReport report = distance_map(model, truth, cfg.eval.distance);
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    write_distance_report(cfg.output / "eval_report.json", report);
    write_histogram_csv(cfg.output / "histogram.csv", report);
    spdlog::info(
        "distance: mean {:.6f} mm, median {:.6f} mm over {} points "
        "({} excluded), density {:.1f} pts/cm^2",
        report.mean * 1000.0, report.median * 1000.0, report.sample_count,
        report.excluded, report.density_per_cm2);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint LiDAR-camera pose estimation and dense mapping"};
  app.require_subcommand(1);

  bool verbose = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_flag("--verbose", verbose, "debug logging");
  app.add_option("--threads", threads, "worker threads (0 = config value)");
  app.add_option("--seed", seed, "override the config seed");

  std::string spec_path, out_dir = ".", config_path;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* solve = app.add_subcommand(
      "solve", "associate, extract and run the joint optimization");
  solve->add_option("--config", config_path, "run config JSON")->required();
  auto* probe = app.add_subcommand(
      "probe", "perturbation sweeps around the solved extrinsic");
  probe->add_option("--config", config_path, "run config JSON")->required();
  auto* refine = app.add_subcommand(
      "refine", "two-fold depth refinement and model assembly");
  refine->add_option("--config", config_path, "run config JSON")->required();
  auto* eval = app.add_subcommand(
      "eval", "point-to-plane accuracy against a reference cloud");
  eval->add_option("--config", config_path, "run config JSON")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  GlobalOverrides overrides{seed, threads};
  if (synth->parsed()) return cmd_synth(spec_path, out_dir, seed);
  if (solve->parsed()) return cmd_solve(config_path, overrides);
  if (probe->parsed()) return cmd_probe(config_path, overrides);
  if (refine->parsed()) return cmd_refine(config_path, overrides);
  if (eval->parsed()) return cmd_eval(config_path, overrides);
  return 0;
}
