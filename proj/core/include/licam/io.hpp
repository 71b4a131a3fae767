#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "licam/evaluate.hpp"
#include "licam/graph.hpp"
#include "licam/mapping.hpp"
#include "licam/observability.hpp"
#include "licam/point_cloud.hpp"
#include "licam/solver.hpp"
#include "licam/synth.hpp"

namespace licam {

// -- PLY ----------------------------------------------------------------------

struct PlyWriteOptions {
  bool binary = true;           // binary little-endian or ascii
  bool double_precision = true; // float64 properties keep synth data exact
};

/// Writes x,y,z plus nx,ny,nz and curvature when present.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const PlyWriteOptions& options = {});

/// Reads ascii or binary little-endian PLY. Requires x,y,z; reads
/// nx,ny,nz,curvature when present; skips other scalar properties.
PointCloud read_ply(const std::filesystem::path& path);

// -- depth maps ---------------------------------------------------------------

/// Binary little-endian: magic "DMAP", u32 width, u32 height, then
/// width*height float32 row-major, NaN = invalid.
void write_depth_map(const std::filesystem::path& path, const DepthMap& map);
DepthMap read_depth_map(const std::filesystem::path& path);

// -- JSON ---------------------------------------------------------------------

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

void write_feature_sets(const std::filesystem::path& path,
                        const std::vector<FeatureSet>& stations);
std::vector<FeatureSet> read_feature_sets(const std::filesystem::path& path);

void write_poses(const std::filesystem::path& path,
                 const std::vector<Pose>& poses);
std::vector<Pose> read_poses(const std::filesystem::path& path);

void write_pose(const std::filesystem::path& path, const Pose& pose);
Pose read_pose(const std::filesystem::path& path);

void write_landmarks(const std::filesystem::path& path,
                     const std::vector<Landmark>& landmarks);
std::vector<Landmark> read_landmarks(const std::filesystem::path& path);

void write_rough_transforms(const std::filesystem::path& path,
                            const std::vector<RoughTransform>& transforms);
std::vector<RoughTransform> read_rough_transforms(
    const std::filesystem::path& path);

void write_camera_observations(const std::filesystem::path& path,
                               const std::vector<CameraObservation>& obs);
std::vector<CameraObservation> read_camera_observations(
    const std::filesystem::path& path);

void write_lidar_observations(const std::filesystem::path& path,
                              const std::vector<LidarObservation>& obs);
std::vector<LidarObservation> read_lidar_observations(
    const std::filesystem::path& path);

void write_solve_report(const std::filesystem::path& path,
                        const SolveReport& report);

void write_ground_truth(const std::filesystem::path& path,
                        const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

void write_distance_report(const std::filesystem::path& path,
                           const DistanceReport& report);

// -- CSV ----------------------------------------------------------------------

/// One "dimension,offset,cost" row per sweep sample.
void write_sweep_csv(const std::filesystem::path& path,
                     const SweepResult& sweep);

void write_flatness_json(const std::filesystem::path& path,
                         const std::vector<FlatnessEntry>& entries,
                         double rel_tol);

/// One "bin_low,bin_high,count" row per histogram bin.
void write_histogram_csv(const std::filesystem::path& path,
                         const DistanceReport& report);

}  // namespace licam
