#include <doctest.h>

#include <random>

#include "licam/correspond.hpp"
#include "licam/point_cloud.hpp"
#include "licam/spatial_index.hpp"
#include "test_support.hpp"

using namespace licam;
using namespace licam::test;

namespace {

PointCloud grid_plane(int nx, int ny, double spacing, double z = 0.0) {
  PointCloud cloud;
  for (int x = 0; x < nx; ++x) {
    for (int y = 0; y < ny; ++y) {
      cloud.points.emplace_back(x * spacing - 0.5 * nx * spacing,
                                y * spacing - 0.5 * ny * spacing, z);
    }
  }
  return cloud;
}

PointCloud random_cloud(int n, std::uint64_t seed, double extent = 1.0) {
  PointCloud cloud;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  for (int i = 0; i < n; ++i) {
    cloud.points.emplace_back(u(rng), u(rng), u(rng));
  }
  return cloud;
}

}  // namespace

TEST_CASE("spatial index: exact nearest neighbor vs linear scan") {
  const PointCloud cloud = random_cloud(10000, 31);
  const SpatialIndex index(cloud);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int q = 0; q < 1000; ++q) {
    const Eigen::Vector3d query(u(rng), u(rng), u(rng));
    const auto nb = index.nearest(query);

    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cloud.points.size(); ++i) {
      const double d2 = (cloud.points[i] - query).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(i);
      }
    }
    CHECK(nb.index == best);
    CHECK(nb.distance == doctest::Approx(std::sqrt(best_d2)).epsilon(1e-12));
  }
}

TEST_CASE("spatial index: knn ordering and empty index") {
  const PointCloud cloud = random_cloud(500, 33);
  const SpatialIndex index(cloud);
  const auto nn = index.knn({0.1, -0.2, 0.3}, 8);
  REQUIRE(nn.size() == 8);
  for (size_t i = 1; i < nn.size(); ++i) {
    CHECK(nn[i - 1].distance <= nn[i].distance);
  }

  const SpatialIndex empty;
  CHECK(empty.nearest({0, 0, 0}).index == -1);
}

TEST_CASE("estimate_normals: exact plane") {
  PointCloud cloud = grid_plane(30, 30, 0.05, 2.0);
  estimate_normals(cloud, 12);
  REQUIRE(cloud.has_normals());
  REQUIRE(cloud.has_curvatures());
  for (size_t i = 0; i < cloud.size(); ++i) {
    REQUIRE(cloud.normal_valid(i));
    CHECK(std::abs(std::abs(cloud.normals[i].z()) - 1.0) < 1e-9);
    CHECK(cloud.curvatures[i] < 1e-9);
    // Oriented toward the sensor origin, which sits below the plane here.
    CHECK(cloud.normals[i].dot(-cloud.points[i]) >= 0.0);
  }
}

TEST_CASE("estimate_normals: curvature positive on a sphere patch") {
  PointCloud cloud;
  const double r = 1.0;
  for (int a = 0; a < 30; ++a) {
    for (int b = 0; b < 30; ++b) {
      const double theta = 0.3 + 0.05 * a;
      const double phi = 0.05 * b;
      cloud.points.emplace_back(r * std::sin(theta) * std::cos(phi),
                                r * std::sin(theta) * std::sin(phi),
                                r * std::cos(theta) + 3.0);
    }
  }
  estimate_normals(cloud, 15);
  double mean_curvature = 0.0;
  for (double c : cloud.curvatures) mean_curvature += c;
  mean_curvature /= cloud.curvatures.size();
  CHECK(mean_curvature > 1e-4);
}

TEST_CASE("estimate_normals: noisy plane stays nearly flat") {
  PointCloud cloud = grid_plane(40, 40, 0.02, 1.0);
  std::mt19937_64 rng(34);
  std::normal_distribution<double> g(0.0, 0.001);
  for (auto& p : cloud.points) p.z() += g(rng);
  estimate_normals(cloud, 20);

  // Eigen-decomposition oracle: the curvature of a noisy plane patch is
  // bounded by the noise-to-extent ratio.
  double mean_curvature = 0.0;
  for (double c : cloud.curvatures) mean_curvature += c;
  mean_curvature /= cloud.curvatures.size();
  CHECK(mean_curvature < 0.01);
}

TEST_CASE("estimate_normals: collinear neighborhoods are marked invalid") {
  PointCloud cloud;
  for (int i = 0; i < 50; ++i) {
    cloud.points.emplace_back(0.01 * i, 0.0, 1.0);
  }
  estimate_normals(cloud, 6);
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK(!cloud.normal_valid(i));
  }

  CHECK_THROWS_AS(estimate_normals(cloud, 2), InvalidSpec);
  PointCloud tiny;
  tiny.points = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(estimate_normals(tiny, 5), InvalidSpec);
}

TEST_CASE("sample_keypoints: bounds, determinism, full permutation") {
  const PointCloud cloud = random_cloud(100, 35);
  CHECK(sample_keypoints(cloud, 0, 1).empty());
  CHECK_THROWS_AS(sample_keypoints(cloud, 101, 1), CountExceedsCloud);

  const auto a = sample_keypoints(cloud, 40, 7);
  const auto b = sample_keypoints(cloud, 40, 7);
  CHECK(a == b);
  const auto c = sample_keypoints(cloud, 40, 8);
  CHECK(a != c);

  auto all = sample_keypoints(cloud, 100, 9);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 100; ++i) CHECK(all[i] == i);

  // Distinct indices always.
  auto some = sample_keypoints(cloud, 60, 10);
  std::sort(some.begin(), some.end());
  CHECK(std::adjacent_find(some.begin(), some.end()) == some.end());
}

TEST_CASE("extraction: identical clouds at identity pair each point with itself") {
  PointCloud cloud = grid_plane(25, 25, 0.04, 0.0);
  // Give the plane a sensor-side offset so normals orient consistently.
  for (auto& p : cloud.points) p.z() += 1.5;
  estimate_normals(cloud, 10);

  std::vector<PointCloud> clouds{cloud, cloud};
  Adjacency adj(2);
  adj.set(0, 1);
  const std::vector<Pose> poses{Pose::Identity(), Pose::Identity()};

  CorrespondConfig config;
  config.keypoints_per_cloud = 200;
  const auto obs = extract_lidar_observations(clouds, adj, poses,
                                              Pose::Identity(), config);
  REQUIRE(obs.size() == 200);
  for (const auto& o : obs) {
    CHECK(o.target == 0);
    CHECK(o.source == 1);
    CHECK((o.point - o.neighbor).norm() < 1e-12);
    CHECK(o.weight == 1.0);
  }
}

TEST_CASE("extraction: planar offset along the normal") {
  // Source cloud = target cloud shifted 0.5 * max_dist along +z (the plane
  // normal): every key point is accepted and the point-to-plane residual
  // equals the offset.
  const double max_dist = 0.1;
  PointCloud target = grid_plane(40, 40, 0.02, 1.0);
  estimate_normals(target, 10);
  PointCloud source = target;
  const double offset = 0.5 * max_dist;
  for (auto& p : source.points) p.z() += offset;

  std::vector<PointCloud> clouds{target, source};
  Adjacency adj(2);
  adj.set(0, 1);
  const std::vector<Pose> poses{Pose::Identity(), Pose::Identity()};

  CorrespondConfig config;
  config.max_dist = max_dist;
  config.keypoints_per_cloud = 300;
  const auto obs = extract_lidar_observations(clouds, adj, poses,
                                              Pose::Identity(), config);
  REQUIRE(obs.size() == 300);
  for (const auto& o : obs) {
    const double dist = o.normal.dot(o.point - o.neighbor);
    CHECK(std::abs(std::abs(dist) - offset) < 1e-9);
  }

  // Offset beyond the gate: nothing comes back.
  PointCloud far = target;
  for (auto& p : far.points) p.z() += 2.0 * max_dist;
  std::vector<PointCloud> clouds_far{target, far};
  const auto none = extract_lidar_observations(clouds_far, adj, poses,
                                               Pose::Identity(), config);
  CHECK(none.empty());
}

TEST_CASE("extraction: requires target normals, validates orientation") {
  PointCloud target = grid_plane(20, 20, 0.05, 1.0);  // no normals
  std::vector<PointCloud> clouds{target, target};
  Adjacency adj(2);
  adj.set(0, 1);
  const std::vector<Pose> poses{Pose::Identity(), Pose::Identity()};
  CHECK_THROWS_AS(extract_lidar_observations(clouds, adj, poses,
                                             Pose::Identity(), {}),
                  MissingNormals);
}

TEST_CASE("extraction invariants on the synthetic scene") {
  const SceneSpec spec = small_scene(36);
  const SynthOutput data = generate(spec);

  CorrespondConfig config;
  config.keypoints_per_cloud = 400;
  config.seed = 5;
  const auto obs = extract_lidar_observations(
      data.clouds, data.lidar_adjacency, data.truth.poses,
      data.truth.extrinsic, config);
  REQUIRE(obs.size() > 500);

  Problem prob;
  prob.poses = data.truth.poses;
  prob.extrinsic = data.truth.extrinsic;
  prob.intrinsics = spec.camera;
  prob.landmarks = {};
  for (const auto& o : obs) {
    CHECK(o.target < o.source);
    const Pose rel = relative_cloud_transform(
        prob.poses[o.target], prob.poses[o.source], prob.extrinsic);
    CHECK((transform_point(o.point, rel) - o.neighbor).norm() <=
          config.max_dist + 1e-12);
    // At the true alignment on noise-free planar panels, residuals vanish.
    CHECK(std::abs(o.normal.dot(transform_point(o.point, rel) - o.neighbor)) <
          1e-9);
  }
}

TEST_CASE("extraction keeps the key point sample fixed across calls") {
  const SceneSpec spec = small_scene(37);
  const SynthOutput data = generate(spec);
  CorrespondConfig config;
  config.keypoints_per_cloud = 100;
  CorrespondenceContext context(data.clouds, config);
  const auto kp1 = context.keypoints();
  const auto obs1 = context.extract(data.lidar_adjacency, data.truth.poses,
                                    data.truth.extrinsic);
  const auto kp2 = context.keypoints();
  CHECK(kp1 == kp2);
  const auto obs2 = context.extract(data.lidar_adjacency, data.truth.poses,
                                    data.truth.extrinsic);
  REQUIRE(obs1.size() == obs2.size());
  for (size_t i = 0; i < obs1.size(); ++i) {
    CHECK(obs1[i].point == obs2[i].point);
  }
  context.resample(99);
  CHECK(context.keypoints() != kp1);
}
