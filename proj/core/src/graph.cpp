#include "licam/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include <spdlog/spdlog.h>

namespace licam {

int Adjacency::edge_count() const {
  int count = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      if (at(i, j)) ++count;
    }
  }
  return count;
}

namespace {

struct BestMatch {
  int index = -1;
  double distance = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
};

BestMatch find_best(const Eigen::VectorXd& descriptor, const FeatureSet& set) {
  BestMatch best;
  for (size_t g = 0; g < set.size(); ++g) {
    const double d = (set[g].descriptor - descriptor).norm();
    if (d < best.distance) {
      best.second = best.distance;
      best.distance = d;
      best.index = static_cast<int>(g);
    } else if (d < best.second) {
      best.second = d;
    }
  }
  return best;
}

bool passes_gate(const BestMatch& m, const AssociationConfig& c) {
  if (m.index < 0) return false;
  if (m.distance > c.similarity_threshold) return false;
  // Ratio test only applies when a second candidate exists.
  if (std::isfinite(m.second) && m.second > 0.0 &&
      m.distance > c.ratio_threshold * m.second) {
    return false;
  }
  return true;
}

}  // namespace

AssociationResult associate_features(const std::vector<FeatureSet>& stations,
                                     const AssociationConfig& config) {
  const int n = static_cast<int>(stations.size());

  Eigen::Index descriptor_len = -1;
  for (const auto& set : stations) {
    for (const auto& f : set) {
      if (descriptor_len < 0) descriptor_len = f.descriptor.size();
      if (f.descriptor.size() != descriptor_len) {
        throw DescriptorLengthMismatch(
            "feature descriptors must all have the same length");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (stations[i].empty()) {
      spdlog::warn("station {} has no features; it contributes no matches", i);
    }
  }

  AssociationResult result;
  result.camera_adjacency = Adjacency(n);
  result.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    result.labels[i].assign(stations[i].size(), -1);
  }

  auto add_observation = [&result, &stations](int station, int feature,
                                              int landmark) {
    const Feature& f = stations[station][feature];
    result.observations.push_back(
        CameraObservation{station, landmark, f.pixel, f.depth, 1.0});
  };

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool any_match = false;
      for (size_t fi = 0; fi < stations[i].size(); ++fi) {
        const BestMatch m = find_best(stations[i][fi].descriptor, stations[j]);
        if (!passes_gate(m, config)) continue;
        if (config.cross_check) {
          const BestMatch back =
              find_best(stations[j][m.index].descriptor, stations[i]);
          if (back.index != static_cast<int>(fi)) continue;
        }

        int& label_f = result.labels[i][fi];
        int& label_g = result.labels[j][m.index];
        if (label_f < 0 && label_g < 0) {
          const int k = static_cast<int>(result.landmarks.size());
          result.landmarks.push_back(Landmark{k, Eigen::Vector3d::Zero()});
          label_f = k;
          label_g = k;
          add_observation(i, static_cast<int>(fi), k);
          add_observation(j, m.index, k);
        } else if (label_f >= 0 && label_g < 0) {
          label_g = label_f;
          add_observation(j, m.index, label_f);
        } else if (label_f < 0 && label_g >= 0) {
          label_f = label_g;
          add_observation(i, static_cast<int>(fi), label_g);
        } else {
          // Both already labeled: nothing to merge here.
          continue;
        }
        any_match = true;
      }
      if (any_match) {
        result.camera_adjacency.set(i, j);
      }
    }
  }
  return result;
}

Adjacency merge_adjacency(const Adjacency& a, const Adjacency& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("adjacency matrices differ in size");
  }
  Adjacency out(a.size());
  for (int i = 0; i < a.size(); ++i) {
    for (int j = i + 1; j < a.size(); ++j) {
      out.set(i, j, a.at(i, j) || b.at(i, j));
    }
  }
  return out;
}

ConnectivityReport check_connected(const Adjacency& a) {
  const int n = a.size();
  ConnectivityReport report;
  std::vector<char> visited(n, 0);
  for (int start = 0; start < n; ++start) {
    if (visited[start]) continue;
    std::vector<int> component;
    std::deque<int> queue{start};
    visited[start] = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      component.push_back(u);
      for (int v = 0; v < n; ++v) {
        if (!visited[v] && a.at(u, v)) {
          visited[v] = 1;
          queue.push_back(v);
        }
      }
    }
    std::sort(component.begin(), component.end());
    report.components.push_back(std::move(component));
  }
  std::sort(report.components.begin(), report.components.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  report.connected = report.components.size() <= 1;
  return report;
}

void initialize_landmarks(std::vector<Landmark>& landmarks,
                          const std::vector<CameraObservation>& observations,
                          const std::vector<Pose>& poses,
                          const CameraIntrinsics& K, DepthMode depth_mode) {
  std::vector<char> done(landmarks.size(), 0);
  for (const auto& obs : observations) {
    if (obs.landmark < 0 || obs.landmark >= static_cast<int>(landmarks.size()))
      continue;
    if (done[obs.landmark]) continue;
    const Eigen::Vector3d camera_point =
        back_project(obs.pixel, obs.depth, K, depth_mode);
    landmarks[obs.landmark].position =
        transform_point(camera_point, poses.at(obs.camera));
    done[obs.landmark] = 1;
  }
}

}  // namespace licam
