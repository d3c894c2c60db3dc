#pragma once

#include <map>
#include <span>
#include <vector>

#include "poleloc/nn_index.hpp"
#include "poleloc/types.hpp"

namespace poleloc {

struct MapBuildConfig {
  bool multi_layer = true;  // false: classes ignored when clustering
  int min_obs_count = 1;    // landmarks below this are dropped
};

// Class-layered landmark map. Landmarks are stored flat, ordered by
// (class_id, x, y); a landmark's id is its index in `landmarks`. Each layer
// and the union of layers carry a nearest-neighbor index.
struct SemanticPoleMap {
  int k = 0;
  int d = 0;
  MapBuildConfig config;
  std::vector<Landmark> landmarks;
  std::map<int, std::vector<int>> layers;  // class_id -> landmark ids

  KdTree2 all_index;
  std::map<int, KdTree2> layer_index;

  bool empty() const { return landmarks.empty(); }

  KdTree2::Result nearest_any(double x, double y) const {
    return all_index.nearest(x, y);
  }

  // Nearest landmark within one class layer; empty result if no such layer.
  KdTree2::Result nearest_in_layer(int class_id, double x, double y) const {
    auto it = layer_index.find(class_id);
    if (it == layer_index.end()) return {};
    return it->second.nearest(x, y);
  }

  // Rebuilds layers and indexes from `landmarks` (used after deserialization).
  void rebuild_indexes();
};

// Applies an SE(2) pose to the instance's circle center; radius and
// semantics are unchanged.
PoleInstance transform_instance(const PoleInstance& instance, const Pose2& pose);

// True iff the circles touch or intersect: center distance <= r_a + r_b.
bool overlap(const Circle& a, const Circle& b);

// Connected components of the overlap graph, one component list per cluster.
// With by_class set, instances of different classes never share a cluster.
std::vector<std::vector<int>> cluster_instances(std::span<const PoleInstance> instances,
                                                bool by_class = true);

// Componentwise mean of circles, features, and probs over the cluster;
// class is the argmax of the mean prob. require_uniform_class enforces the
// multi-layer contract that all members share one class.
Landmark aggregate_cluster(std::span<const PoleInstance> cluster,
                           bool require_uniform_class = true);

struct Keyframe {
  Pose2 pose;
  std::vector<PoleInstance> instances;  // sensor frame
};

// Batch map construction: world-frame registration, per-class connectivity
// clustering, per-cluster aggregation. Deterministic landmark order.
SemanticPoleMap build_map(std::span<const Keyframe> keyframes, int k, int d,
                          const MapBuildConfig& config = {});

}  // namespace poleloc
