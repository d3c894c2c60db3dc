#include "poleloc/map_builder.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "poleloc/errors.hpp"

namespace poleloc {

void SemanticPoleMap::rebuild_indexes() {
  layers.clear();
  layer_index.clear();
  std::vector<KdTree2::Entry> all_entries;
  std::map<int, std::vector<KdTree2::Entry>> per_layer;
  for (int i = 0; i < static_cast<int>(landmarks.size()); ++i) {
    const Landmark& lm = landmarks[i];
    layers[lm.class_id].push_back(i);
    all_entries.push_back({lm.circle.x, lm.circle.y, i});
    per_layer[lm.class_id].push_back({lm.circle.x, lm.circle.y, i});
  }
  all_index = KdTree2(std::move(all_entries));
  for (auto& [class_id, entries] : per_layer)
    layer_index.emplace(class_id, KdTree2(std::move(entries)));
}

PoleInstance transform_instance(const PoleInstance& instance, const Pose2& pose) {
  PoleInstance out = instance;
  const Vec2 center = transform_point(pose, instance.circle.x, instance.circle.y);
  out.circle.x = center.x;
  out.circle.y = center.y;
  return out;
}

bool overlap(const Circle& a, const Circle& b) {
  return distance2d(a.x, a.y, b.x, b.y) <= a.r + b.r;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<std::vector<int>> cluster_instances(std::span<const PoleInstance> instances,
                                                bool by_class) {
  const int n = static_cast<int>(instances.size());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (by_class && instances[i].class_id != instances[j].class_id) continue;
      if (overlap(instances[i].circle, instances[j].circle)) uf.merge(i, j);
    }
  }
  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<int>> clusters;
  clusters.reserve(by_root.size());
  for (auto& [root, members] : by_root) clusters.push_back(std::move(members));
  return clusters;
}

Landmark aggregate_cluster(std::span<const PoleInstance> cluster,
                           bool require_uniform_class) {
  assert(!cluster.empty());
#ifndef NDEBUG
  if (require_uniform_class) {
    for (const PoleInstance& inst : cluster)
      assert(inst.class_id == cluster.front().class_id);
  }
#else
  (void)require_uniform_class;
#endif

  const int m = static_cast<int>(cluster.size());
  Landmark lm;
  lm.feature.assign(cluster.front().feature.size(), 0.0);
  lm.prob.assign(cluster.front().prob.size(), 0.0);
  for (const PoleInstance& inst : cluster) {
    lm.circle.x += inst.circle.x;
    lm.circle.y += inst.circle.y;
    lm.circle.r += inst.circle.r;
    for (std::size_t j = 0; j < lm.feature.size(); ++j)
      lm.feature[j] += inst.feature[j];
    for (std::size_t j = 0; j < lm.prob.size(); ++j) lm.prob[j] += inst.prob[j];
  }
  lm.circle.x /= m;
  lm.circle.y /= m;
  lm.circle.r /= m;
  for (double& f : lm.feature) f /= m;
  for (double& p : lm.prob) p /= m;
  lm.class_id = argmax_lowest(lm.prob);
  lm.obs_count = m;
  return lm;
}

SemanticPoleMap build_map(std::span<const Keyframe> keyframes, int k, int d,
                          const MapBuildConfig& config) {
  std::vector<PoleInstance> world_instances;
  for (const Keyframe& kf : keyframes) {
    for (const PoleInstance& inst : kf.instances)
      world_instances.push_back(transform_instance(inst, kf.pose));
  }

  SemanticPoleMap map;
  map.k = k;
  map.d = d;
  map.config = config;

  const auto clusters = cluster_instances(world_instances, config.multi_layer);
  for (const auto& cluster : clusters) {
    std::vector<PoleInstance> members;
    members.reserve(cluster.size());
    for (int idx : cluster) members.push_back(world_instances[idx]);
    Landmark lm = aggregate_cluster(members, config.multi_layer);
    if (lm.obs_count < config.min_obs_count) continue;
    map.landmarks.push_back(std::move(lm));
  }

  std::sort(map.landmarks.begin(), map.landmarks.end(),
            [](const Landmark& a, const Landmark& b) {
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              if (a.circle.x != b.circle.x) return a.circle.x < b.circle.x;
              return a.circle.y < b.circle.y;
            });
  map.rebuild_indexes();
  return map;
}

}  // namespace poleloc
