#include "poleloc/pole_extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "poleloc/errors.hpp"

namespace poleloc {

namespace {

std::vector<int> radius_neighbors(std::span<const LabeledPoint> points,
                                  const std::vector<int>& order, int self,
                                  double eps) {
  // order holds indices sorted by x; binary search the eps slab in x.
  const double x0 = points[self].x;
  const double y0 = points[self].y;
  auto lo = std::lower_bound(order.begin(), order.end(), x0 - eps,
                             [&](int i, double v) { return points[i].x < v; });
  auto hi = std::upper_bound(order.begin(), order.end(), x0 + eps,
                             [&](double v, int i) { return v < points[i].x; });
  std::vector<int> out;
  for (auto it = lo; it != hi; ++it) {
    const LabeledPoint& p = points[*it];
    if (distance2d(p.x, p.y, x0, y0) <= eps) out.push_back(*it);
  }
  return out;
}

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

bool point_less(const LabeledPoint& a, const LabeledPoint& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

}  // namespace

std::vector<std::vector<int>> cluster_points(std::span<const LabeledPoint> points,
                                             double eps, int min_points) {
  const int n = static_cast<int>(points.size());
  if (n == 0) return {};

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return points[a].x < points[b].x; });

  std::vector<std::vector<int>> neighbors(n);
  std::vector<char> core(n, 0);
  for (int i = 0; i < n; ++i) {
    neighbors[i] = radius_neighbors(points, order, i, eps);
    core[i] = static_cast<int>(neighbors[i].size()) >= min_points;
  }

  // Density-connected components over core points.
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (int j : neighbors[i]) {
      if (core[j]) uf.merge(i, j);
    }
  }

  // Border points join the cluster of their nearest core neighbor. Distance
  // ties break on point coordinates so the outcome is order-independent.
  std::vector<int> assigned(n, -1);
  for (int i = 0; i < n; ++i) {
    if (core[i]) {
      assigned[i] = uf.find(i);
      continue;
    }
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j : neighbors[i]) {
      if (!core[j]) continue;
      const double dist = distance2d(points[i].x, points[i].y, points[j].x, points[j].y);
      if (dist < best_dist ||
          (dist == best_dist && best >= 0 && point_less(points[j], points[best]))) {
        best_dist = dist;
        best = j;
      }
    }
    if (best >= 0) assigned[i] = uf.find(best);
  }

  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) {
    if (assigned[i] >= 0) by_root[assigned[i]].push_back(i);
  }
  std::vector<std::vector<int>> clusters;
  clusters.reserve(by_root.size());
  for (auto& [root, members] : by_root) clusters.push_back(std::move(members));
  return clusters;
}

Circle fit_circle(std::span<const Vec2> points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) raise(ErrorCode::insufficient_support, "circle fit needs >= 3 points");

  double mean_u = 0.0, mean_v = 0.0;
  for (const Vec2& p : points) {
    mean_u += p.x;
    mean_v += p.y;
  }
  mean_u /= n;
  mean_v /= n;

  double suu = 0.0, svv = 0.0, suv = 0.0;
  double suuu = 0.0, svvv = 0.0, suuv = 0.0, suvv = 0.0;
  for (const Vec2& p : points) {
    const double u = p.x - mean_u;
    const double v = p.y - mean_v;
    suu += u * u;
    svv += v * v;
    suv += u * v;
    suuu += u * u * u;
    svvv += v * v * v;
    suuv += u * u * v;
    suvv += u * v * v;
  }

  const double det = suu * svv - suv * suv;
  if (std::abs(det) < 1e-12)
    raise(ErrorCode::degenerate_geometry, "collinear or degenerate point set");

  const double rhs_u = (suuu + suvv) / 2.0;
  const double rhs_v = (suuv + svvv) / 2.0;
  const double uc = (rhs_u * svv - rhs_v * suv) / det;
  const double vc = (rhs_v * suu - rhs_u * suv) / det;

  Circle circle;
  circle.x = uc + mean_u;
  circle.y = vc + mean_v;
  double r = 0.0;
  for (const Vec2& p : points) r += distance2d(p.x, p.y, circle.x, circle.y);
  circle.r = r / n;
  return circle;
}

PooledSemantics pool_semantics(const std::vector<std::vector<double>>& features,
                               const std::vector<std::vector<double>>& probs) {
  const int n = static_cast<int>(features.size());
  if (n == 0 || probs.size() != features.size())
    raise(ErrorCode::insufficient_support, "semantic pooling needs >= 1 point");

  PooledSemantics pooled;
  pooled.feature = features[0];
  pooled.prob.assign(probs[0].size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < pooled.feature.size(); ++j)
      pooled.feature[j] = std::max(pooled.feature[j], features[i][j]);
    for (std::size_t j = 0; j < pooled.prob.size(); ++j)
      pooled.prob[j] += probs[i][j];
  }
  for (double& p : pooled.prob) p /= n;
  pooled.class_id = argmax_lowest(pooled.prob);
  return pooled;
}

ExtractResult extract_poles(std::span<const LabeledPoint> points,
                            const ExtractConfig& config) {
  ExtractResult result;

  std::map<int, std::vector<LabeledPoint>> by_class;
  for (const LabeledPoint& p : points) {
    if (std::hypot(p.x, p.y, p.z) > config.max_range) continue;
    if (std::find(config.pole_classes.begin(), config.pole_classes.end(),
                  p.class_id) == config.pole_classes.end())
      continue;
    by_class[p.class_id].push_back(p);
  }

  for (const auto& [class_id, class_points] : by_class) {
    const auto clusters =
        cluster_points(class_points, config.eps, config.min_points);
    result.diagnostics.clusters += static_cast<int>(clusters.size());
    for (const auto& cluster : clusters) {
      std::vector<Vec2> xy;
      std::vector<std::vector<double>> features, probs;
      xy.reserve(cluster.size());
      for (int idx : cluster) {
        const LabeledPoint& p = class_points[idx];
        xy.push_back(Vec2{p.x, p.y});
        features.push_back(p.feature);
        probs.push_back(p.prob);
      }
      PoleInstance instance;
      try {
        instance.circle = fit_circle(xy);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::degenerate_geometry)
          ++result.diagnostics.degenerate_skipped;
        else
          ++result.diagnostics.insufficient_skipped;
        continue;
      }
      PooledSemantics pooled = pool_semantics(features, probs);
      instance.feature = std::move(pooled.feature);
      instance.prob = std::move(pooled.prob);
      instance.class_id = pooled.class_id;
      instance.support = static_cast<int>(cluster.size());
      result.instances.push_back(std::move(instance));
    }
  }

  std::sort(result.instances.begin(), result.instances.end(),
            [](const PoleInstance& a, const PoleInstance& b) {
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              if (a.circle.x != b.circle.x) return a.circle.x < b.circle.x;
              return a.circle.y < b.circle.y;
            });
  return result;
}

}  // namespace poleloc
