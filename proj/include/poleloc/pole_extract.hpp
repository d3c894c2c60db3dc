#pragma once

#include <span>
#include <vector>

#include "poleloc/types.hpp"

namespace poleloc {

struct ExtractConfig {
  std::vector<int> pole_classes;  // class ids treated as pole-like
  double eps = 0.5;               // DBSCAN neighborhood radius, meters
  int min_points = 3;             // DBSCAN core threshold (self included)
  double max_range = 50.0;        // sensor range cut, 3D Euclidean, meters
};

struct ExtractDiagnostics {
  int clusters = 0;              // clusters found across all classes
  int degenerate_skipped = 0;    // collinear / singular circle fits
  int insufficient_skipped = 0;  // clusters below the circle-fit minimum
};

struct ExtractResult {
  std::vector<PoleInstance> instances;
  ExtractDiagnostics diagnostics;
};

struct PooledSemantics {
  std::vector<double> feature;
  std::vector<double> prob;
  int class_id = 0;
};

// Density clustering in the XY plane. Returns clusters as index lists into
// `points`; points in no cluster are noise and dropped. Core points need at
// least min_points neighbors within eps (counting themselves). The result is
// invariant to input order: border points attach to their nearest core point.
std::vector<std::vector<int>> cluster_points(std::span<const LabeledPoint> points,
                                             double eps, int min_points);

// Least-squares circle through >= 3 non-collinear points. Solves the 2x2
// normal system on mean-centered coordinates; the radius is the mean distance
// of the points to the fitted center.
Circle fit_circle(std::span<const Vec2> points);

// Per-cluster semantic pooling: elementwise max of features, arithmetic mean
// of class probabilities, argmax class with lowest-index tie-break.
PooledSemantics pool_semantics(const std::vector<std::vector<double>>& features,
                               const std::vector<std::vector<double>>& probs);

// Full extraction pipeline for one scan: range cut, per-class clustering,
// circle fit, semantic pooling. Degenerate clusters are skipped and tallied.
// Instances come back ordered by (class_id, x, y).
ExtractResult extract_poles(std::span<const LabeledPoint> points,
                            const ExtractConfig& config);

}  // namespace poleloc
