#pragma once

#include <optional>
#include <span>
#include <vector>

#include "poleloc/assoc_log.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/types.hpp"

namespace poleloc {

struct MapScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int n_tp = 0;
  int n_fp = 0;
  int n_fn = 0;
};

// Precision / recall / F1 of a built map against a ground-truth landmark
// list. A prediction is a TP when its nearest truth landmark lies within
// match_radius; truths matched by no prediction are FNs. one_to_one switches
// to maximum bipartite matching within the radius instead.
MapScore map_f1(const SemanticPoleMap& pred, std::span<const Landmark> truth,
                double match_radius = 1.0, bool one_to_one = false);

struct LocScore {
  double delta_pos = 0.0;  // mean absolute position error, meters
  double rmse_pos = 0.0;
  double delta_ang = 0.0;  // mean absolute heading error, degrees
  double rmse_ang = 0.0;
};

// Per-frame XY position error and wrapped absolute heading error between two
// step-aligned trajectories.
LocScore localization_errors(std::span<const TrajectoryPoint> est,
                             std::span<const TrajectoryPoint> truth);

struct AssocDiag {
  double n_assoc_sets = 1.0;  // mean distinct association sets per frame
  std::optional<double> assoc_accuracy;  // phi_A-bar, exact truth correctness
  std::optional<double> class_accuracy;  // phi_y-bar
  double phi_a_cosine = 0.0;  // feature-similarity estimate of phi_A-bar
};

// Mapping from built-map landmarks to ground-truth landmark ids (and the
// truth class per truth id), used to score association correctness.
struct TruthResolution {
  std::vector<int> map_to_truth;  // map landmark id -> truth id, -1 unmatched
  std::vector<int> truth_class;   // truth id -> class
};

TruthResolution resolve_map_truth(const SemanticPoleMap& map,
                                  std::span<const Landmark> truth,
                                  double match_radius = 1.0);

// Association diagnostics over a run. Frames without observations are
// skipped. Accuracy fields require truth ids in the log plus a resolution;
// they stay empty otherwise.
AssocDiag association_diagnostics(const AssociationLog& log,
                                  const TruthResolution* resolution = nullptr);

}  // namespace poleloc
