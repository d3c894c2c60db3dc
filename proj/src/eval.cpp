#include "poleloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poleloc/errors.hpp"

namespace poleloc {

namespace {

// Augmenting-path maximum bipartite matching on the within-radius graph.
bool augment(int pred, const std::vector<std::vector<int>>& candidates,
             std::vector<char>& visited, std::vector<int>& truth_owner) {
  for (int t : candidates[pred]) {
    if (visited[t]) continue;
    visited[t] = 1;
    if (truth_owner[t] < 0 ||
        augment(truth_owner[t], candidates, visited, truth_owner)) {
      truth_owner[t] = pred;
      return true;
    }
  }
  return false;
}

double finalize_f1(MapScore& score) {
  const double tp = score.n_tp;
  score.precision = (score.n_tp + score.n_fp) > 0 ? tp / (score.n_tp + score.n_fp) : 0.0;
  score.recall = (score.n_tp + score.n_fn) > 0 ? tp / (score.n_tp + score.n_fn) : 0.0;
  score.f1 = (score.precision + score.recall) > 0.0
                 ? 2.0 * score.precision * score.recall /
                       (score.precision + score.recall)
                 : 0.0;
  return score.f1;
}

}  // namespace

MapScore map_f1(const SemanticPoleMap& pred, std::span<const Landmark> truth,
                double match_radius, bool one_to_one) {
  MapScore score;
  const int n_pred = static_cast<int>(pred.landmarks.size());
  const int n_truth = static_cast<int>(truth.size());

  if (!one_to_one) {
    std::vector<char> truth_matched(n_truth, 0);
    for (const Landmark& lm : pred.landmarks) {
      int nearest = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < n_truth; ++t) {
        const double dist = distance2d(lm.circle.x, lm.circle.y,
                                       truth[t].circle.x, truth[t].circle.y);
        if (dist < best) {
          best = dist;
          nearest = t;
        }
      }
      if (nearest >= 0 && best <= match_radius) {
        ++score.n_tp;
        truth_matched[nearest] = 1;
      } else {
        ++score.n_fp;
      }
    }
    for (int t = 0; t < n_truth; ++t) {
      if (!truth_matched[t]) ++score.n_fn;
    }
  } else {
    std::vector<std::vector<int>> candidates(n_pred);
    for (int p = 0; p < n_pred; ++p) {
      for (int t = 0; t < n_truth; ++t) {
        const double dist =
            distance2d(pred.landmarks[p].circle.x, pred.landmarks[p].circle.y,
                       truth[t].circle.x, truth[t].circle.y);
        if (dist <= match_radius) candidates[p].push_back(t);
      }
    }
    std::vector<int> truth_owner(n_truth, -1);
    for (int p = 0; p < n_pred; ++p) {
      std::vector<char> visited(n_truth, 0);
      if (augment(p, candidates, visited, truth_owner)) ++score.n_tp;
    }
    score.n_fp = n_pred - score.n_tp;
    score.n_fn = n_truth - score.n_tp;
  }

  finalize_f1(score);
  return score;
}

LocScore localization_errors(std::span<const TrajectoryPoint> est,
                             std::span<const TrajectoryPoint> truth) {
  if (est.size() != truth.size())
    raise(ErrorCode::trajectory_mismatch, "trajectory lengths differ");

  LocScore score;
  const int n = static_cast<int>(est.size());
  if (n == 0) return score;

  double sum_pos = 0.0, sum_pos_sq = 0.0;
  double sum_ang = 0.0, sum_ang_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    if (est[i].step != truth[i].step)
      raise(ErrorCode::trajectory_mismatch, "trajectory steps do not align");
    const double pos = distance2d(est[i].pose.x, est[i].pose.y, truth[i].pose.x,
                                  truth[i].pose.y);
    const double ang =
        std::abs(wrap_angle(est[i].pose.theta - truth[i].pose.theta)) * 180.0 / kPi;
    sum_pos += pos;
    sum_pos_sq += pos * pos;
    sum_ang += ang;
    sum_ang_sq += ang * ang;
  }
  score.delta_pos = sum_pos / n;
  score.rmse_pos = std::sqrt(sum_pos_sq / n);
  score.delta_ang = sum_ang / n;
  score.rmse_ang = std::sqrt(sum_ang_sq / n);
  return score;
}

TruthResolution resolve_map_truth(const SemanticPoleMap& map,
                                  std::span<const Landmark> truth,
                                  double match_radius) {
  TruthResolution res;
  res.map_to_truth.assign(map.landmarks.size(), -1);
  res.truth_class.reserve(truth.size());
  for (const Landmark& lm : truth) res.truth_class.push_back(lm.class_id);

  for (std::size_t i = 0; i < map.landmarks.size(); ++i) {
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < static_cast<int>(truth.size()); ++t) {
      const double dist =
          distance2d(map.landmarks[i].circle.x, map.landmarks[i].circle.y,
                     truth[t].circle.x, truth[t].circle.y);
      if (dist < best) {
        best = dist;
        nearest = t;
      }
    }
    if (nearest >= 0 && best <= match_radius) res.map_to_truth[i] = nearest;
  }
  return res;
}

AssocDiag association_diagnostics(const AssociationLog& log,
                                  const TruthResolution* resolution) {
  AssocDiag diag;
  double sum_sets = 0.0;
  double sum_cos = 0.0;
  double sum_correct = 0.0;
  double sum_class = 0.0;
  int frames = 0;
  int truth_frames = 0;

  for (const FrameAssociations& fa : log) {
    if (fa.truth_ids.empty()) continue;  // no observations this frame
    ++frames;
    sum_sets += static_cast<double>(fa.sets.size());

    long pairs = 0;
    double frame_cos = 0.0;
    long matched_pairs = 0;
    double frame_correct = 0.0;
    double frame_class = 0.0;
    const bool has_truth =
        resolution != nullptr &&
        std::any_of(fa.truth_ids.begin(), fa.truth_ids.end(),
                    [](int id) { return id >= 0; });

    for (const AssociationSet& set : fa.sets) {
      for (std::size_t j = 0; j < set.assoc_ids.size(); ++j) {
        pairs += set.multiplicity;
        frame_cos += set.multiplicity * (1.0 - set.incons[j]);
        const int assoc = set.assoc_ids[j];
        if (assoc < 0) continue;  // gated: no correspondence formed
        matched_pairs += set.multiplicity;
        if (has_truth && fa.truth_ids[j] >= 0) {
          const int resolved = resolution->map_to_truth[assoc];
          if (resolved == fa.truth_ids[j])
            frame_correct += set.multiplicity;
          const int true_class = resolution->truth_class[fa.truth_ids[j]];
          if (set.assoc_classes[j] == true_class) frame_class += set.multiplicity;
        }
      }
    }
    if (pairs > 0) sum_cos += frame_cos / pairs;
    if (has_truth && matched_pairs > 0) {
      ++truth_frames;
      sum_correct += frame_correct / matched_pairs;
      sum_class += frame_class / matched_pairs;
    }
  }

  if (frames > 0) {
    diag.n_assoc_sets = sum_sets / frames;
    diag.phi_a_cosine = sum_cos / frames;
  }
  if (truth_frames > 0) {
    diag.assoc_accuracy = sum_correct / truth_frames;
    diag.class_accuracy = sum_class / truth_frames;
  }
  return diag;
}

}  // namespace poleloc
