#pragma once

#include <cstdint>
#include <vector>

namespace poleloc {

// One distinct association set A^k shared by `multiplicity` particles.
// Entries are parallel to the frame's observation list; -1 marks a gated
// (failed) association.
struct AssociationSet {
  int multiplicity = 0;
  std::vector<int> assoc_ids;      // map landmark id per observation
  std::vector<int> assoc_classes;  // class of that landmark
  std::vector<double> incons;      // semantic inconsistency per observation
};

// Per-frame association record. Distinct sets are ordered by first
// occurrence over particle index, so the log is deterministic.
struct FrameAssociations {
  std::int64_t frame = 0;
  int n_particles = 0;
  std::vector<int> truth_ids;     // per observation, -1 unknown
  std::vector<int> true_classes;  // per observation, -1 unknown
  std::vector<AssociationSet> sets;
};

using AssociationLog = std::vector<FrameAssociations>;

}  // namespace poleloc
