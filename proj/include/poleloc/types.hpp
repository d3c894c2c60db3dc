#pragma once

#include <cstdint>
#include <vector>

#include "poleloc/geometry.hpp"

namespace poleloc {

// One semantically labeled LiDAR return in the sensor frame.
// prob is a length-K simplex vector, feature a length-d embedding.
struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  int class_id = 0;
  std::vector<double> prob;
  std::vector<double> feature;
};

// One extracted pole in a single scan.
struct PoleInstance {
  Circle circle;
  std::vector<double> feature;
  std::vector<double> prob;
  int class_id = 0;
  int support = 0;  // number of points that formed the instance
};

// One online pole observation in the sensor frame. truth_id is the
// ground-truth landmark index, available from the simulator only (-1 if
// unknown).
struct Observation {
  Circle circle;
  std::vector<double> feature;
  std::vector<double> prob;
  int class_id = 0;
  int truth_id = -1;
};

// Aggregated map entry: the mean over all instances in one cluster.
struct Landmark {
  Circle circle;
  std::vector<double> feature;
  std::vector<double> prob;
  int class_id = 0;
  int obs_count = 0;
};

// One frame of pole observations (or raw labeled points, in point-level
// mode) together with the frame id and the ground-truth pose.
struct Scan {
  std::int64_t frame = 0;
  Pose2 pose;
  int k = 0;  // number of pole-like classes
  int d = 0;  // feature embedding dimension
  std::vector<Observation> observations;
  std::vector<LabeledPoint> points;
};

struct TrajectoryPoint {
  std::int64_t step = 0;
  Pose2 pose;
};

using Trajectory = std::vector<TrajectoryPoint>;

inline int argmax_lowest(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace poleloc
