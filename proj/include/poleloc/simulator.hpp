#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "poleloc/types.hpp"

namespace poleloc {

struct WorldSpec {
  double extent = 100.0;  // square world side length, meters
  int n_landmarks = 100;
  int k = 4;   // number of pole-like classes
  int d = 16;  // feature embedding dimension
  std::vector<double> class_mix;  // length-k simplex; empty -> uniform
  double radius_min = 0.1;
  double radius_max = 0.4;
  double feature_noise_std = 0.05;
  double label_flip_prob = 0.1;  // phi_sem, applied per simulated observation
  std::uint64_t seed = 1;
};

struct NoiseSpec {
  double phi_odo = 0.0;       // odometry noise scale, fraction of magnitude
  double phi_obs_drop = 0.0;  // phi_O, observation dropout fraction
  double obs_position_std = 0.05;  // meters
  double odo_floor_trans = 0.01;   // meters
  double odo_floor_rot = 0.002;    // radians
};

struct World {
  WorldSpec spec;
  std::vector<Landmark> landmarks;  // ground truth, index = truth id
  std::vector<std::vector<double>> class_features;  // canonical per class
};

// Uniformly placed landmarks with minimum separation 2 * radius_max, classes
// drawn from class_mix, unit-norm features per class perturbed per landmark.
// Deterministic in the seed.
World generate_world(const WorldSpec& spec);

// Smooth random-walk trajectory with exactly step_length between consecutive
// poses; boundary crossings reflect back into the world.
std::vector<Pose2> generate_trajectory(const World& world, double step_length,
                                       int n_steps, std::uint64_t seed);

// Sensor-frame observations of all landmarks within max_range: Gaussian
// position noise, label flips with probability label_flip_prob (feature
// re-drawn from the flipped class), truth_id always set.
std::vector<Observation> simulate_scan(const World& world, const Pose2& pose,
                                       double max_range, const NoiseSpec& noise,
                                       std::uint64_t seed, std::uint64_t step);

// Perturbs each increment component by zero-mean Gaussian noise with
// std = phi_odo * |component| + floor.
Pose2 corrupt_odometry(const Pose2& gt_increment, double phi_odo,
                       std::uint64_t seed, std::uint64_t step,
                       double floor_trans = 0.01, double floor_rot = 0.002);

// Independently removes each observation with probability phi.
std::vector<Observation> drop_observations(std::vector<Observation> obs, double phi,
                                           std::uint64_t seed, std::uint64_t step);

struct KeyframeSplit {
  std::vector<int> mapping;       // keyframe indices, every delta_d meters
  std::vector<int> localization;  // midpoint frames between keyframe pairs
};

// Greedy keyframe selection by accumulated path length; localization frames
// are the poses nearest the path midpoint of each consecutive keyframe pair.
// The two index sets are disjoint.
KeyframeSplit split_keyframes(std::span<const Pose2> poses, double delta_d);

}  // namespace poleloc
