#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poleloc/assoc_log.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/types.hpp"

namespace poleloc {

// Weighting variants: plain filter, inconsistency term, semantic nearest
// neighbor, and both combined.
enum class Variant { pf, i_pf, n_pf, in_pf };

const char* to_string(Variant variant);
Variant variant_from_string(const std::string& name);

struct FilterConfig {
  int n_particles = 500;
  double sigma_geo = 1.0;       // std of the geometric Gaussian, meters
  double sigma_sem = 0.5;       // std of the inconsistency Gaussian
  double gate_distance = 5.0;   // association distance clamp, meters
  Variant variant = Variant::pf;
  double resample_threshold = 0.5;  // resample when ESS < threshold * n
  std::array<double, 3> init_spread = {0.5, 0.5, 0.05};  // m, m, rad
  std::uint64_t seed = 0;
  // Process noise for predict(): per-axis std = odo_noise_scale * |component|
  // plus the floor, mirroring the odometry corruption model.
  double odo_noise_scale = 0.0;
  double odo_floor_trans = 0.01;
  double odo_floor_rot = 0.002;
  bool mean_inconsistency = false;  // average the inconsistency log terms
  int threads = 1;
};

struct Particle {
  Pose2 pose;
  double log_weight = 0.0;  // normalized after every weight update
};

struct FilterEvents {
  int weight_degeneracies = 0;  // total probability underflowed, reset uniform
  int heading_fallbacks = 0;    // circular mean undefined, used best particle
  int resamples = 0;
};

// Per-observation association outcome for one particle pose. A gated pair
// has id -1, distance clamped to the gate, and inconsistency 1.
struct AssociationResult {
  std::vector<int> pairs;
  std::vector<double> distances;
  std::vector<std::uint8_t> gated;
  std::vector<double> inconsistencies;
};

struct FilterState {
  FilterConfig config;
  std::vector<Particle> particles;
  std::uint64_t step_index = 0;
  FilterEvents events;
  // Associations from the most recent weight update, one per particle.
  std::vector<AssociationResult> last_associations;

  std::vector<double> weights() const;  // normalized, linear scale
  double effective_sample_size() const;
};

FilterState init_filter(const Pose2& initial_pose, const FilterConfig& config);

// Composes each particle with the odometry increment perturbed by
// independent zero-mean Gaussian noise per axis. Weights unchanged.
void predict(FilterState& state, const Pose2& odom,
             const std::array<double, 3>& noise_std);

// Nearest landmark over all layers for each observation projected through
// `pose`. Distances clamp at the gate.
AssociationResult associate_nn(std::span<const Observation> obs, const Pose2& pose,
                               const SemanticPoleMap& map, double gate_distance);

// As associate_nn, but each observation searches only the layer matching its
// class. A missing or empty layer gates the pair.
AssociationResult associate_semantic_nn(std::span<const Observation> obs,
                                        const Pose2& pose,
                                        const SemanticPoleMap& map,
                                        double gate_distance);

// Sum over observations of log N(d_j; 0, sigma_geo^2). Empty input -> 0.
double geometric_log_likelihood(std::span<const double> distances, double sigma_geo);

// Per observation, 1 - cos(landmark feature, observed feature); gated pairs
// get the wrong-correspondence value 1.
std::vector<double> semantic_inconsistency(const AssociationResult& assoc,
                                           std::span<const Observation> obs,
                                           const SemanticPoleMap& map);

// Sum over observations of log N(I_j; 0, sigma_sem^2).
double inconsistency_log_likelihood(std::span<const double> incons, double sigma_sem);

// Associates per the configured variant, accumulates log-likelihoods into
// the particle log weights, and renormalizes in log space. Empty observation
// lists leave the weights unchanged.
void update_weights(FilterState& state, std::span<const Observation> obs,
                    const SemanticPoleMap& map);

// Systematic resampling, triggered only when ESS < threshold * n.
// Returns whether resampling ran.
bool resample(FilterState& state);

// Weighted mean position and circular weighted mean heading.
Pose2 estimate_pose(const FilterState& state, bool* heading_fallback = nullptr);

struct StepResult {
  Pose2 estimate;
  FrameAssociations associations;
};

// One filter cycle: predict, weight update, conditional resample, estimate.
// Process noise derives from the config's odometry noise model.
StepResult step(FilterState& state, const Pose2& odom,
                std::span<const Observation> obs, const SemanticPoleMap& map,
                std::int64_t frame = -1);

// Weight update, conditional resample, and estimate without motion; used for
// the first localization frame where no odometry increment exists yet.
StepResult measurement_step(FilterState& state, std::span<const Observation> obs,
                            const SemanticPoleMap& map, std::int64_t frame = -1);

}  // namespace poleloc
