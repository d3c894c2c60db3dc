#include "poleloc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "poleloc/errors.hpp"
#include "poleloc/rng.hpp"

namespace poleloc {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_pdf(double value, double sigma) {
  const double z = value / sigma;
  return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

// Parallel loop over particle indices with a deterministic block split.
// Results must be written to per-index slots; no reductions happen here.
template <typename Fn>
void for_each_particle(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2 * threads) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    raise(ErrorCode::zero_feature, "zero-norm feature vector in cosine similarity");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

AssociationResult associate(std::span<const Observation> obs, const Pose2& pose,
                            const SemanticPoleMap& map, double gate_distance,
                            bool semantic) {
  if (map.empty()) raise(ErrorCode::empty_map, "association against an empty map");

  AssociationResult result;
  const std::size_t m = obs.size();
  result.pairs.assign(m, -1);
  result.distances.assign(m, gate_distance);
  result.gated.assign(m, 0);

  for (std::size_t j = 0; j < m; ++j) {
    const Vec2 world = transform_point(pose, obs[j].circle.x, obs[j].circle.y);
    const KdTree2::Result hit = semantic
        ? map.nearest_in_layer(obs[j].class_id, world.x, world.y)
        : map.nearest_any(world.x, world.y);
    if (hit.id < 0 || hit.dist > gate_distance) {
      result.gated[j] = 1;
      continue;
    }
    result.pairs[j] = hit.id;
    result.distances[j] = hit.dist;
  }
  return result;
}

// Per-variant association and log-likelihood for a single particle.
double particle_log_likelihood(const FilterState& state,
                               std::span<const Observation> obs,
                               const SemanticPoleMap& map,
                               const Pose2& pose, AssociationResult& assoc) {
  const FilterConfig& cfg = state.config;
  const bool semantic_nn =
      cfg.variant == Variant::n_pf || cfg.variant == Variant::in_pf;
  const bool use_inconsistency =
      cfg.variant == Variant::i_pf || cfg.variant == Variant::in_pf;

  assoc = associate(obs, pose, map, cfg.gate_distance, semantic_nn);
  double ll = geometric_log_likelihood(assoc.distances, cfg.sigma_geo);
  assoc.inconsistencies = semantic_inconsistency(assoc, obs, map);
  if (use_inconsistency) {
    double sem = inconsistency_log_likelihood(assoc.inconsistencies, cfg.sigma_sem);
    if (cfg.mean_inconsistency && !obs.empty())
      sem /= static_cast<double>(obs.size());
    ll += sem;
  }
  return ll;
}

void normalize_log_weights(FilterState& state) {
  double max_lw = kNegInf;
  for (const Particle& p : state.particles) max_lw = std::max(max_lw, p.log_weight);
  if (max_lw == kNegInf) {
    // Total probability underflowed; fall back to uniform.
    const double uniform = -std::log(static_cast<double>(state.particles.size()));
    for (Particle& p : state.particles) p.log_weight = uniform;
    ++state.events.weight_degeneracies;
    return;
  }
  double sum = 0.0;
  for (const Particle& p : state.particles) sum += std::exp(p.log_weight - max_lw);
  const double log_norm = max_lw + std::log(sum);
  for (Particle& p : state.particles) p.log_weight -= log_norm;
}

FrameAssociations collect_associations(const FilterState& state,
                                       std::span<const Observation> obs,
                                       const SemanticPoleMap& map,
                                       std::int64_t frame) {
  FrameAssociations fa;
  fa.frame = frame;
  fa.n_particles = static_cast<int>(state.particles.size());
  fa.truth_ids.reserve(obs.size());
  for (const Observation& o : obs) fa.truth_ids.push_back(o.truth_id);
  fa.true_classes.assign(obs.size(), -1);

  for (const AssociationResult& assoc : state.last_associations) {
    AssociationSet* found = nullptr;
    for (AssociationSet& set : fa.sets) {
      if (set.assoc_ids == assoc.pairs) {
        found = &set;
        break;
      }
    }
    if (found) {
      ++found->multiplicity;
      continue;
    }
    AssociationSet set;
    set.multiplicity = 1;
    set.assoc_ids = assoc.pairs;
    set.incons = assoc.inconsistencies;
    set.assoc_classes.reserve(assoc.pairs.size());
    for (int id : assoc.pairs)
      set.assoc_classes.push_back(id >= 0 ? map.landmarks[id].class_id : -1);
    fa.sets.push_back(std::move(set));
  }
  return fa;
}

}  // namespace

const char* to_string(Variant variant) {
  switch (variant) {
    case Variant::pf: return "pf";
    case Variant::i_pf: return "i-pf";
    case Variant::n_pf: return "n-pf";
    case Variant::in_pf: return "in-pf";
  }
  return "pf";
}

Variant variant_from_string(const std::string& name) {
  if (name == "pf") return Variant::pf;
  if (name == "i-pf") return Variant::i_pf;
  if (name == "n-pf") return Variant::n_pf;
  if (name == "in-pf") return Variant::in_pf;
  raise(ErrorCode::config_error, "unknown variant '" + name + "'");
}

std::vector<double> FilterState::weights() const {
  std::vector<double> w;
  w.reserve(particles.size());
  for (const Particle& p : particles) w.push_back(std::exp(p.log_weight));
  return w;
}

double FilterState::effective_sample_size() const {
  double sum_sq = 0.0;
  for (const Particle& p : particles) {
    const double w = std::exp(p.log_weight);
    sum_sq += w * w;
  }
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

FilterState init_filter(const Pose2& initial_pose, const FilterConfig& config) {
  FilterState state;
  state.config = config;
  state.particles.resize(config.n_particles);
  const double uniform = -std::log(static_cast<double>(config.n_particles));
  for (int i = 0; i < config.n_particles; ++i) {
    auto rng = make_rng(config.seed, RngStream::filter_init, 0, i);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Particle& p = state.particles[i];
    p.pose.x = initial_pose.x + config.init_spread[0] * gauss(rng);
    p.pose.y = initial_pose.y + config.init_spread[1] * gauss(rng);
    p.pose.theta = wrap_angle(initial_pose.theta + config.init_spread[2] * gauss(rng));
    p.log_weight = uniform;
  }
  return state;
}

void predict(FilterState& state, const Pose2& odom,
             const std::array<double, 3>& noise_std) {
  const int n = static_cast<int>(state.particles.size());
  for_each_particle(n, state.config.threads, [&](int i) {
    auto rng = make_rng(state.config.seed, RngStream::predict, state.step_index, i);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Pose2 noisy = odom;
    noisy.x += noise_std[0] * gauss(rng);
    noisy.y += noise_std[1] * gauss(rng);
    noisy.theta = wrap_angle(noisy.theta + noise_std[2] * gauss(rng));
    state.particles[i].pose = compose(state.particles[i].pose, noisy);
  });
}

AssociationResult associate_nn(std::span<const Observation> obs, const Pose2& pose,
                               const SemanticPoleMap& map, double gate_distance) {
  return associate(obs, pose, map, gate_distance, false);
}

AssociationResult associate_semantic_nn(std::span<const Observation> obs,
                                        const Pose2& pose,
                                        const SemanticPoleMap& map,
                                        double gate_distance) {
  return associate(obs, pose, map, gate_distance, true);
}

double geometric_log_likelihood(std::span<const double> distances, double sigma_geo) {
  double ll = 0.0;
  for (double d : distances) ll += log_normal_pdf(d, sigma_geo);
  return ll;
}

std::vector<double> semantic_inconsistency(const AssociationResult& assoc,
                                           std::span<const Observation> obs,
                                           const SemanticPoleMap& map) {
  std::vector<double> incons(obs.size(), 1.0);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    const int id = assoc.pairs[j];
    if (id < 0) continue;  // gated: wrong-correspondence value 1
    incons[j] = 1.0 - cosine_similarity(map.landmarks[id].feature, obs[j].feature);
  }
  return incons;
}

double inconsistency_log_likelihood(std::span<const double> incons, double sigma_sem) {
  double ll = 0.0;
  for (double value : incons) ll += log_normal_pdf(value, sigma_sem);
  return ll;
}

void update_weights(FilterState& state, std::span<const Observation> obs,
                    const SemanticPoleMap& map) {
  const int n = static_cast<int>(state.particles.size());
  state.last_associations.assign(n, {});
  if (obs.empty()) return;

  std::vector<double> log_liks(n, 0.0);
  for_each_particle(n, state.config.threads, [&](int i) {
    log_liks[i] = particle_log_likelihood(state, obs, map, state.particles[i].pose,
                                          state.last_associations[i]);
  });
  for (int i = 0; i < n; ++i) state.particles[i].log_weight += log_liks[i];
  normalize_log_weights(state);
}

bool resample(FilterState& state) {
  const int n = static_cast<int>(state.particles.size());
  const double ess = state.effective_sample_size();
  if (ess >= state.config.resample_threshold * n) return false;

  auto rng = make_rng(state.config.seed, RngStream::resample, state.step_index, 0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double start = uniform(rng) / n;

  const std::vector<double> w = state.weights();
  std::vector<Particle> resampled;
  resampled.reserve(n);
  double cumulative = w[0];
  int source = 0;
  const double log_uniform = -std::log(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    const double pointer = start + static_cast<double>(i) / n;
    while (cumulative < pointer && source + 1 < n) cumulative += w[++source];
    Particle p = state.particles[source];
    p.log_weight = log_uniform;
    resampled.push_back(p);
  }
  state.particles = std::move(resampled);
  ++state.events.resamples;
  return true;
}

Pose2 estimate_pose(const FilterState& state, bool* heading_fallback) {
  Pose2 estimate;
  double sin_sum = 0.0, cos_sum = 0.0;
  double best_weight = kNegInf;
  double best_theta = 0.0;
  for (const Particle& p : state.particles) {
    const double w = std::exp(p.log_weight);
    estimate.x += w * p.pose.x;
    estimate.y += w * p.pose.y;
    sin_sum += w * std::sin(p.pose.theta);
    cos_sum += w * std::cos(p.pose.theta);
    if (p.log_weight > best_weight) {
      best_weight = p.log_weight;
      best_theta = p.pose.theta;
    }
  }
  if (heading_fallback) *heading_fallback = false;
  if (std::hypot(sin_sum, cos_sum) < 1e-12) {
    // Antipodal heading mass: circular mean undefined.
    estimate.theta = best_theta;
    if (heading_fallback) *heading_fallback = true;
  } else {
    estimate.theta = wrap_angle(std::atan2(sin_sum, cos_sum));
  }
  return estimate;
}

static StepResult finish_step(FilterState& state, std::span<const Observation> obs,
                              const SemanticPoleMap& map, std::int64_t frame) {
  update_weights(state, obs, map);
  resample(state);
  StepResult result;
  bool fallback = false;
  result.estimate = estimate_pose(state, &fallback);
  if (fallback) ++state.events.heading_fallbacks;
  result.associations = collect_associations(state, obs, map, frame);
  return result;
}

StepResult step(FilterState& state, const Pose2& odom,
                std::span<const Observation> obs, const SemanticPoleMap& map,
                std::int64_t frame) {
  ++state.step_index;
  const FilterConfig& cfg = state.config;
  const std::array<double, 3> noise_std = {
      cfg.odo_noise_scale * std::abs(odom.x) + cfg.odo_floor_trans,
      cfg.odo_noise_scale * std::abs(odom.y) + cfg.odo_floor_trans,
      cfg.odo_noise_scale * std::abs(odom.theta) + cfg.odo_floor_rot};
  predict(state, odom, noise_std);
  return finish_step(state, obs, map, frame);
}

StepResult measurement_step(FilterState& state, std::span<const Observation> obs,
                            const SemanticPoleMap& map, std::int64_t frame) {
  return finish_step(state, obs, map, frame);
}

}  // namespace poleloc
