#include "poleloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poleloc/errors.hpp"
#include "poleloc/rng.hpp"

namespace poleloc {

namespace {

// Peak probability assigned to an observation's predicted class; the rest is
// spread uniformly so argmax(prob) always equals class_id for k >= 2.
constexpr double kObsProbPeak = 0.8;
constexpr double kTrajectoryTurnStd = 0.15;  // radians per step

std::vector<double> normalized(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) raise(ErrorCode::zero_feature, "cannot normalize zero vector");
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> peaked_prob(int class_id, int k) {
  if (k == 1) return {1.0};
  std::vector<double> prob(k, (1.0 - kObsProbPeak) / (k - 1));
  prob[class_id] = kObsProbPeak;
  return prob;
}

int sample_class(const std::vector<double>& mix, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  for (int c = 0; c < static_cast<int>(mix.size()); ++c) {
    u -= mix[c];
    if (u <= 0.0) return c;
  }
  return static_cast<int>(mix.size()) - 1;
}

// Canonical class features: orthonormalized Gaussian draws when d >= k, so
// cross-class similarity is exactly zero; plain unit vectors otherwise.
std::vector<std::vector<double>> make_class_features(int k, int d,
                                                     std::uint64_t seed) {
  auto rng = make_rng(seed, RngStream::world, 0, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> features;
  features.reserve(k);
  for (int c = 0; c < k; ++c) {
    std::vector<double> f(d);
    for (double& x : f) x = gauss(rng);
    if (d >= k) {
      for (const auto& prev : features) {
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += f[j] * prev[j];
        for (int j = 0; j < d; ++j) f[j] -= dot * prev[j];
      }
    }
    features.push_back(normalized(std::move(f)));
  }
  return features;
}

std::vector<double> perturbed_feature(const std::vector<double>& canonical,
                                      double noise_std, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> f = canonical;
  if (noise_std > 0.0) {
    for (double& x : f) x += noise_std * gauss(rng);
  }
  return normalized(std::move(f));
}

}  // namespace

World generate_world(const WorldSpec& spec) {
  if (spec.n_landmarks < 1)
    raise(ErrorCode::config_error, "world needs at least one landmark");
  std::vector<double> mix = spec.class_mix;
  if (mix.empty()) mix.assign(spec.k, 1.0 / spec.k);

  World world;
  world.spec = spec;
  world.class_features = make_class_features(spec.k, spec.d, spec.seed);

  auto rng = make_rng(spec.seed, RngStream::world, 0, 1);
  std::uniform_real_distribution<double> place(0.0, spec.extent);
  std::uniform_real_distribution<double> radius(spec.radius_min, spec.radius_max);

  const double min_sep = 2.0 * spec.radius_max;
  const long max_attempts = 1000L * spec.n_landmarks;
  long attempts = 0;
  while (static_cast<int>(world.landmarks.size()) < spec.n_landmarks) {
    if (++attempts > max_attempts)
      raise(ErrorCode::packing_failed,
            "could not place landmarks with the required separation");
    const double x = place(rng);
    const double y = place(rng);
    bool clear = true;
    for (const Landmark& lm : world.landmarks) {
      if (distance2d(x, y, lm.circle.x, lm.circle.y) < min_sep) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;

    Landmark lm;
    lm.circle = Circle{x, y, radius(rng)};
    lm.class_id = sample_class(mix, rng);
    lm.feature = perturbed_feature(world.class_features[lm.class_id],
                                   spec.feature_noise_std, rng);
    lm.prob = peaked_prob(lm.class_id, spec.k);
    lm.obs_count = 1;
    world.landmarks.push_back(std::move(lm));
  }
  // Canonical landmark order, matching the map serialization order, so the
  // truth id of an observation equals its row in the written truth map.
  std::sort(world.landmarks.begin(), world.landmarks.end(),
            [](const Landmark& a, const Landmark& b) {
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              if (a.circle.x != b.circle.x) return a.circle.x < b.circle.x;
              return a.circle.y < b.circle.y;
            });
  return world;
}

std::vector<Pose2> generate_trajectory(const World& world, double step_length,
                                       int n_steps, std::uint64_t seed) {
  const double extent = world.spec.extent;
  auto rng = make_rng(seed, RngStream::trajectory, 0, 0);
  std::uniform_real_distribution<double> within(0.25 * extent, 0.75 * extent);
  std::uniform_real_distribution<double> any_heading(-kPi, kPi);
  std::normal_distribution<double> turn(0.0, kTrajectoryTurnStd);

  std::vector<Pose2> poses;
  poses.reserve(std::max(n_steps, 0));
  if (n_steps <= 0) return poses;

  Pose2 pose{within(rng), within(rng), any_heading(rng)};
  poses.push_back(pose);
  for (int i = 1; i < n_steps; ++i) {
    double heading = wrap_angle(pose.theta + turn(rng));
    // Bounce off walls by mirroring the heading before stepping, so every
    // step is a straight segment of exactly step_length inside the extent.
    double nx = 0.0, ny = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      nx = pose.x + step_length * std::cos(heading);
      ny = pose.y + step_length * std::sin(heading);
      if (nx >= 0.0 && nx <= extent && ny >= 0.0 && ny <= extent) break;
      if (nx < 0.0 || nx > extent) heading = wrap_angle(kPi - heading);
      if (ny < 0.0 || ny > extent) heading = wrap_angle(-heading);
      if (attempt == 6) {
        // Extremely tight corner: head for the center instead.
        heading = std::atan2(0.5 * extent - pose.y, 0.5 * extent - pose.x);
      }
    }
    pose = Pose2{nx, ny, heading};
    poses.push_back(pose);
  }
  return poses;
}

std::vector<Observation> simulate_scan(const World& world, const Pose2& pose,
                                       double max_range, const NoiseSpec& noise,
                                       std::uint64_t seed, std::uint64_t step) {
  std::vector<Observation> observations;
  const int k = world.spec.k;
  for (int id = 0; id < static_cast<int>(world.landmarks.size()); ++id) {
    const Landmark& lm = world.landmarks[id];
    if (distance2d(lm.circle.x, lm.circle.y, pose.x, pose.y) > max_range) continue;

    auto rng = make_rng(seed, RngStream::scan, step, static_cast<std::uint64_t>(id));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const Vec2 local = inverse_transform_point(pose, lm.circle.x, lm.circle.y);
    Observation obs;
    obs.circle.x = local.x + noise.obs_position_std * gauss(rng);
    obs.circle.y = local.y + noise.obs_position_std * gauss(rng);
    obs.circle.r = lm.circle.r;
    obs.truth_id = id;

    int observed_class = lm.class_id;
    const bool flip =
        k > 1 && uniform(rng) < world.spec.label_flip_prob;
    if (flip) {
      int offset = 1 + static_cast<int>(uniform(rng) * (k - 1));
      offset = std::min(offset, k - 1);
      observed_class = (lm.class_id + offset) % k;
      obs.feature = perturbed_feature(world.class_features[observed_class],
                                      world.spec.feature_noise_std, rng);
    } else {
      obs.feature = world.spec.feature_noise_std > 0.0
                        ? perturbed_feature(lm.feature,
                                            world.spec.feature_noise_std, rng)
                        : lm.feature;
    }
    obs.class_id = observed_class;
    obs.prob = peaked_prob(observed_class, k);
    observations.push_back(std::move(obs));
  }
  return observations;
}

Pose2 corrupt_odometry(const Pose2& gt_increment, double phi_odo,
                       std::uint64_t seed, std::uint64_t step,
                       double floor_trans, double floor_rot) {
  auto rng = make_rng(seed, RngStream::odometry, step, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Pose2 out = gt_increment;
  out.x += (phi_odo * std::abs(gt_increment.x) + floor_trans) * gauss(rng);
  out.y += (phi_odo * std::abs(gt_increment.y) + floor_trans) * gauss(rng);
  out.theta = wrap_angle(
      out.theta + (phi_odo * std::abs(gt_increment.theta) + floor_rot) * gauss(rng));
  return out;
}

std::vector<Observation> drop_observations(std::vector<Observation> obs, double phi,
                                           std::uint64_t seed, std::uint64_t step) {
  if (phi <= 0.0) return obs;
  auto rng = make_rng(seed, RngStream::drop, step, 0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Observation> kept;
  kept.reserve(obs.size());
  for (Observation& o : obs) {
    if (uniform(rng) >= phi) kept.push_back(std::move(o));
  }
  return kept;
}

KeyframeSplit split_keyframes(std::span<const Pose2> poses, double delta_d) {
  if (delta_d <= 0.0) raise(ErrorCode::config_error, "delta_d must be positive");
  KeyframeSplit split;
  if (poses.empty()) return split;

  std::vector<double> path(poses.size(), 0.0);
  for (std::size_t i = 1; i < poses.size(); ++i)
    path[i] = path[i - 1] +
              distance2d(poses[i].x, poses[i].y, poses[i - 1].x, poses[i - 1].y);

  split.mapping.push_back(0);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (path[i] >= path[split.mapping.back()] + delta_d)
      split.mapping.push_back(static_cast<int>(i));
  }

  std::vector<char> is_keyframe(poses.size(), 0);
  for (int idx : split.mapping) is_keyframe[idx] = 1;

  for (std::size_t pair = 0; pair + 1 < split.mapping.size(); ++pair) {
    const double mid =
        0.5 * (path[split.mapping[pair]] + path[split.mapping[pair + 1]]);
    int best = -1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int i = split.mapping[pair]; i <= split.mapping[pair + 1]; ++i) {
      if (is_keyframe[i]) continue;
      const double gap = std::abs(path[i] - mid);
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0) split.localization.push_back(best);
  }
  return split;
}

}  // namespace poleloc
