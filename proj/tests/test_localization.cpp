#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <doctest.h>

#include "poleloc/errors.hpp"
#include "poleloc/localization.hpp"
#include "poleloc/pipeline.hpp"
#include "poleloc/simulator.hpp"

using namespace poleloc;

namespace {

SemanticPoleMap toy_map(const std::vector<Landmark>& landmarks, int k, int d) {
  SemanticPoleMap map;
  map.k = k;
  map.d = d;
  map.landmarks = landmarks;
  map.rebuild_indexes();
  return map;
}

Landmark make_landmark(double x, double y, int class_id, int k,
                       std::vector<double> feature) {
  Landmark lm;
  lm.circle = Circle{x, y, 0.3};
  lm.class_id = class_id;
  lm.prob.assign(k, 0.0);
  lm.prob[class_id] = 1.0;
  lm.feature = std::move(feature);
  lm.obs_count = 1;
  return lm;
}

Observation make_obs(double x, double y, int class_id, int k,
                     std::vector<double> feature, int truth_id = -1) {
  Observation obs;
  obs.circle = Circle{x, y, 0.3};
  obs.class_id = class_id;
  obs.prob.assign(k, 0.0);
  obs.prob[class_id] = 1.0;
  obs.feature = std::move(feature);
  obs.truth_id = truth_id;
  return obs;
}

FilterConfig quiet_config(int n_particles, Variant variant = Variant::pf) {
  FilterConfig config;
  config.n_particles = n_particles;
  config.variant = variant;
  config.init_spread = {0.0, 0.0, 0.0};
  config.odo_noise_scale = 0.0;
  config.odo_floor_trans = 0.0;
  config.odo_floor_rot = 0.0;
  config.resample_threshold = 0.0;  // never resample
  return config;
}

constexpr double kLogN01 = -0.91893853320467274178;  // log N(0; 0, 1)

}  // namespace

TEST_CASE("init_filter places particles and uniform weights") {
  FilterConfig config = quiet_config(16);
  const FilterState state = init_filter(Pose2{2, 3, 0.4}, config);
  for (const Particle& p : state.particles) {
    CHECK(p.pose.x == doctest::Approx(2.0));
    CHECK(p.pose.y == doctest::Approx(3.0));
    CHECK(p.pose.theta == doctest::Approx(0.4));
  }
  for (double w : state.weights()) CHECK(w == doctest::Approx(1.0 / 16));
}

TEST_CASE("init_filter sample mean matches the law of large numbers") {
  FilterConfig config = quiet_config(10000);
  config.init_spread = {0.5, 0.5, 0.05};
  config.seed = 11;
  const FilterState state = init_filter(Pose2{1, -2, 0}, config);
  double mean_x = 0.0;
  for (const Particle& p : state.particles) mean_x += p.pose.x;
  mean_x /= state.particles.size();
  CHECK(std::abs(mean_x - 1.0) < 3.0 * 0.5 / std::sqrt(10000.0));
}

TEST_CASE("predict composes poses in the particle frame") {
  FilterConfig config = quiet_config(1);
  FilterState state = init_filter(Pose2{0, 0, kPi / 2}, config);

  predict(state, Pose2{0, 0, 0}, {0, 0, 0});
  CHECK(state.particles[0].pose.x == doctest::Approx(0.0));
  CHECK(state.particles[0].pose.theta == doctest::Approx(kPi / 2));

  predict(state, Pose2{1, 0, 0}, {0, 0, 0});
  CHECK(state.particles[0].pose.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(state.particles[0].pose.y == doctest::Approx(1.0));
  CHECK(state.particles[0].pose.theta == doctest::Approx(kPi / 2));
}

TEST_CASE("predict noise std tracks the configured std") {
  FilterConfig config = quiet_config(10000);
  config.seed = 3;
  FilterState state = init_filter(Pose2{}, config);
  predict(state, Pose2{1, 0, 0}, {0.1, 0.1, 0.01});
  double mean = 0.0, sq = 0.0;
  for (const Particle& p : state.particles) {
    mean += p.pose.x;
    sq += p.pose.x * p.pose.x;
  }
  mean /= state.particles.size();
  const double std_x = std::sqrt(sq / state.particles.size() - mean * mean);
  CHECK(std_x > 0.09);
  CHECK(std_x < 0.11);
}

TEST_CASE("associate_nn picks the globally nearest landmark") {
  const auto map = toy_map({make_landmark(1, 0, 0, 1, {1.0}),
                            make_landmark(3, 0, 0, 1, {1.0})},
                           1, 1);
  const std::vector<Observation> obs = {make_obs(0, 0, 0, 1, {1.0})};
  const auto assoc = associate_nn(obs, Pose2{}, map, 5.0);
  CHECK(assoc.pairs[0] == 0);
  CHECK(assoc.distances[0] == doctest::Approx(1.0));
  CHECK_FALSE(assoc.gated[0]);

  const std::vector<Observation> on_landmark = {make_obs(1, 0, 0, 1, {1.0})};
  const auto exact = associate_nn(on_landmark, Pose2{}, map, 5.0);
  CHECK(exact.distances[0] == doctest::Approx(0.0));
}

TEST_CASE("associate_nn clamps beyond the gate") {
  const auto map = toy_map({make_landmark(7, 0, 0, 1, {1.0})}, 1, 1);
  const std::vector<Observation> far = {make_obs(0, 0, 0, 1, {1.0})};
  const auto assoc = associate_nn(far, Pose2{}, map, 5.0);
  CHECK(assoc.distances[0] == doctest::Approx(5.0));
  CHECK(assoc.gated[0] == 1);
  CHECK(assoc.pairs[0] == -1);
}

TEST_CASE("associate_nn rejects an empty map") {
  SemanticPoleMap empty;
  CHECK_THROWS_WITH_AS(associate_nn({}, Pose2{}, empty, 5.0),
                       doctest::Contains("EmptyMap"), Error);
}

TEST_CASE("associate_semantic_nn searches only the matching layer") {
  const auto map = toy_map({make_landmark(1, 0, 1, 2, {1.0, 0.0}),
                            make_landmark(3, 0, 0, 2, {0.0, 1.0})},
                           2, 2);
  const std::vector<Observation> obs = {make_obs(0, 0, 0, 2, {0.0, 1.0})};
  const auto semantic = associate_semantic_nn(obs, Pose2{}, map, 5.0);
  CHECK(semantic.pairs[0] == 1);
  CHECK(semantic.distances[0] == doctest::Approx(3.0));

  // All landmarks in the observation's class: identical to plain NN.
  const auto same_class = toy_map({make_landmark(1, 0, 0, 2, {1.0, 0.0}),
                                   make_landmark(3, 0, 0, 2, {1.0, 0.0})},
                                  2, 2);
  const auto plain = associate_nn(obs, Pose2{}, same_class, 5.0);
  const auto restricted = associate_semantic_nn(obs, Pose2{}, same_class, 5.0);
  CHECK(plain.pairs == restricted.pairs);
  CHECK(plain.distances[0] == doctest::Approx(restricted.distances[0]));

  // Missing layer gates the pair.
  const std::vector<Observation> unknown_class = {make_obs(0, 0, 1, 2, {1.0, 0.0})};
  const auto gated = associate_semantic_nn(unknown_class, Pose2{}, same_class, 5.0);
  CHECK(gated.pairs[0] == -1);
  CHECK(gated.distances[0] == doctest::Approx(5.0));
}

TEST_CASE("semantic NN distance never beats plain NN distance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> place(0.0, 30.0);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Landmark> landmarks;
    for (int i = 0; i < 12; ++i)
      landmarks.push_back(make_landmark(place(rng), place(rng), cls(rng), 3,
                                        {1.0, 0.0}));
    const auto map = toy_map(landmarks, 3, 2);
    std::vector<Observation> obs;
    for (int i = 0; i < 5; ++i)
      obs.push_back(make_obs(place(rng) - 15.0, place(rng) - 15.0, cls(rng), 3,
                             {1.0, 0.0}));
    const Pose2 pose{place(rng), place(rng), place(rng) / 10.0};
    const auto plain = associate_nn(obs, pose, map, 5.0);
    const auto semantic = associate_semantic_nn(obs, pose, map, 5.0);
    for (std::size_t j = 0; j < obs.size(); ++j)
      CHECK(semantic.distances[j] >= plain.distances[j] - 1e-12);
  }
}

TEST_CASE("geometric_log_likelihood frozen values") {
  CHECK(geometric_log_likelihood({}, 1.0) == 0.0);
  const std::vector<double> zero = {0.0};
  CHECK(geometric_log_likelihood(zero, 1.0) == doctest::Approx(kLogN01).epsilon(1e-12));
  // log N(1;0,1) + log N(2;0,1) computed independently: -4.337877066409345
  const std::vector<double> pair = {1.0, 2.0};
  CHECK(geometric_log_likelihood(pair, 1.0) ==
        doctest::Approx(-4.337877066409345).epsilon(1e-12));
}

TEST_CASE("semantic_inconsistency spans [0, 2]") {
  const auto map = toy_map({make_landmark(0, 0, 0, 1, {1.0, 0.0})}, 1, 2);
  AssociationResult assoc;
  assoc.pairs = {0};
  assoc.distances = {0.0};
  assoc.gated = {0};

  const std::vector<Observation> parallel = {make_obs(0, 0, 0, 1, {2.0, 0.0})};
  auto incons = semantic_inconsistency(assoc, parallel, map);
  CHECK(incons[0] == doctest::Approx(0.0));
  const std::vector<Observation> orthogonal = {make_obs(0, 0, 0, 1, {0.0, 1.0})};
  incons = semantic_inconsistency(assoc, orthogonal, map);
  CHECK(incons[0] == doctest::Approx(1.0));
  const std::vector<Observation> antiparallel = {make_obs(0, 0, 0, 1, {-1.0, 0.0})};
  incons = semantic_inconsistency(assoc, antiparallel, map);
  CHECK(incons[0] == doctest::Approx(2.0));

  const std::vector<Observation> zero_feature = {make_obs(0, 0, 0, 1, {0.0, 0.0})};
  CHECK_THROWS_WITH_AS(semantic_inconsistency(assoc, zero_feature, map),
                       doctest::Contains("ZeroFeature"), Error);

  AssociationResult gated;
  gated.pairs = {-1};
  gated.distances = {5.0};
  gated.gated = {1};
  const std::vector<Observation> any = {make_obs(0, 0, 0, 1, {1.0, 1.0})};
  incons = semantic_inconsistency(gated, any, map);
  CHECK(incons[0] == doctest::Approx(1.0));
}

TEST_CASE("inconsistency_log_likelihood frozen values and monotonicity") {
  const std::vector<double> zeros = {0.0, 0.0, 0.0};
  const double max_value = inconsistency_log_likelihood(zeros, 0.5);
  CHECK(max_value ==
        doctest::Approx(3.0 * (-std::log(0.5) - 0.91893853320467274178)));

  double previous = max_value;
  for (double i : {0.2, 0.5, 1.0, 1.5, 2.0}) {
    const std::vector<double> value = {i, 0.0, 0.0};
    const double ll = inconsistency_log_likelihood(value, 0.5);
    CHECK(ll < previous);
    previous = ll;
  }
  // log N(1; 0, 0.25) = -2.225791352644727 evaluated independently
  const std::vector<double> one = {1.0};
  CHECK(inconsistency_log_likelihood(one, 0.5) ==
        doctest::Approx(-2.225791352644727).epsilon(1e-12));
}

TEST_CASE("update_weights normalization and symmetry") {
  const auto map = toy_map({make_landmark(2, 0, 0, 1, {1.0})}, 1, 1);
  const std::vector<Observation> obs = {make_obs(1, 0, 0, 1, {1.0})};

  FilterState single = init_filter(Pose2{}, quiet_config(1));
  update_weights(single, obs, map);
  CHECK(single.weights()[0] == doctest::Approx(1.0).epsilon(1e-12));

  FilterState pair = init_filter(Pose2{0.5, 0.5, 0}, quiet_config(2));
  update_weights(pair, obs, map);
  const auto w = pair.weights();
  CHECK(w[0] == doctest::Approx(w[1]).epsilon(1e-12));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("weights stay a probability vector across noisy updates") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> place(0.0, 20.0);
  std::vector<Landmark> landmarks;
  for (int i = 0; i < 10; ++i)
    landmarks.push_back(make_landmark(place(rng), place(rng), i % 2, 2, {1.0, 0.2}));
  const auto map = toy_map(landmarks, 2, 2);

  FilterConfig config = quiet_config(64, Variant::in_pf);
  config.init_spread = {1.0, 1.0, 0.2};
  config.odo_floor_trans = 0.05;
  config.odo_floor_rot = 0.01;
  config.resample_threshold = 0.5;
  FilterState state = init_filter(Pose2{10, 10, 0}, config);
  for (int t = 0; t < 10; ++t) {
    std::vector<Observation> obs;
    for (int j = 0; j < 3; ++j)
      obs.push_back(make_obs(place(rng) - 10.0, place(rng) - 10.0, j % 2, 2,
                             {1.0, 0.1 * j}));
    step(state, Pose2{0.5, 0, 0.02}, obs, map);
    double sum = 0.0;
    for (double w : state.weights()) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("combined variant likelihood never exceeds the geometric-only term") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> place(0.0, 20.0);
  std::uniform_int_distribution<int> cls(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Landmark> landmarks;
    for (int i = 0; i < 8; ++i)
      landmarks.push_back(make_landmark(place(rng), place(rng), cls(rng), 2,
                                        {1.0, place(rng) / 20.0}));
    const auto map = toy_map(landmarks, 2, 2);
    std::vector<Observation> obs;
    for (int j = 0; j < 4; ++j)
      obs.push_back(make_obs(place(rng) - 10.0, place(rng) - 10.0, cls(rng), 2,
                             {place(rng) / 20.0, 1.0}));
    const Pose2 pose{place(rng), place(rng), 0.3};

    const auto assoc = associate_semantic_nn(obs, pose, map, 5.0);
    const double geo = geometric_log_likelihood(assoc.distances, 1.0);
    const auto incons = semantic_inconsistency(assoc, obs, map);
    const double combined = geo + inconsistency_log_likelihood(incons, 0.5);
    CHECK(combined <= geo + 1e-12);
  }
}

TEST_CASE("weight ordering: plain >= semantic >= truth likelihood") {
  // Random worlds with exact labels: the semantic association distance sits
  // between the plain NN distance and the true-correspondence distance.
  for (int trial = 0; trial < 100; ++trial) {
    WorldSpec spec;
    spec.extent = 60.0;
    spec.n_landmarks = 40;
    spec.k = 3;
    spec.d = 8;
    spec.label_flip_prob = 0.0;
    spec.feature_noise_std = 0.05;
    spec.seed = 1000 + trial;
    const World world = generate_world(spec);
    const auto map = truth_map_from_world(world);

    auto rng = std::mt19937_64(trial);
    std::uniform_real_distribution<double> in_world(10.0, 50.0);
    std::uniform_real_distribution<double> heading(-kPi, kPi);
    std::normal_distribution<double> perturb(0.0, 2.0);

    const Pose2 truth{in_world(rng), in_world(rng), heading(rng)};
    NoiseSpec noise;
    noise.obs_position_std = 0.05;
    const auto obs = simulate_scan(world, truth, 25.0, noise, spec.seed, trial);
    if (obs.empty()) continue;

    const Pose2 particle{truth.x + perturb(rng), truth.y + perturb(rng),
                         wrap_angle(truth.theta + 0.1 * perturb(rng))};

    const double gate = 5.0;
    const auto plain = associate_nn(obs, particle, map, gate);
    const auto semantic = associate_semantic_nn(obs, particle, map, gate);
    std::vector<double> truth_dist;
    for (const Observation& o : obs) {
      const Vec2 world_pos = transform_point(particle, o.circle.x, o.circle.y);
      const Landmark& lm = map.landmarks[o.truth_id];
      truth_dist.push_back(std::min(
          gate, distance2d(world_pos.x, world_pos.y, lm.circle.x, lm.circle.y)));
    }
    for (std::size_t j = 0; j < obs.size(); ++j) {
      CHECK(plain.distances[j] <= semantic.distances[j] + 1e-12);
      CHECK(semantic.distances[j] <= truth_dist[j] + 1e-12);
    }
    const double p_plain = geometric_log_likelihood(plain.distances, 1.0);
    const double p_semantic = geometric_log_likelihood(semantic.distances, 1.0);
    const double p_truth = geometric_log_likelihood(truth_dist, 1.0);
    CHECK(p_plain >= p_semantic - 1e-12);
    CHECK(p_semantic >= p_truth - 1e-12);
  }
}

TEST_CASE("resample triggers on low ESS only") {
  FilterConfig config = quiet_config(8);
  config.resample_threshold = 0.5;
  FilterState state = init_filter(Pose2{}, config);
  CHECK_FALSE(resample(state));  // uniform weights: ESS == n

  for (std::size_t i = 0; i < state.particles.size(); ++i) {
    state.particles[i].pose.x = static_cast<double>(i);
    state.particles[i].log_weight =
        i == 3 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  CHECK(resample(state));
  for (const Particle& p : state.particles) {
    CHECK(p.pose.x == doctest::Approx(3.0));
    CHECK(p.log_weight == doctest::Approx(-std::log(8.0)));
  }
}

TEST_CASE("systematic resampling offspring counts stay within one of n*w") {
  const std::vector<double> weights = {0.5, 0.25, 0.125, 0.125};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    FilterConfig config = quiet_config(4);
    config.resample_threshold = 1.0;
    config.seed = seed;
    FilterState state = init_filter(Pose2{}, config);
    for (std::size_t i = 0; i < 4; ++i) {
      state.particles[i].pose.x = static_cast<double>(i);
      state.particles[i].log_weight = std::log(weights[i]);
    }
    REQUIRE(resample(state));
    std::vector<int> counts(4, 0);
    for (const Particle& p : state.particles)
      ++counts[static_cast<int>(std::lround(p.pose.x))];
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(std::abs(counts[i] - 4.0 * weights[i]) <= 1.0 + 1e-12);
  }
}

TEST_CASE("estimate_pose blends positions and headings") {
  FilterConfig config = quiet_config(2);
  FilterState state = init_filter(Pose2{1, 2, 0.3}, config);
  CHECK(estimate_pose(state).x == doctest::Approx(1.0));
  CHECK(estimate_pose(state).theta == doctest::Approx(0.3));

  state.particles[0].pose = Pose2{0, 0, 170.0 * kPi / 180.0};
  state.particles[1].pose = Pose2{0, 0, -170.0 * kPi / 180.0};
  CHECK(std::abs(estimate_pose(state).theta) == doctest::Approx(kPi).epsilon(1e-9));

  state.particles[0].pose = Pose2{0, 0, 0};
  state.particles[1].pose = Pose2{4, 0, 0};
  state.particles[0].log_weight = std::log(0.75);
  state.particles[1].log_weight = std::log(0.25);
  CHECK(estimate_pose(state).x == doctest::Approx(1.0));
}

TEST_CASE("step holds a fixed point on exact observations") {
  const auto map = toy_map({make_landmark(3, 0, 0, 1, {1.0}),
                            make_landmark(0, 4, 0, 1, {1.0}),
                            make_landmark(-2, -2, 0, 1, {1.0})},
                           1, 1);
  FilterConfig config = quiet_config(32);
  config.resample_threshold = 0.5;
  FilterState state = init_filter(Pose2{1, 1, 0.2}, config);

  // Observations exactly consistent with staying at (1, 1, 0.2).
  const Pose2 truth{1, 1, 0.2};
  std::vector<Observation> obs;
  for (const Landmark& lm : map.landmarks) {
    const Vec2 local = inverse_transform_point(truth, lm.circle.x, lm.circle.y);
    obs.push_back(make_obs(local.x, local.y, 0, 1, {1.0}));
  }
  const auto result = step(state, Pose2{}, obs, map);
  CHECK(result.estimate.x == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.estimate.y == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.estimate.theta == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("step with no observations drifts by odometry alone") {
  const auto map = toy_map({make_landmark(100, 100, 0, 1, {1.0})}, 1, 1);
  FilterState state = init_filter(Pose2{1, 0, 0}, quiet_config(8));
  const auto result = step(state, Pose2{2, 0, 0.1}, {}, map);
  CHECK(result.estimate.x == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(result.estimate.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.estimate.theta == doctest::Approx(0.1).epsilon(1e-12));
}

namespace {

// Straight-line reference of the base filter: brute-force nearest neighbor,
// linear-space Gaussian products, explicit normalization. No shared code with
// the implementation beyond the pose algebra.
struct ToyOracle {
  std::vector<Pose2> poses;
  std::vector<double> weights;

  void advance(const Pose2& odom, const std::vector<Observation>& obs,
               const std::vector<Landmark>& landmarks, double sigma, double gate) {
    for (Pose2& pose : poses) pose = compose(pose, odom);
    std::vector<double> likelihood(poses.size(), 1.0);
    for (std::size_t k = 0; k < poses.size(); ++k) {
      for (const Observation& o : obs) {
        const Vec2 w = transform_point(poses[k], o.circle.x, o.circle.y);
        double d = std::numeric_limits<double>::infinity();
        for (const Landmark& lm : landmarks)
          d = std::min(d, std::hypot(w.x - lm.circle.x, w.y - lm.circle.y));
        d = std::min(d, gate);
        likelihood[k] *=
            std::exp(-0.5 * d * d / (sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
      }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < poses.size(); ++k)
      total += (weights[k] *= likelihood[k]);
    for (double& w : weights) w /= total;
  }

  Pose2 estimate() const {
    Pose2 out;
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < poses.size(); ++k) {
      out.x += weights[k] * poses[k].x;
      out.y += weights[k] * poses[k].y;
      s += weights[k] * std::sin(poses[k].theta);
      c += weights[k] * std::cos(poses[k].theta);
    }
    out.theta = std::atan2(s, c);
    return out;
  }
};

}  // namespace

TEST_CASE("three-step run matches the straight-line reference filter") {
  const std::vector<Landmark> landmarks = {
      make_landmark(0, 5, 0, 1, {1.0}), make_landmark(4, 4, 0, 1, {1.0}),
      make_landmark(8, 2, 0, 1, {1.0}), make_landmark(2, -3, 0, 1, {1.0}),
      make_landmark(6, 0, 0, 1, {1.0})};
  const auto map = toy_map(landmarks, 1, 1);

  const std::vector<Pose2> start = {Pose2{0, 0, 0}, Pose2{0.3, -0.2, 0.05},
                                    Pose2{-0.2, 0.1, -0.03}, Pose2{0.5, 0.4, 0.1}};
  FilterConfig config = quiet_config(4);
  FilterState state = init_filter(Pose2{}, config);
  for (int i = 0; i < 4; ++i) state.particles[i].pose = start[i];

  ToyOracle oracle;
  oracle.poses = start;
  oracle.weights.assign(4, 0.25);

  const std::vector<Pose2> odoms = {Pose2{1, 0, 0.1}, Pose2{1.2, -0.1, -0.05},
                                    Pose2{0.8, 0.2, 0.0}};
  const std::vector<std::vector<Observation>> steps = {
      {make_obs(2, 1, 0, 1, {1.0}), make_obs(4, -1, 0, 1, {1.0})},
      {make_obs(1.5, 0.5, 0, 1, {1.0})},
      {make_obs(3, 0, 0, 1, {1.0}), make_obs(1, -2, 0, 1, {1.0}),
       make_obs(0.5, 2, 0, 1, {1.0})}};

  for (int t = 0; t < 3; ++t) {
    const auto result = step(state, odoms[t], steps[t], map);
    oracle.advance(odoms[t], steps[t], landmarks, config.sigma_geo,
                   config.gate_distance);
    const Pose2 expected = oracle.estimate();
    CHECK(result.estimate.x == doctest::Approx(expected.x).epsilon(1e-12));
    CHECK(result.estimate.y == doctest::Approx(expected.y).epsilon(1e-12));
    CHECK(result.estimate.theta == doctest::Approx(expected.theta).epsilon(1e-12));
    const auto w = state.weights();
    for (int k = 0; k < 4; ++k)
      CHECK(w[k] == doctest::Approx(oracle.weights[k]).epsilon(1e-12));
  }
}

TEST_CASE("serial and parallel execution produce bit-identical estimates") {
  WorldSpec spec;
  spec.extent = 50.0;
  spec.n_landmarks = 30;
  spec.k = 2;
  spec.d = 4;
  spec.seed = 5;
  const World world = generate_world(spec);
  const auto map = truth_map_from_world(world);
  NoiseSpec noise;

  std::vector<Pose2> estimates_serial, estimates_parallel;
  for (int threads : {1, 4}) {
    FilterConfig config;
    config.n_particles = 200;
    config.seed = 9;
    config.variant = Variant::in_pf;
    config.threads = threads;
    config.odo_noise_scale = 0.1;
    FilterState state = init_filter(Pose2{25, 25, 0}, config);
    auto& estimates = threads == 1 ? estimates_serial : estimates_parallel;
    for (int t = 0; t < 8; ++t) {
      const Pose2 truth{25.0 + t, 25.0, 0.0};
      const auto obs = simulate_scan(world, truth, 20.0, noise, 77, t);
      estimates.push_back(step(state, Pose2{1, 0, 0}, obs, map).estimate);
    }
  }
  REQUIRE(estimates_serial.size() == estimates_parallel.size());
  for (std::size_t i = 0; i < estimates_serial.size(); ++i) {
    CHECK(std::memcmp(&estimates_serial[i], &estimates_parallel[i],
                      sizeof(Pose2)) == 0);
  }
}

TEST_CASE("variants degenerate to the plain filter on one class") {
  WorldSpec spec;
  spec.extent = 40.0;
  spec.n_landmarks = 25;
  spec.k = 1;
  spec.d = 4;
  spec.feature_noise_std = 0.0;  // identical features everywhere
  spec.label_flip_prob = 0.0;
  spec.seed = 21;
  const World world = generate_world(spec);
  const auto map = truth_map_from_world(world);
  NoiseSpec noise;

  std::vector<std::vector<std::vector<double>>> weight_traces;
  for (Variant variant : {Variant::pf, Variant::i_pf, Variant::n_pf, Variant::in_pf}) {
    FilterConfig config;
    config.n_particles = 100;
    config.seed = 13;
    config.variant = variant;
    config.init_spread = {0.3, 0.3, 0.03};
    FilterState state = init_filter(Pose2{20, 20, 0}, config);
    std::vector<std::vector<double>> trace;
    for (int t = 0; t < 10; ++t) {
      const Pose2 truth{20.0 + 0.5 * t, 20.0, 0.0};
      const auto obs = simulate_scan(world, truth, 18.0, noise, 55, t);
      step(state, Pose2{0.5, 0, 0}, obs, map);
      for (const auto& assoc : state.last_associations)
        for (auto gated : assoc.gated) REQUIRE(gated == 0);
      trace.push_back(state.weights());
    }
    weight_traces.push_back(std::move(trace));
  }
  for (std::size_t v = 1; v < weight_traces.size(); ++v) {
    for (std::size_t t = 0; t < weight_traces[v].size(); ++t) {
      for (std::size_t k = 0; k < weight_traces[v][t].size(); ++k) {
        CHECK(weight_traces[v][t][k] ==
              doctest::Approx(weight_traces[0][t][k]).epsilon(1e-12));
      }
    }
  }
}
