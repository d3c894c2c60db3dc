#include "poleloc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "poleloc/errors.hpp"
#include "poleloc/rng.hpp"

namespace poleloc {

namespace {

std::string frame_filename(std::int64_t frame) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "scan_%06lld.txt",
                static_cast<long long>(frame));
  return buffer;
}

std::vector<int> default_classes(int k) {
  std::vector<int> classes(k);
  for (int c = 0; c < k; ++c) classes[c] = c;
  return classes;
}

Scan make_scan(const World& world, std::int64_t frame, const Pose2& pose,
               std::vector<Observation> obs) {
  Scan scan;
  scan.frame = frame;
  scan.pose = pose;
  scan.k = world.spec.k;
  scan.d = world.spec.d;
  scan.observations = std::move(obs);
  return scan;
}

Trajectory select_rows(const Trajectory& truth, const Trajectory& est) {
  std::map<std::int64_t, Pose2> by_step;
  for (const TrajectoryPoint& p : truth) by_step[p.step] = p.pose;
  Trajectory selected;
  selected.reserve(est.size());
  for (const TrajectoryPoint& p : est) {
    auto it = by_step.find(p.step);
    if (it == by_step.end())
      raise(ErrorCode::trajectory_mismatch,
            "estimate step " + std::to_string(p.step) + " missing from truth");
    selected.push_back({p.step, it->second});
  }
  return selected;
}

}  // namespace

RunConfig RunConfig::from_config(const Config& config) {
  RunConfig run;
  run.seed = config.get_uint64("seed", run.seed);
  if (const char* env_seed = std::getenv("POLELOC_SEED"))
    run.seed = std::strtoull(env_seed, nullptr, 10);
  run.sequence = config.get_string("run.sequence", "seq" + std::to_string(run.seed));

  run.world.extent = config.get_double("world.extent", run.world.extent);
  run.world.n_landmarks = config.get_int("world.n_landmarks", run.world.n_landmarks);
  run.world.k = config.get_int("world.k", run.world.k);
  run.world.d = config.get_int("world.d", run.world.d);
  run.world.class_mix = config.get_double_list("world.class_mix", {});
  run.world.radius_min = config.get_double("world.radius_min", run.world.radius_min);
  run.world.radius_max = config.get_double("world.radius_max", run.world.radius_max);
  run.world.feature_noise_std =
      config.get_double("world.feature_noise_std", run.world.feature_noise_std);
  run.world.label_flip_prob =
      config.get_double("world.label_flip_prob", run.world.label_flip_prob);
  run.world.seed = run.seed;

  run.noise.phi_odo = config.get_double("noise.phi_odo", run.noise.phi_odo);
  run.noise.phi_obs_drop =
      config.get_double("noise.phi_obs_drop", run.noise.phi_obs_drop);
  run.noise.obs_position_std =
      config.get_double("noise.obs_position_std", run.noise.obs_position_std);
  run.noise.odo_floor_trans =
      config.get_double("noise.odo_floor_trans", run.noise.odo_floor_trans);
  run.noise.odo_floor_rot =
      config.get_double("noise.odo_floor_rot", run.noise.odo_floor_rot);

  run.sim.step_length = config.get_double("sim.step_length", run.sim.step_length);
  run.sim.n_steps = config.get_int("sim.n_steps", run.sim.n_steps);
  run.sim.max_range = config.get_double("sim.max_range", run.sim.max_range);
  run.sim.delta_d = config.get_double("sim.delta_d", run.sim.delta_d);
  run.sim.point_level = config.get_bool("sim.point_level", run.sim.point_level);

  run.extract.eps = config.get_double("extract.eps", run.extract.eps);
  run.extract.min_points = config.get_int("extract.min_points", run.extract.min_points);
  run.extract.max_range = config.get_double("extract.max_range", run.extract.max_range);
  {
    const auto classes = config.get_double_list("extract.classes", {});
    if (classes.empty()) {
      run.extract.pole_classes = default_classes(run.world.k);
    } else {
      for (double c : classes)
        run.extract.pole_classes.push_back(static_cast<int>(c));
    }
  }

  run.map.multi_layer = config.get_bool("map.multi_layer", run.map.multi_layer);
  run.map.min_obs_count = config.get_int("map.min_obs_count", run.map.min_obs_count);

  run.filter.n_particles = config.get_int("filter.n_particles", run.filter.n_particles);
  run.filter.sigma_geo = config.get_double("filter.sigma_geo", run.filter.sigma_geo);
  run.filter.sigma_sem = config.get_double("filter.sigma_sem", run.filter.sigma_sem);
  run.filter.gate_distance =
      config.get_double("filter.gate_distance", run.filter.gate_distance);
  run.filter.resample_threshold =
      config.get_double("filter.resample_threshold", run.filter.resample_threshold);
  {
    const auto spread = config.get_double_list(
        "filter.init_spread", {run.filter.init_spread[0], run.filter.init_spread[1],
                               run.filter.init_spread[2]});
    if (spread.size() != 3)
      raise(ErrorCode::config_error, "filter.init_spread needs three values");
    run.filter.init_spread = {spread[0], spread[1], spread[2]};
  }
  run.filter.mean_inconsistency =
      config.get_bool("filter.mean_inconsistency", run.filter.mean_inconsistency);
  run.filter.threads = config.get_int("filter.threads", run.filter.threads);
  run.filter.seed = run.seed;
  run.filter.odo_noise_scale = run.noise.phi_odo;
  run.filter.odo_floor_trans = run.noise.odo_floor_trans;
  run.filter.odo_floor_rot = run.noise.odo_floor_rot;

  {
    const auto names = config.get_string_list("run.variants", {});
    if (!names.empty()) {
      run.variants.clear();
      for (const std::string& name : names)
        run.variants.push_back(variant_from_string(name));
    }
  }

  run.sweep_phi_odo = config.get_double_list("sweep.phi_odo", run.sweep_phi_odo);
  run.sweep_phi_obs_drop =
      config.get_double_list("sweep.phi_obs_drop", run.sweep_phi_obs_drop);
  run.sweep_delta_d = config.get_double_list("sweep.delta_d", run.sweep_delta_d);
  run.sweep_seeds = config.get_int("sweep.seeds", run.sweep_seeds);

  config.reject_unknown_keys();
  run.config_hash = config.hash();
  return run;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_config(Config::parse_file(path));
}

PoleInstance instance_from_observation(const Observation& obs) {
  PoleInstance instance;
  instance.circle = obs.circle;
  instance.feature = obs.feature;
  instance.prob = obs.prob;
  instance.class_id = obs.class_id;
  instance.support = 1;
  return instance;
}

SemanticPoleMap truth_map_from_world(const World& world) {
  SemanticPoleMap map;
  map.k = world.spec.k;
  map.d = world.spec.d;
  map.landmarks = world.landmarks;
  map.rebuild_indexes();
  return map;
}

std::vector<LabeledPoint> synthesize_points(std::span<const Observation> obs,
                                            int points_per_pole,
                                            std::uint64_t seed, std::uint64_t step) {
  std::vector<LabeledPoint> points;
  points.reserve(obs.size() * points_per_pole);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto rng = make_rng(seed, RngStream::scan, step, 0x70000000ULL + i);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> height(0.5, 3.0);
    std::normal_distribution<double> jitter(0.0, 0.01);
    for (int p = 0; p < points_per_pole; ++p) {
      const double a = angle(rng);
      LabeledPoint pt;
      pt.x = obs[i].circle.x + obs[i].circle.r * std::cos(a) + jitter(rng);
      pt.y = obs[i].circle.y + obs[i].circle.r * std::sin(a) + jitter(rng);
      pt.z = height(rng);
      pt.class_id = obs[i].class_id;
      pt.prob = obs[i].prob;
      pt.feature = obs[i].feature;
      points.push_back(std::move(pt));
    }
  }
  return points;
}

std::vector<Observation> scan_observations(const Scan& scan,
                                           const ExtractConfig& config) {
  if (!scan.observations.empty() || scan.points.empty()) return scan.observations;
  const ExtractResult extracted = extract_poles(scan.points, config);
  std::vector<Observation> obs;
  obs.reserve(extracted.instances.size());
  for (const PoleInstance& inst : extracted.instances) {
    Observation o;
    o.circle = inst.circle;
    o.feature = inst.feature;
    o.prob = inst.prob;
    o.class_id = inst.class_id;
    obs.push_back(std::move(o));
  }
  return obs;
}

VariantRun localize_frames(const RunConfig& config, Variant variant,
                           const SemanticPoleMap& map,
                           std::span<const Scan> frames,
                           const Trajectory& odometry) {
  VariantRun run;
  run.variant = variant;
  if (frames.empty()) return run;

  std::map<std::int64_t, Pose2> odom_by_step;
  for (const TrajectoryPoint& p : odometry) odom_by_step[p.step] = p.pose;

  FilterConfig filter_config = config.filter;
  filter_config.variant = variant;
  FilterState state = init_filter(frames[0].pose, filter_config);

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Scan& scan = frames[i];
    const auto obs = scan_observations(scan, config.extract);
    StepResult result;
    if (i == 0) {
      result = measurement_step(state, obs, map, scan.frame);
    } else {
      auto it = odom_by_step.find(scan.frame);
      if (it == odom_by_step.end())
        raise(ErrorCode::input_mismatch,
              "no odometry increment for frame " + std::to_string(scan.frame));
      result = step(state, it->second, obs, map, scan.frame);
    }
    run.estimate.push_back({scan.frame, result.estimate});
    run.log.push_back(std::move(result.associations));
  }
  run.events = state.events;
  return run;
}

PipelineResult run_pipeline(const RunConfig& config) {
  PipelineResult result;
  WorldSpec world_spec = config.world;
  world_spec.seed = config.seed;
  result.world = generate_world(world_spec);
  result.trajectory = generate_trajectory(result.world, config.sim.step_length,
                                          config.sim.n_steps, config.seed);
  result.split = split_keyframes(result.trajectory, config.sim.delta_d);

  std::vector<Keyframe> keyframes;
  keyframes.reserve(result.split.mapping.size());
  for (int idx : result.split.mapping) {
    const Pose2& pose = result.trajectory[idx];
    auto obs = simulate_scan(result.world, pose, config.sim.max_range,
                             config.noise, config.seed, idx);
    Keyframe kf;
    kf.pose = pose;
    kf.instances.reserve(obs.size());
    for (const Observation& o : obs) kf.instances.push_back(instance_from_observation(o));
    keyframes.push_back(std::move(kf));
  }
  result.map = build_map(keyframes, config.world.k, config.world.d, config.map);

  std::vector<Scan> loc_frames;
  loc_frames.reserve(result.split.localization.size());
  for (int idx : result.split.localization) {
    const Pose2& pose = result.trajectory[idx];
    auto obs = simulate_scan(result.world, pose, config.sim.max_range,
                             config.noise, config.seed, idx);
    obs = drop_observations(std::move(obs), config.noise.phi_obs_drop, config.seed, idx);
    loc_frames.push_back(make_scan(result.world, idx, pose, std::move(obs)));
    result.truth_loc.push_back({idx, pose});
  }

  Trajectory odometry;
  for (std::size_t i = 1; i < result.split.localization.size(); ++i) {
    const int prev = result.split.localization[i - 1];
    const int curr = result.split.localization[i];
    const Pose2 increment = relative(result.trajectory[prev], result.trajectory[curr]);
    const Pose2 corrupted = corrupt_odometry(increment, config.noise.phi_odo,
                                             config.seed, curr,
                                             config.noise.odo_floor_trans,
                                             config.noise.odo_floor_rot);
    odometry.push_back({curr, corrupted});
  }

  for (Variant variant : config.variants)
    result.runs.push_back(
        localize_frames(config, variant, result.map, loc_frames, odometry));
  return result;
}

void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir) {
  WorldSpec world_spec = config.world;
  world_spec.seed = config.seed;
  const World world = generate_world(world_spec);
  const auto trajectory = generate_trajectory(world, config.sim.step_length,
                                              config.sim.n_steps, config.seed);
  const KeyframeSplit split = split_keyframes(trajectory, config.sim.delta_d);

  Manifest manifest;
  manifest.seed = config.seed;
  manifest.config_hash = config.config_hash;

  write_map(out_dir / "world_map.txt", truth_map_from_world(world));
  manifest.files.push_back("world_map.txt");

  Trajectory trajectory_rows;
  trajectory_rows.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i)
    trajectory_rows.push_back({static_cast<std::int64_t>(i), trajectory[i]});
  write_trajectory(out_dir / "trajectory.txt", trajectory_rows);
  manifest.files.push_back("trajectory.txt");

  for (int idx : split.mapping) {
    auto obs = simulate_scan(world, trajectory[idx], config.sim.max_range,
                             config.noise, config.seed, idx);
    Scan scan = make_scan(world, idx, trajectory[idx], std::move(obs));
    if (config.sim.point_level) {
      scan.points = synthesize_points(scan.observations, 24, config.seed, idx);
      scan.observations.clear();
    }
    const std::string name = frame_filename(idx);
    write_scan(out_dir / "keyframes" / name, scan);
    manifest.files.push_back("keyframes/" + name);
  }

  Trajectory odometry;
  for (std::size_t i = 0; i < split.localization.size(); ++i) {
    const int idx = split.localization[i];
    auto obs = simulate_scan(world, trajectory[idx], config.sim.max_range,
                             config.noise, config.seed, idx);
    obs = drop_observations(std::move(obs), config.noise.phi_obs_drop, config.seed, idx);
    const Scan scan = make_scan(world, idx, trajectory[idx], std::move(obs));
    const std::string name = frame_filename(idx);
    write_scan(out_dir / "locframes" / name, scan);
    manifest.files.push_back("locframes/" + name);
    if (i > 0) {
      const int prev = split.localization[i - 1];
      const Pose2 increment = relative(trajectory[prev], trajectory[idx]);
      odometry.push_back({idx, corrupt_odometry(increment, config.noise.phi_odo,
                                                config.seed, idx,
                                                config.noise.odo_floor_trans,
                                                config.noise.odo_floor_rot)});
    }
  }
  write_odometry(out_dir / "odometry.txt", odometry);
  manifest.files.push_back("odometry.txt");

  write_manifest(out_dir / "manifest.txt", manifest);
}

std::optional<MapScore> cmd_build_map(const RunConfig& config,
                                      const std::filesystem::path& scans_dir,
                                      const std::filesystem::path& poses_path,
                                      const std::filesystem::path& out_map_path,
                                      const std::filesystem::path& truth_map_path) {
  const Trajectory poses = read_trajectory(poses_path);
  std::map<std::int64_t, Pose2> pose_by_step;
  for (const TrajectoryPoint& p : poses) pose_by_step[p.step] = p.pose;

  int k = config.world.k;
  int d = config.world.d;
  std::vector<Keyframe> keyframes;
  for (const auto& path : list_scan_files(scans_dir)) {
    const Scan scan = read_scan(path);
    auto it = pose_by_step.find(scan.frame);
    if (it == pose_by_step.end())
      raise(ErrorCode::input_mismatch,
            "scan frame " + std::to_string(scan.frame) + " has no pose");
    if (!keyframes.empty() && (scan.k != k || scan.d != d))
      raise(ErrorCode::schema_mismatch, "scans disagree on K or d");
    k = scan.k;
    d = scan.d;
    Keyframe kf;
    kf.pose = it->second;
    for (const Observation& o : scan_observations(scan, config.extract))
      kf.instances.push_back(instance_from_observation(o));
    keyframes.push_back(std::move(kf));
  }

  const SemanticPoleMap map = build_map(keyframes, k, d, config.map);
  write_map(out_map_path, map);

  if (truth_map_path.empty()) return std::nullopt;
  const SemanticPoleMap truth = read_map(truth_map_path);
  return map_f1(map, truth.landmarks);
}

void cmd_localize(const RunConfig& config, const std::filesystem::path& map_path,
                  const std::filesystem::path& scans_dir,
                  const std::filesystem::path& odometry_path,
                  const std::filesystem::path& out_dir) {
  const SemanticPoleMap map = read_map(map_path);
  const Trajectory odometry = read_odometry(odometry_path);

  std::vector<Scan> frames;
  for (const auto& path : list_scan_files(scans_dir)) {
    Scan scan = read_scan(path);
    if (scan.k != map.k || scan.d != map.d)
      raise(ErrorCode::schema_mismatch, "scan and map disagree on K or d");
    frames.push_back(std::move(scan));
  }
  std::sort(frames.begin(), frames.end(),
            [](const Scan& a, const Scan& b) { return a.frame < b.frame; });

  for (Variant variant : config.variants) {
    const VariantRun run =
        localize_frames(config, variant, map, frames, odometry);
    const std::string suffix = to_string(variant);
    write_trajectory(out_dir / ("trajectory_" + suffix + ".txt"), run.estimate);
    write_association_log(out_dir / ("assoc_" + suffix + ".txt"), run.log);
  }
}

std::vector<MetricsRow> cmd_evaluate(
    const RunConfig& config, const std::vector<std::filesystem::path>& est_paths,
    const std::filesystem::path& truth_traj_path,
    const std::vector<std::filesystem::path>& log_paths,
    const std::filesystem::path& map_path,
    const std::filesystem::path& truth_map_path,
    const std::filesystem::path& out_csv_path) {
  if (est_paths.size() != config.variants.size() ||
      log_paths.size() != config.variants.size())
    raise(ErrorCode::input_mismatch,
          "estimate/log file count does not match the variant list");

  const Trajectory truth_all = read_trajectory(truth_traj_path);

  MapScore map_score;
  TruthResolution resolution;
  bool have_resolution = false;
  if (!map_path.empty() && !truth_map_path.empty()) {
    const SemanticPoleMap map = read_map(map_path);
    const SemanticPoleMap truth_map = read_map(truth_map_path);
    map_score = map_f1(map, truth_map.landmarks);
    resolution = resolve_map_truth(map, truth_map.landmarks);
    have_resolution = true;
  }

  std::vector<MetricsRow> rows;
  for (std::size_t i = 0; i < config.variants.size(); ++i) {
    const Trajectory est = read_trajectory(est_paths[i]);
    const Trajectory truth = select_rows(truth_all, est);
    const AssociationLog log = read_association_log(log_paths[i]);

    MetricsRow row;
    row.sequence = config.sequence;
    row.variant = to_string(config.variants[i]);
    row.phi_odo = config.noise.phi_odo;
    row.phi_obs_drop = config.noise.phi_obs_drop;
    row.delta_d = config.sim.delta_d;
    row.map_score = map_score;
    row.loc_score = localization_errors(est, truth);
    row.assoc = association_diagnostics(log, have_resolution ? &resolution : nullptr);
    rows.push_back(std::move(row));
  }
  write_metrics_csv(out_csv_path, rows);
  return rows;
}

std::vector<MetricsRow> cmd_sweep(const RunConfig& config,
                                  const std::filesystem::path& out_dir) {
  std::vector<MetricsRow> rows;
  for (double delta_d : config.sweep_delta_d) {
    for (double phi_odo : config.sweep_phi_odo) {
      for (double phi_obs : config.sweep_phi_obs_drop) {
        for (int s = 0; s < config.sweep_seeds; ++s) {
          RunConfig cell = config;
          cell.seed = config.seed + static_cast<std::uint64_t>(s);
          cell.sim.delta_d = delta_d;
          cell.noise.phi_odo = phi_odo;
          cell.noise.phi_obs_drop = phi_obs;
          cell.filter.seed = cell.seed;
          cell.filter.odo_noise_scale = phi_odo;
          cell.sequence = "seed" + std::to_string(cell.seed);

          const PipelineResult result = run_pipeline(cell);
          const SemanticPoleMap truth_map = truth_map_from_world(result.world);
          const MapScore map_score = map_f1(result.map, truth_map.landmarks);
          const TruthResolution resolution =
              resolve_map_truth(result.map, truth_map.landmarks);

          for (const VariantRun& run : result.runs) {
            MetricsRow row;
            row.sequence = cell.sequence;
            row.variant = to_string(run.variant);
            row.phi_odo = phi_odo;
            row.phi_obs_drop = phi_obs;
            row.delta_d = delta_d;
            row.map_score = map_score;
            row.loc_score = localization_errors(run.estimate, result.truth_loc);
            row.assoc = association_diagnostics(run.log, &resolution);
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  write_metrics_csv(out_dir / "sweep_metrics.csv", rows);
  return rows;
}

}  // namespace poleloc
