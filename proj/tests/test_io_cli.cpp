#include <cstdlib>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "poleloc/errors.hpp"
#include "poleloc/io.hpp"
#include "poleloc/pipeline.hpp"

using namespace poleloc;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("poleloc_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  return slurp(a) == slurp(b);
}

RunConfig tiny_run_config(std::uint64_t seed = 3) {
  Config config = Config::parse_text(
      "seed = " + std::to_string(seed) + "\n" +
      "world.extent = 60\n"
      "world.n_landmarks = 40\n"
      "world.k = 3\n"
      "world.d = 6\n"
      "sim.n_steps = 120\n"
      "sim.step_length = 1.0\n"
      "sim.max_range = 20\n"
      "sim.delta_d = 8\n"
      "noise.phi_odo = 0.1\n"
      "noise.phi_obs_drop = 0.2\n"
      "run.variants = pf, in-pf\n"
      "filter.n_particles = 120\n");
  return RunConfig::from_config(config);
}

}  // namespace

TEST_CASE("format_number uses nine significant digits and survives reparsing") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.123456789123) == "0.123456789");
  for (double v : {3.14159265358979, -0.000123456789, 1.23456789e12, 42.0}) {
    const std::string once = format_number(v);
    const std::string twice = format_number(parse_number(once));
    CHECK(once == twice);
  }
  CHECK_THROWS_AS(parse_number("12abc"), Error);
}

TEST_CASE("scan file round-trips byte-identically") {
  const auto dir = temp_dir("scan_rt");
  Scan scan;
  scan.frame = 42;
  scan.pose = Pose2{1.25, -3.5, 0.7853981633974483};
  scan.k = 2;
  scan.d = 3;
  Observation obs;
  obs.circle = Circle{2.123456789, -0.987654321, 0.3};
  obs.class_id = 1;
  obs.truth_id = 17;
  obs.prob = {0.25, 0.75};
  obs.feature = {0.1, -0.2, 0.97};
  scan.observations.push_back(obs);
  LabeledPoint pt;
  pt.x = 5.5;
  pt.y = -2.25;
  pt.z = 1.0;
  pt.class_id = 0;
  pt.prob = {0.9, 0.1};
  pt.feature = {1.0, 0.0, 0.0};
  scan.points.push_back(pt);

  write_scan(dir / "a.txt", scan);
  const Scan reread = read_scan(dir / "a.txt");
  write_scan(dir / "b.txt", reread);
  CHECK(same_bytes(dir / "a.txt", dir / "b.txt"));
  CHECK(reread.frame == 42);
  CHECK(reread.observations.size() == 1);
  CHECK(reread.points.size() == 1);
  CHECK(reread.observations[0].truth_id == 17);
}

TEST_CASE("map, trajectory, odometry, and log files round-trip") {
  const auto dir = temp_dir("fmt_rt");

  const RunConfig config = tiny_run_config();
  const PipelineResult result = run_pipeline(config);

  write_map(dir / "map_a.txt", result.map);
  write_map(dir / "map_b.txt", read_map(dir / "map_a.txt"));
  CHECK(same_bytes(dir / "map_a.txt", dir / "map_b.txt"));

  write_trajectory(dir / "traj_a.txt", result.runs[0].estimate);
  write_trajectory(dir / "traj_b.txt", read_trajectory(dir / "traj_a.txt"));
  CHECK(same_bytes(dir / "traj_a.txt", dir / "traj_b.txt"));

  Trajectory increments = {{3, Pose2{0.5, -0.1, 0.05}}, {7, Pose2{1.0, 0.0, -0.2}}};
  write_odometry(dir / "odo_a.txt", increments);
  write_odometry(dir / "odo_b.txt", read_odometry(dir / "odo_a.txt"));
  CHECK(same_bytes(dir / "odo_a.txt", dir / "odo_b.txt"));

  write_association_log(dir / "log_a.txt", result.runs[0].log);
  write_association_log(dir / "log_b.txt",
                        read_association_log(dir / "log_a.txt"));
  CHECK(same_bytes(dir / "log_a.txt", dir / "log_b.txt"));
}

TEST_CASE("metrics CSV round-trips including absent accuracies") {
  const auto dir = temp_dir("csv_rt");
  MetricsRow row;
  row.sequence = "seq1";
  row.variant = "in-pf";
  row.phi_odo = 0.4;
  row.phi_obs_drop = 0.8;
  row.delta_d = 10.0;
  row.map_score.precision = 0.76;
  row.map_score.recall = 0.86;
  row.map_score.f1 = 0.8069;
  row.map_score.n_tp = 100;
  row.map_score.n_fp = 31;
  row.map_score.n_fn = 16;
  row.loc_score.delta_pos = 1.673;
  row.loc_score.rmse_pos = 2.304;
  row.loc_score.delta_ang = 0.954;
  row.loc_score.rmse_ang = 1.434;
  row.assoc.n_assoc_sets = 11.069;
  row.assoc.phi_a_cosine = 0.829;

  MetricsRow with_truth = row;
  with_truth.variant = "pf";
  with_truth.assoc.assoc_accuracy = 0.777;
  with_truth.assoc.class_accuracy = 0.714;

  const std::vector<MetricsRow> rows = {row, with_truth};
  write_metrics_csv(dir / "m_a.csv", rows);
  const auto reread = read_metrics_csv(dir / "m_a.csv");
  write_metrics_csv(dir / "m_b.csv", reread);
  CHECK(same_bytes(dir / "m_a.csv", dir / "m_b.csv"));
  REQUIRE(reread.size() == 2);
  CHECK_FALSE(reread[0].assoc.assoc_accuracy.has_value());
  CHECK(reread[1].assoc.assoc_accuracy.has_value());
}

TEST_CASE("config parsing, typed getters, and unknown-key rejection") {
  Config config = Config::parse_text(
      "# comment line\n"
      "seed = 11\n"
      "world.extent = 50.5\n"
      "map.multi_layer = false\n"
      "run.variants = pf, i-pf\n"
      "filter.init_spread = 0.5, 0.5, 0.05\n");
  CHECK(config.get_uint64("seed", 0) == 11);
  CHECK(config.get_double("world.extent", 0.0) == doctest::Approx(50.5));
  CHECK(config.get_bool("map.multi_layer", true) == false);
  CHECK(config.get_string_list("run.variants", {}) ==
        std::vector<std::string>{"pf", "i-pf"});
  CHECK(config.get_double_list("filter.init_spread", {}).size() == 3);
  config.reject_unknown_keys();  // everything consumed

  Config unknown = Config::parse_text("filter.n_particle = 10\n");
  CHECK_THROWS_WITH_AS(RunConfig::from_config(unknown),
                       doctest::Contains("unknown config key"), Error);

  CHECK_THROWS_AS(Config::parse_text("not a key value line\n"), Error);
}

TEST_CASE("config hash changes exactly with field changes") {
  const Config a = Config::parse_text("seed = 1\nworld.extent = 100\n");
  const Config b = Config::parse_text("seed = 1\nworld.extent = 100\n");
  const Config c = Config::parse_text("seed = 1\nworld.extent = 101\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("POLELOC_SEED environment variable overrides the config seed") {
  Config config = Config::parse_text("seed = 5\n");
  setenv("POLELOC_SEED", "99", 1);
  const RunConfig run = RunConfig::from_config(config);
  unsetenv("POLELOC_SEED");
  CHECK(run.seed == 99);
  CHECK(RunConfig::from_config(Config::parse_text("seed = 5\n")).seed == 5);
}

TEST_CASE("cmd_simulate is reproducible and writes a valid manifest") {
  const auto dir_a = temp_dir("sim_a");
  const auto dir_b = temp_dir("sim_b");
  const RunConfig config = tiny_run_config();
  cmd_simulate(config, dir_a);
  cmd_simulate(config, dir_b);

  const Manifest manifest = read_manifest(dir_a / "manifest.txt");
  CHECK(manifest.seed == config.seed);
  CHECK(manifest.config_hash == config.config_hash);
  CHECK(!manifest.files.empty());
  for (const std::string& file : manifest.files) {
    CHECK(std::filesystem::exists(dir_a / file));
    CHECK(same_bytes(dir_a / file, dir_b / file));
  }
}

TEST_CASE("cmd_simulate with zero steps writes an empty trajectory with a header") {
  const auto dir = temp_dir("sim_zero");
  RunConfig config = tiny_run_config();
  config.sim.n_steps = 0;
  cmd_simulate(config, dir);
  const Trajectory trajectory = read_trajectory(dir / "trajectory.txt");
  CHECK(trajectory.empty());
  CHECK(slurp(dir / "trajectory.txt") == "trajectory\n");
}

TEST_CASE("cmd_build_map scores a noiseless run perfectly") {
  const auto dir = temp_dir("bm_clean");
  RunConfig config = tiny_run_config();
  config.noise.obs_position_std = 0.0;
  config.world.label_flip_prob = 0.0;
  config.noise.phi_obs_drop = 0.0;
  cmd_simulate(config, dir);

  const auto score =
      cmd_build_map(config, dir / "keyframes", dir / "trajectory.txt",
                    dir / "built_map.txt", dir / "world_map.txt");
  REQUIRE(score.has_value());
  CHECK(score->f1 == doctest::Approx(1.0));
}

TEST_CASE("cmd_build_map with no scans writes an empty map") {
  const auto dir = temp_dir("bm_empty");
  std::filesystem::create_directories(dir / "keyframes");
  write_trajectory(dir / "trajectory.txt", Trajectory{});
  const RunConfig config = tiny_run_config();
  const auto score = cmd_build_map(config, dir / "keyframes",
                                   dir / "trajectory.txt", dir / "map.txt", {});
  CHECK_FALSE(score.has_value());
  CHECK(read_map(dir / "map.txt").landmarks.empty());
}

TEST_CASE("multi-layer and single-layer modes differ on a class conflict fixture") {
  const auto dir = temp_dir("bm_layers");
  // Two keyframes observing one location with conflicting labels.
  Scan scan_a, scan_b;
  scan_a.frame = 0;
  scan_b.frame = 1;
  scan_a.k = scan_b.k = 2;
  scan_a.d = scan_b.d = 2;
  scan_a.pose = Pose2{};
  scan_b.pose = Pose2{};
  Observation obs;
  obs.circle = Circle{5, 0, 0.3};
  obs.prob = {0.9, 0.1};
  obs.feature = {1.0, 0.0};
  obs.class_id = 0;
  scan_a.observations.push_back(obs);
  obs.prob = {0.1, 0.9};
  obs.class_id = 1;
  scan_b.observations.push_back(obs);
  write_scan(dir / "scans" / "scan_000000.txt", scan_a);
  write_scan(dir / "scans" / "scan_000001.txt", scan_b);
  write_trajectory(dir / "trajectory.txt",
                   Trajectory{{0, Pose2{}}, {1, Pose2{}}});

  RunConfig config = tiny_run_config();
  config.map.multi_layer = true;
  cmd_build_map(config, dir / "scans", dir / "trajectory.txt",
                dir / "multi.txt", {});
  config.map.multi_layer = false;
  cmd_build_map(config, dir / "scans", dir / "trajectory.txt",
                dir / "single.txt", {});

  CHECK(read_map(dir / "multi.txt").landmarks.size() == 2);
  CHECK(read_map(dir / "single.txt").landmarks.size() == 1);
}

TEST_CASE("cmd_localize writes one trajectory per variant, reproducibly") {
  const auto dir = temp_dir("loc_run");
  const RunConfig config = tiny_run_config();
  cmd_simulate(config, dir);
  cmd_build_map(config, dir / "keyframes", dir / "trajectory.txt",
                dir / "map.txt", {});

  cmd_localize(config, dir / "map.txt", dir / "locframes", dir / "odometry.txt",
               dir / "out_a");
  cmd_localize(config, dir / "map.txt", dir / "locframes", dir / "odometry.txt",
               dir / "out_b");

  for (const char* variant : {"pf", "in-pf"}) {
    const std::string traj = std::string("trajectory_") + variant + ".txt";
    const std::string log = std::string("assoc_") + variant + ".txt";
    CHECK(std::filesystem::exists(dir / "out_a" / traj));
    CHECK(std::filesystem::exists(dir / "out_a" / log));
    CHECK(same_bytes(dir / "out_a" / traj, dir / "out_b" / traj));
    CHECK(same_bytes(dir / "out_a" / log, dir / "out_b" / log));
  }

  CHECK_THROWS_WITH_AS(cmd_localize(config, dir / "missing_map.txt",
                                    dir / "locframes", dir / "odometry.txt",
                                    dir / "out_c"),
                       doctest::Contains("IoError"), Error);
}

TEST_CASE("cmd_evaluate produces one aligned row per variant") {
  const auto dir = temp_dir("eval_run");
  const RunConfig config = tiny_run_config();
  cmd_simulate(config, dir);
  cmd_build_map(config, dir / "keyframes", dir / "trajectory.txt",
                dir / "map.txt", {});
  cmd_localize(config, dir / "map.txt", dir / "locframes", dir / "odometry.txt",
               dir / "loc");

  const std::vector<std::filesystem::path> est = {
      dir / "loc" / "trajectory_pf.txt", dir / "loc" / "trajectory_in-pf.txt"};
  const std::vector<std::filesystem::path> logs = {
      dir / "loc" / "assoc_pf.txt", dir / "loc" / "assoc_in-pf.txt"};
  const auto rows =
      cmd_evaluate(config, est, dir / "trajectory.txt", logs, dir / "map.txt",
                   dir / "world_map.txt", dir / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "pf");
  CHECK(rows[1].variant == "in-pf");
  CHECK(rows[0].map_score.f1 == rows[1].map_score.f1);
  CHECK(rows[0].assoc.assoc_accuracy.has_value());

  // Evaluating the truth against itself gives a zero-error row.
  const auto zero_rows = cmd_evaluate(
      RunConfig::from_config(Config::parse_text("run.variants = pf\n")),
      {dir / "loc" / "trajectory_pf.txt"}, dir / "loc" / "trajectory_pf.txt",
      {dir / "loc" / "assoc_pf.txt"}, {}, {}, dir / "zero.csv");
  CHECK(zero_rows[0].loc_score.delta_pos == 0.0);
  CHECK(zero_rows[0].loc_score.delta_ang == 0.0);

  const auto reread = read_metrics_csv(dir / "metrics.csv");
  REQUIRE(reread.size() == 2);
  CHECK(reread[0].loc_score.delta_pos ==
        doctest::Approx(rows[0].loc_score.delta_pos).epsilon(1e-8));
}

TEST_CASE("point-level scans flow through extraction in build-map") {
  const auto dir = temp_dir("pt_mode");
  RunConfig config = tiny_run_config();
  config.sim.point_level = true;
  config.noise.obs_position_std = 0.0;
  config.world.label_flip_prob = 0.0;
  cmd_simulate(config, dir);

  // Keyframe scans hold labeled points only.
  const auto files = list_scan_files(dir / "keyframes");
  REQUIRE(!files.empty());
  const Scan first = read_scan(files[0]);
  CHECK(first.observations.empty());
  CHECK(!first.points.empty());

  const auto score =
      cmd_build_map(config, dir / "keyframes", dir / "trajectory.txt",
                    dir / "built_map.txt", dir / "world_map.txt");
  REQUIRE(score.has_value());
  CHECK(score->recall > 0.8);
  CHECK(score->precision > 0.8);
}

TEST_CASE("sweep emits the full grid of rows") {
  const auto dir = temp_dir("sweep_run");
  RunConfig config = tiny_run_config();
  config.sim.n_steps = 60;
  config.filter.n_particles = 60;
  config.sweep_phi_odo = {0.1};
  config.sweep_phi_obs_drop = {0.0, 0.5};
  config.sweep_delta_d = {8.0};
  config.sweep_seeds = 2;
  const auto rows = cmd_sweep(config, dir);
  // 1 odo x 2 drop x 1 delta x 2 seeds x 2 variants
  CHECK(rows.size() == 8);
  CHECK(std::filesystem::exists(dir / "sweep_metrics.csv"));
  const auto reread = read_metrics_csv(dir / "sweep_metrics.csv");
  CHECK(reread.size() == rows.size());
}
