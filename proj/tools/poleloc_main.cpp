#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poleloc/errors.hpp"
#include "poleloc/pipeline.hpp"

namespace {

void print_map_score(const poleloc::MapScore& score) {
  std::printf("precision=%.4f recall=%.4f f1=%.4f tp=%d fp=%d fn=%d\n",
              score.precision, score.recall, score.f1, score.n_tp, score.n_fp,
              score.n_fn);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pole-landmark mapping and particle-filter localization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string scans_dir;
  std::string poses_path;
  std::string map_path;
  std::string truth_map_path;
  std::string odometry_path;
  std::string truth_traj_path;
  std::vector<std::string> est_paths;
  std::vector<std::string> log_paths;
  std::vector<std::string> variant_names;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic world and scans");
  simulate->add_option("--config", config_path, "Run configuration file")->required();
  simulate->add_option("--out", out_path, "Output directory")->required();

  auto* build_map = app.add_subcommand("build-map", "Aggregate keyframe scans into a map");
  build_map->add_option("--config", config_path, "Run configuration file")->required();
  build_map->add_option("--scans", scans_dir, "Keyframe scan directory")->required();
  build_map->add_option("--poses", poses_path, "Trajectory file with keyframe poses")->required();
  build_map->add_option("--out", out_path, "Output map file")->required();
  build_map->add_option("--truth", truth_map_path, "Ground-truth map for scoring");

  auto* localize = app.add_subcommand("localize", "Track the pose against a map");
  localize->add_option("--config", config_path, "Run configuration file")->required();
  localize->add_option("--map", map_path, "Map file")->required();
  localize->add_option("--scans", scans_dir, "Localization scan directory")->required();
  localize->add_option("--odometry", odometry_path, "Odometry increment file")->required();
  localize->add_option("--out", out_path, "Output directory")->required();
  localize->add_option("--variant", variant_names, "Variant(s): pf i-pf n-pf in-pf");

  auto* evaluate = app.add_subcommand("evaluate", "Score trajectories and associations");
  evaluate->add_option("--config", config_path, "Run configuration file")->required();
  evaluate->add_option("--est", est_paths, "Estimated trajectory file per variant")->required();
  evaluate->add_option("--truth", truth_traj_path, "Ground-truth trajectory file")->required();
  evaluate->add_option("--log", log_paths, "Association log file per variant")->required();
  evaluate->add_option("--map", map_path, "Built map (for map scoring)");
  evaluate->add_option("--truth-map", truth_map_path, "Ground-truth map");
  evaluate->add_option("--out", out_path, "Output metrics CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "Noise-grid cross product of full runs");
  sweep->add_option("--config", config_path, "Run configuration file")->required();
  sweep->add_option("--out", out_path, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    poleloc::RunConfig config = poleloc::RunConfig::from_file(config_path);
    if (!variant_names.empty()) {
      config.variants.clear();
      for (const std::string& name : variant_names)
        config.variants.push_back(poleloc::variant_from_string(name));
    }

    if (simulate->parsed()) {
      poleloc::cmd_simulate(config, out_path);
    } else if (build_map->parsed()) {
      auto score = poleloc::cmd_build_map(config, scans_dir, poses_path, out_path,
                                          truth_map_path);
      if (score) print_map_score(*score);
    } else if (localize->parsed()) {
      poleloc::cmd_localize(config, map_path, scans_dir, odometry_path, out_path);
    } else if (evaluate->parsed()) {
      std::vector<std::filesystem::path> est(est_paths.begin(), est_paths.end());
      std::vector<std::filesystem::path> logs(log_paths.begin(), log_paths.end());
      poleloc::cmd_evaluate(config, est, truth_traj_path, logs, map_path,
                            truth_map_path, out_path);
    } else if (sweep->parsed()) {
      poleloc::cmd_sweep(config, out_path);
    }
  } catch (const poleloc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
