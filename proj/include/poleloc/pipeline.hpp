#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poleloc/eval.hpp"
#include "poleloc/io.hpp"
#include "poleloc/localization.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/pole_extract.hpp"
#include "poleloc/simulator.hpp"

namespace poleloc {

struct SimConfig {
  double step_length = 1.0;  // meters between trajectory poses
  int n_steps = 400;
  double max_range = 20.0;  // sensor range for simulated scans, meters
  double delta_d = 10.0;    // keyframe spacing, meters
  bool point_level = false; // synthesize labeled points instead of poles
};

// Aggregate configuration for one run, parsed from a flat key-value file
// with dotted section keys. POLELOC_SEED in the environment overrides seed.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string sequence = "seq1";
  WorldSpec world;
  NoiseSpec noise;
  SimConfig sim;
  ExtractConfig extract;
  MapBuildConfig map;
  FilterConfig filter;
  std::vector<Variant> variants = {Variant::pf, Variant::in_pf};

  std::vector<double> sweep_phi_odo = {0.2, 0.4};
  std::vector<double> sweep_phi_obs_drop = {0.0, 0.5, 0.8};
  std::vector<double> sweep_delta_d = {6.0, 10.0};
  int sweep_seeds = 5;

  std::uint64_t config_hash = 0;  // hash of the source config text

  static RunConfig from_config(const Config& config);
  static RunConfig from_file(const std::filesystem::path& path);
};

PoleInstance instance_from_observation(const Observation& obs);

// Ground-truth landmark list as a queryable map (layers and indexes built).
SemanticPoleMap truth_map_from_world(const World& world);

// Synthesizes circle-sampled labeled points for each observation, for the
// point-level mode that exercises extraction end to end.
std::vector<LabeledPoint> synthesize_points(std::span<const Observation> obs,
                                            int points_per_pole,
                                            std::uint64_t seed, std::uint64_t step);

// Observations of a scan, extracting from labeled points when the scan is
// point-level.
std::vector<Observation> scan_observations(const Scan& scan,
                                           const ExtractConfig& config);

struct VariantRun {
  Variant variant = Variant::pf;
  Trajectory estimate;
  AssociationLog log;
  FilterEvents events;
};

// Full in-memory pipeline for one seeded world: simulate, split, build the
// keyframe map, and localize every configured variant.
struct PipelineResult {
  World world;
  std::vector<Pose2> trajectory;
  KeyframeSplit split;
  SemanticPoleMap map;       // built from keyframe scans
  Trajectory truth_loc;      // ground-truth poses at localization frames
  std::vector<VariantRun> runs;
};

PipelineResult run_pipeline(const RunConfig& config);

// Localizes one variant over pre-simulated frames against a map.
VariantRun localize_frames(const RunConfig& config, Variant variant,
                           const SemanticPoleMap& map,
                           std::span<const Scan> frames,
                           const Trajectory& odometry);

// CLI commands. Each writes its outputs under the given paths and returns
// what the caller may want to print or test.
void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);

std::optional<MapScore> cmd_build_map(const RunConfig& config,
                                      const std::filesystem::path& scans_dir,
                                      const std::filesystem::path& poses_path,
                                      const std::filesystem::path& out_map_path,
                                      const std::filesystem::path& truth_map_path);

void cmd_localize(const RunConfig& config, const std::filesystem::path& map_path,
                  const std::filesystem::path& scans_dir,
                  const std::filesystem::path& odometry_path,
                  const std::filesystem::path& out_dir);

std::vector<MetricsRow> cmd_evaluate(
    const RunConfig& config, const std::vector<std::filesystem::path>& est_paths,
    const std::filesystem::path& truth_traj_path,
    const std::vector<std::filesystem::path>& log_paths,
    const std::filesystem::path& map_path,
    const std::filesystem::path& truth_map_path,
    const std::filesystem::path& out_csv_path);

std::vector<MetricsRow> cmd_sweep(const RunConfig& config,
                                  const std::filesystem::path& out_dir);

}  // namespace poleloc
