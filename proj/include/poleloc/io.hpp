#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poleloc/assoc_log.hpp"
#include "poleloc/eval.hpp"
#include "poleloc/map_builder.hpp"
#include "poleloc/types.hpp"

namespace poleloc {

// All numbers in the file formats go through this: decimal, 9 significant
// digits, so write -> read -> write is byte-stable and diffs stay readable.
std::string format_number(double value);
double parse_number(const std::string& token);

void write_scan(const std::filesystem::path& path, const Scan& scan);
Scan read_scan(const std::filesystem::path& path);

void write_map(const std::filesystem::path& path, const SemanticPoleMap& map);
SemanticPoleMap read_map(const std::filesystem::path& path);

void write_trajectory(const std::filesystem::path& path,
                      std::span<const TrajectoryPoint> trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

// Odometry shares the trajectory line shape; rows are relative increments.
void write_odometry(const std::filesystem::path& path,
                    std::span<const TrajectoryPoint> increments);
Trajectory read_odometry(const std::filesystem::path& path);

void write_association_log(const std::filesystem::path& path,
                           const AssociationLog& log);
AssociationLog read_association_log(const std::filesystem::path& path);

struct MetricsRow {
  std::string sequence;
  std::string variant;
  double phi_odo = 0.0;
  double phi_obs_drop = 0.0;
  double delta_d = 0.0;
  MapScore map_score;
  LocScore loc_score;
  AssocDiag assoc;
};

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Flat key-value configuration with dotted section keys. Typed getters mark
// keys as consumed so callers can reject unknown keys afterwards.
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<std::string> get_string_list(
      const std::string& key, const std::vector<std::string>& fallback) const;

  void set(const std::string& key, const std::string& value);
  // Raises ConfigError naming the first key never read by any getter.
  void reject_unknown_keys() const;

  // Canonical serialization: sorted "key = value" lines.
  std::string canonical_text() const;
  std::uint64_t hash() const;  // FNV-1a over the canonical text

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> files;  // paths relative to the manifest
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Scan files in a directory, sorted by filename for determinism.
std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& dir);

}  // namespace poleloc
