#include "poleloc/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "poleloc/errors.hpp"

namespace poleloc {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) tokens.push_back(token);
  return tokens;
}

long parse_long(const std::string& token) {
  char* end = nullptr;
  const long value = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0')
    raise(ErrorCode::schema_mismatch, "expected integer, got '" + token + "'");
  return value;
}

void expect(bool condition, const std::string& what) {
  if (!condition) raise(ErrorCode::schema_mismatch, what);
}

void write_values(std::ostream& out, std::span<const double> values) {
  for (double v : values) out << ' ' << format_number(v);
}

std::vector<double> take_values(const std::vector<std::string>& tokens,
                                std::size_t& cursor, std::size_t count) {
  expect(cursor + count <= tokens.size(), "record is shorter than its schema");
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) values.push_back(parse_number(tokens[cursor++]));
  return values;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr const char* kMetricsHeader =
    "sequence,variant,phi_odo,phi_obs_drop,delta_d,precision,recall,f1,"
    "n_tp,n_fp,n_fn,delta_pos,rmse_pos,delta_ang,rmse_ang,"
    "n_assoc_sets,assoc_accuracy,class_accuracy,phi_a_cosine";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // normalize -0
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

double parse_number(const std::string& token) {
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    raise(ErrorCode::schema_mismatch, "expected number, got '" + token + "'");
  return value;
}

void write_scan(const std::filesystem::path& path, const Scan& scan) {
  std::ofstream out = open_out(path);
  out << "scan " << scan.k << ' ' << scan.d << ' ' << scan.frame << ' '
      << format_number(scan.pose.x) << ' ' << format_number(scan.pose.y) << ' '
      << format_number(scan.pose.theta) << '\n';
  for (const Observation& obs : scan.observations) {
    out << "obs " << format_number(obs.circle.x) << ' '
        << format_number(obs.circle.y) << ' ' << format_number(obs.circle.r)
        << ' ' << obs.class_id << ' ' << obs.truth_id;
    write_values(out, obs.prob);
    write_values(out, obs.feature);
    out << '\n';
  }
  for (const LabeledPoint& p : scan.points) {
    out << "pt " << format_number(p.x) << ' ' << format_number(p.y) << ' '
        << format_number(p.z) << ' ' << p.class_id;
    write_values(out, p.prob);
    write_values(out, p.feature);
    out << '\n';
  }
}

Scan read_scan(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  expect(!lines.empty(), "empty scan file " + path.string());
  auto header = tokenize(lines[0]);
  expect(header.size() == 7 && header[0] == "scan",
         "bad scan header in " + path.string());

  Scan scan;
  scan.k = static_cast<int>(parse_long(header[1]));
  scan.d = static_cast<int>(parse_long(header[2]));
  scan.frame = parse_long(header[3]);
  scan.pose = Pose2{parse_number(header[4]), parse_number(header[5]),
                    parse_number(header[6])};

  const std::size_t k = static_cast<std::size_t>(scan.k);
  const std::size_t d = static_cast<std::size_t>(scan.d);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto tokens = tokenize(lines[i]);
    if (tokens[0] == "obs") {
      expect(tokens.size() == 6 + k + d, "bad obs record in " + path.string());
      Observation obs;
      std::size_t cursor = 1;
      obs.circle.x = parse_number(tokens[cursor++]);
      obs.circle.y = parse_number(tokens[cursor++]);
      obs.circle.r = parse_number(tokens[cursor++]);
      obs.class_id = static_cast<int>(parse_long(tokens[cursor++]));
      obs.truth_id = static_cast<int>(parse_long(tokens[cursor++]));
      obs.prob = take_values(tokens, cursor, k);
      obs.feature = take_values(tokens, cursor, d);
      scan.observations.push_back(std::move(obs));
    } else if (tokens[0] == "pt") {
      expect(tokens.size() == 5 + k + d, "bad pt record in " + path.string());
      LabeledPoint p;
      std::size_t cursor = 1;
      p.x = parse_number(tokens[cursor++]);
      p.y = parse_number(tokens[cursor++]);
      p.z = parse_number(tokens[cursor++]);
      p.class_id = static_cast<int>(parse_long(tokens[cursor++]));
      p.prob = take_values(tokens, cursor, k);
      p.feature = take_values(tokens, cursor, d);
      scan.points.push_back(std::move(p));
    } else {
      raise(ErrorCode::schema_mismatch,
            "unknown scan record '" + tokens[0] + "' in " + path.string());
    }
  }
  return scan;
}

void write_map(const std::filesystem::path& path, const SemanticPoleMap& map) {
  std::ofstream out = open_out(path);
  out << "map " << map.k << ' ' << map.d << ' ' << (map.config.multi_layer ? 1 : 0)
      << ' ' << map.config.min_obs_count << '\n';
  for (const auto& [class_id, ids] : map.layers) {
    out << "layer " << class_id << ' ' << ids.size() << '\n';
    for (int id : ids) {
      const Landmark& lm = map.landmarks[id];
      out << "lm " << format_number(lm.circle.x) << ' '
          << format_number(lm.circle.y) << ' ' << format_number(lm.circle.r)
          << ' ' << lm.class_id << ' ' << lm.obs_count;
      write_values(out, lm.prob);
      write_values(out, lm.feature);
      out << '\n';
    }
  }
}

SemanticPoleMap read_map(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  expect(!lines.empty(), "empty map file " + path.string());
  auto header = tokenize(lines[0]);
  expect(header.size() == 5 && header[0] == "map",
         "bad map header in " + path.string());

  SemanticPoleMap map;
  map.k = static_cast<int>(parse_long(header[1]));
  map.d = static_cast<int>(parse_long(header[2]));
  map.config.multi_layer = parse_long(header[3]) != 0;
  map.config.min_obs_count = static_cast<int>(parse_long(header[4]));

  const std::size_t k = static_cast<std::size_t>(map.k);
  const std::size_t d = static_cast<std::size_t>(map.d);
  long expected_in_layer = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto tokens = tokenize(lines[i]);
    if (tokens[0] == "layer") {
      expect(tokens.size() == 3, "bad layer record in " + path.string());
      expect(expected_in_layer == 0, "layer count mismatch in " + path.string());
      expected_in_layer = parse_long(tokens[2]);
    } else if (tokens[0] == "lm") {
      expect(tokens.size() == 6 + k + d, "bad landmark record in " + path.string());
      expect(expected_in_layer > 0, "landmark outside a layer in " + path.string());
      --expected_in_layer;
      Landmark lm;
      std::size_t cursor = 1;
      lm.circle.x = parse_number(tokens[cursor++]);
      lm.circle.y = parse_number(tokens[cursor++]);
      lm.circle.r = parse_number(tokens[cursor++]);
      lm.class_id = static_cast<int>(parse_long(tokens[cursor++]));
      lm.obs_count = static_cast<int>(parse_long(tokens[cursor++]));
      lm.prob = take_values(tokens, cursor, k);
      lm.feature = take_values(tokens, cursor, d);
      map.landmarks.push_back(std::move(lm));
    } else {
      raise(ErrorCode::schema_mismatch,
            "unknown map record '" + tokens[0] + "' in " + path.string());
    }
  }
  expect(expected_in_layer == 0, "layer count mismatch in " + path.string());
  map.rebuild_indexes();
  return map;
}

namespace {

void write_pose_rows(const std::filesystem::path& path, const char* header,
                     std::span<const TrajectoryPoint> rows) {
  std::ofstream out = open_out(path);
  out << header << '\n';
  for (const TrajectoryPoint& p : rows) {
    out << p.step << ' ' << format_number(p.pose.x) << ' '
        << format_number(p.pose.y) << ' ' << format_number(p.pose.theta) << '\n';
  }
}

Trajectory read_pose_rows(const std::filesystem::path& path, const char* header) {
  const auto lines = read_lines(path);
  expect(!lines.empty() && trim(lines[0]) == header,
         std::string("bad ") + header + " header in " + path.string());
  Trajectory rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto tokens = tokenize(lines[i]);
    expect(tokens.size() == 4, std::string("bad ") + header + " row in " + path.string());
    TrajectoryPoint p;
    p.step = parse_long(tokens[0]);
    p.pose = Pose2{parse_number(tokens[1]), parse_number(tokens[2]),
                   parse_number(tokens[3])};
    rows.push_back(p);
  }
  return rows;
}

}  // namespace

void write_trajectory(const std::filesystem::path& path,
                      std::span<const TrajectoryPoint> trajectory) {
  write_pose_rows(path, "trajectory", trajectory);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  return read_pose_rows(path, "trajectory");
}

void write_odometry(const std::filesystem::path& path,
                    std::span<const TrajectoryPoint> increments) {
  write_pose_rows(path, "odometry", increments);
}

Trajectory read_odometry(const std::filesystem::path& path) {
  return read_pose_rows(path, "odometry");
}

void write_association_log(const std::filesystem::path& path,
                           const AssociationLog& log) {
  std::ofstream out = open_out(path);
  out << "assoclog\n";
  for (const FrameAssociations& fa : log) {
    out << "frame " << fa.frame << ' ' << fa.truth_ids.size() << ' '
        << fa.n_particles << ' ' << fa.sets.size() << '\n';
    out << "truth";
    for (int id : fa.truth_ids) out << ' ' << id;
    out << '\n';
    out << "class";
    for (int c : fa.true_classes) out << ' ' << c;
    out << '\n';
    for (const AssociationSet& set : fa.sets) {
      out << "set " << set.multiplicity;
      for (int id : set.assoc_ids) out << ' ' << id;
      for (int c : set.assoc_classes) out << ' ' << c;
      write_values(out, set.incons);
      out << '\n';
    }
  }
}

AssociationLog read_association_log(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  expect(!lines.empty() && trim(lines[0]) == "assoclog",
         "bad association log header in " + path.string());

  AssociationLog log;
  std::size_t i = 1;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    auto tokens = tokenize(lines[i]);
    expect(tokens[0] == "frame" && tokens.size() == 5,
           "bad frame record in " + path.string());
    FrameAssociations fa;
    fa.frame = parse_long(tokens[1]);
    const std::size_t n_obs = static_cast<std::size_t>(parse_long(tokens[2]));
    fa.n_particles = static_cast<int>(parse_long(tokens[3]));
    const std::size_t n_sets = static_cast<std::size_t>(parse_long(tokens[4]));
    ++i;

    expect(i < lines.size(), "truncated association log " + path.string());
    tokens = tokenize(lines[i]);
    expect(!tokens.empty() && tokens[0] == "truth" && tokens.size() == 1 + n_obs,
           "bad truth record in " + path.string());
    for (std::size_t j = 1; j < tokens.size(); ++j)
      fa.truth_ids.push_back(static_cast<int>(parse_long(tokens[j])));
    ++i;

    expect(i < lines.size(), "truncated association log " + path.string());
    tokens = tokenize(lines[i]);
    expect(!tokens.empty() && tokens[0] == "class" && tokens.size() == 1 + n_obs,
           "bad class record in " + path.string());
    for (std::size_t j = 1; j < tokens.size(); ++j)
      fa.true_classes.push_back(static_cast<int>(parse_long(tokens[j])));
    ++i;

    for (std::size_t s = 0; s < n_sets; ++s, ++i) {
      expect(i < lines.size(), "truncated association log " + path.string());
      tokens = tokenize(lines[i]);
      expect(!tokens.empty() && tokens[0] == "set" &&
                 tokens.size() == 2 + 3 * n_obs,
             "bad set record in " + path.string());
      AssociationSet set;
      std::size_t cursor = 1;
      set.multiplicity = static_cast<int>(parse_long(tokens[cursor++]));
      for (std::size_t j = 0; j < n_obs; ++j)
        set.assoc_ids.push_back(static_cast<int>(parse_long(tokens[cursor++])));
      for (std::size_t j = 0; j < n_obs; ++j)
        set.assoc_classes.push_back(static_cast<int>(parse_long(tokens[cursor++])));
      set.incons = take_values(tokens, cursor, n_obs);
      fa.sets.push_back(std::move(set));
    }
    log.push_back(std::move(fa));
  }
  return log;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRow> rows) {
  std::ofstream out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const MetricsRow& row : rows) {
    out << row.sequence << ',' << row.variant << ','
        << format_number(row.phi_odo) << ',' << format_number(row.phi_obs_drop)
        << ',' << format_number(row.delta_d) << ','
        << format_number(row.map_score.precision) << ','
        << format_number(row.map_score.recall) << ','
        << format_number(row.map_score.f1) << ',' << row.map_score.n_tp << ','
        << row.map_score.n_fp << ',' << row.map_score.n_fn << ','
        << format_number(row.loc_score.delta_pos) << ','
        << format_number(row.loc_score.rmse_pos) << ','
        << format_number(row.loc_score.delta_ang) << ','
        << format_number(row.loc_score.rmse_ang) << ','
        << format_number(row.assoc.n_assoc_sets) << ',';
    if (row.assoc.assoc_accuracy) out << format_number(*row.assoc.assoc_accuracy);
    out << ',';
    if (row.assoc.class_accuracy) out << format_number(*row.assoc.class_accuracy);
    out << ',' << format_number(row.assoc.phi_a_cosine) << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  expect(!lines.empty() && lines[0] == kMetricsHeader,
         "bad metrics header in " + path.string());
  std::vector<MetricsRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv(lines[i]);
    expect(fields.size() == 19, "bad metrics row in " + path.string());
    MetricsRow row;
    row.sequence = fields[0];
    row.variant = fields[1];
    row.phi_odo = parse_number(fields[2]);
    row.phi_obs_drop = parse_number(fields[3]);
    row.delta_d = parse_number(fields[4]);
    row.map_score.precision = parse_number(fields[5]);
    row.map_score.recall = parse_number(fields[6]);
    row.map_score.f1 = parse_number(fields[7]);
    row.map_score.n_tp = static_cast<int>(parse_long(fields[8]));
    row.map_score.n_fp = static_cast<int>(parse_long(fields[9]));
    row.map_score.n_fn = static_cast<int>(parse_long(fields[10]));
    row.loc_score.delta_pos = parse_number(fields[11]);
    row.loc_score.rmse_pos = parse_number(fields[12]);
    row.loc_score.delta_ang = parse_number(fields[13]);
    row.loc_score.rmse_ang = parse_number(fields[14]);
    row.assoc.n_assoc_sets = parse_number(fields[15]);
    if (!fields[16].empty()) row.assoc.assoc_accuracy = parse_number(fields[16]);
    if (!fields[17].empty()) row.assoc.class_accuracy = parse_number(fields[17]);
    row.assoc.phi_a_cosine = parse_number(fields[18]);
    rows.push_back(std::move(row));
  }
  return rows;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

Config Config::parse_text(const std::string& text) {
  Config config;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::config_error,
            "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      raise(ErrorCode::config_error,
            "line " + std::to_string(line_no) + ": empty key");
    config.values_[key] = value;
    config.consumed_[key] = false;
  }
  return config;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  return parse_number(it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  return static_cast<int>(parse_long(it->second));
}

std::uint64_t Config::get_uint64(const std::string& key,
                                 std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  return static_cast<std::uint64_t>(std::strtoull(it->second.c_str(), nullptr, 10));
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  raise(ErrorCode::config_error, "key '" + key + "': expected boolean, got '" + v + "'");
}

std::vector<double> Config::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  std::vector<double> out;
  std::string item;
  std::istringstream stream(it->second);
  while (std::getline(stream, item, ',')) {
    const std::string stripped = trim(item);
    if (!stripped.empty()) out.push_back(parse_number(stripped));
  }
  return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_[key] = true;
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(it->second);
  while (std::getline(stream, item, ',')) {
    const std::string stripped = trim(item);
    if (!stripped.empty()) out.push_back(stripped);
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  consumed_[key] = false;
}

void Config::reject_unknown_keys() const {
  for (const auto& [key, consumed] : consumed_) {
    if (!consumed)
      raise(ErrorCode::config_error, "unknown config key '" + key + "'");
  }
}

std::string Config::canonical_text() const {
  std::string text;
  for (const auto& [key, value] : values_)
    text += key + " = " + value + "\n";
  return text;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical_text()); }

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out = open_out(path);
  out << "manifest\n";
  out << "seed " << manifest.seed << '\n';
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(manifest.config_hash));
  out << "config_hash " << hex << '\n';
  for (const std::string& file : manifest.files) out << "file " << file << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  expect(!lines.empty() && trim(lines[0]) == "manifest",
         "bad manifest header in " + path.string());
  Manifest manifest;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto tokens = tokenize(lines[i]);
    if (tokens[0] == "seed" && tokens.size() == 2) {
      manifest.seed = std::strtoull(tokens[1].c_str(), nullptr, 10);
    } else if (tokens[0] == "config_hash" && tokens.size() == 2) {
      manifest.config_hash = std::strtoull(tokens[1].c_str(), nullptr, 16);
    } else if (tokens[0] == "file" && tokens.size() == 2) {
      manifest.files.push_back(tokens[1]);
    } else {
      raise(ErrorCode::schema_mismatch,
            "unknown manifest record in " + path.string());
    }
  }
  return manifest;
}

std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    raise(ErrorCode::io_error, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace poleloc
