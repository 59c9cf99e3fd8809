#pragma once

// Run configuration: flat `key = value` text with `#` comments. Values may be
// overridden by PUBFORGE_<KEY> environment variables and then by explicit
// command-line settings. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pubforge/corpus.hpp"
#include "pubforge/creativity.hpp"
#include "pubforge/error.hpp"
#include "pubforge/synth.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string strip(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(value);
  while (std::getline(ss, cur, sep)) {
    auto s = strip(cur);
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

}  // namespace detail

/// Parses `key = value` lines. A `#` starts a comment anywhere on a line.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (table::next_line(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto text = detail::strip(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = detail::strip(std::string_view(text).substr(0, eq));
    auto value = detail::strip(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(it->second) + ")");
    }
    seen[key] = lineno;
    out.emplace_back(key, value);
  }
  return out;
}

/// PUBFORGE_FOO_BAR=1 -> ("foo_bar", "1"); other variables are ignored.
inline KeyValues env_overrides(const std::vector<std::string>& environment) {
  static constexpr std::string_view prefix = "PUBFORGE_";
  KeyValues out;
  for (const auto& entry : environment) {
    if (entry.rfind(prefix, 0) != 0) continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.emplace_back(key, entry.substr(eq + 1));
  }
  return out;
}

struct RunConfig {
  // windows
  std::optional<int> history_start;  // T0
  std::optional<int> train_start;    // T1 = t_0
  std::optional<int> train_end;      // t_L
  std::optional<int> forecast_end;   // T2 = t_J
  std::optional<int> test_start;     // t_X
  std::optional<int> test_end;       // t_Y

  // cohorts and fitting
  int max_cohort = 40;          // I
  int max_predict_cohort = 0;   // cap on I_1; 0 = auto
  FitMode fit_mode = FitMode::glm;
  double significance_level = 0.05;
  int min_cells = 3;

  // simulation and evaluation
  int replicates = 1000;  // R
  std::uint64_t seed = 0;
  TestMembership test_membership = TestMembership::active_at_start;
  int n_boot = 1000;
  int dump_replicates = 1;

  // inputs and outputs
  std::vector<std::string> corpus;
  std::string format = "auto";  // xml | tabular | auto
  char delimiter = ',';
  std::string entities;
  int year_min = 1900;
  int year_max = 2100;
  std::string histories;     // default <out>/histories.csv
  std::string model;         // default <out>/model.csv
  std::string ensemble_dir;  // default <out>
  std::string out = ".";
  bool plots = false;
  unsigned threads = 1;

  int L() const { return *train_end - *train_start; }
  int J() const { return *forecast_end - *train_start; }
  int X() const { return *test_start - *train_start; }
  int Y() const { return *test_end - *train_start; }

  std::string histories_path() const { return histories.empty() ? (std::filesystem::path(out) / "histories.csv").string() : histories; }
  std::string model_path() const { return model.empty() ? (std::filesystem::path(out) / "model.csv").string() : model; }
  std::string ensemble_path() const { return ensemble_dir.empty() ? out : ensemble_dir; }

  SplitWindows training_windows() const { return {*history_start, *train_start, *train_end}; }
  SplitWindows test_windows() const { return {*history_start, *test_start, *test_end}; }
  IngestOptions ingest_options() const { return {year_min, year_max}; }
};

namespace detail {

inline int int_value(const std::string& key, const std::string& value) {
  auto v = table::parse_int<int>(value);
  if (!v) throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return *v;
}

inline double double_value(const std::string& key, const std::string& value) {
  auto v = table::parse_double(value);
  if (!v) throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  return *v;
}

inline std::uint64_t seed_value(const std::string& key, const std::string& value) {
  auto v = table::parse_int<std::uint64_t>(value);
  if (!v) throw ConfigError("key '" + key + "': expected a non-negative 64-bit integer, got '" + value + "'");
  return *v;
}

inline std::string path_value(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal().string();
}

}  // namespace detail

/// Applies one setting. Relative paths resolve against `base`.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                          const std::filesystem::path& base = {}) {
  using namespace detail;
  if (key == "history_start") cfg.history_start = int_value(key, value);
  else if (key == "train_start") cfg.train_start = int_value(key, value);
  else if (key == "train_end") cfg.train_end = int_value(key, value);
  else if (key == "forecast_end") cfg.forecast_end = int_value(key, value);
  else if (key == "test_start") cfg.test_start = int_value(key, value);
  else if (key == "test_end") cfg.test_end = int_value(key, value);
  else if (key == "max_cohort") cfg.max_cohort = int_value(key, value);
  else if (key == "max_predict_cohort") cfg.max_predict_cohort = value == "auto" ? 0 : int_value(key, value);
  else if (key == "fit_mode") cfg.fit_mode = parse_fit_mode(value);
  else if (key == "significance_level") cfg.significance_level = double_value(key, value);
  else if (key == "min_cells") cfg.min_cells = int_value(key, value);
  else if (key == "replicates") cfg.replicates = int_value(key, value);
  else if (key == "seed") cfg.seed = seed_value(key, value);
  else if (key == "test_membership") {
    if (value == "active_at_start") cfg.test_membership = TestMembership::active_at_start;
    else if (value == "any_in_history") cfg.test_membership = TestMembership::any_in_history;
    else throw ConfigError("key 'test_membership': expected active_at_start or any_in_history, got '" + value + "'");
  } else if (key == "n_boot") cfg.n_boot = int_value(key, value);
  else if (key == "dump_replicates") cfg.dump_replicates = int_value(key, value);
  else if (key == "corpus") {
    cfg.corpus.clear();
    for (const auto& p : split_list(value)) cfg.corpus.push_back(path_value(p, base));
  } else if (key == "format") {
    if (value != "xml" && value != "tabular" && value != "auto") {
      throw ConfigError("key 'format': expected xml, tabular or auto, got '" + value + "'");
    }
    cfg.format = value;
  } else if (key == "delimiter") {
    if (value == "tab" || value == "\\t") cfg.delimiter = '\t';
    else if (value.size() == 1) cfg.delimiter = value[0];
    else throw ConfigError("key 'delimiter': expected a single character or 'tab'");
  } else if (key == "entities") cfg.entities = value.empty() ? "" : path_value(value, base);
  else if (key == "year_min") cfg.year_min = int_value(key, value);
  else if (key == "year_max") cfg.year_max = int_value(key, value);
  else if (key == "histories") cfg.histories = path_value(value, base);
  else if (key == "model") cfg.model = path_value(value, base);
  else if (key == "ensemble_dir") cfg.ensemble_dir = path_value(value, base);
  else if (key == "out") cfg.out = path_value(value, base);
  else if (key == "plots") {
    if (value == "1" || value == "true" || value == "yes") cfg.plots = true;
    else if (value == "0" || value == "false" || value == "no") cfg.plots = false;
    else throw ConfigError("key 'plots': expected true or false");
  } else if (key == "threads") {
    int t = int_value(key, value);
    if (t < 1) throw ConfigError("key 'threads' must be at least 1");
    cfg.threads = static_cast<unsigned>(t);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void apply_settings(RunConfig& cfg, const KeyValues& kv, const std::filesystem::path& base = {}) {
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v, base);
}

/// Reads a config file; relative paths in it resolve against its directory.
inline RunConfig load_config(const std::string& path) {
  auto in = table::open_input(path);
  RunConfig cfg;
  apply_settings(cfg, parse_key_values(in), std::filesystem::path(path).parent_path());
  return cfg;
}

enum class ConfigNeeds { ingest, windows };

/// Checks value ranges and, for `windows`, that every window is present and
/// T0 < t_0 < t_L <= t_J, t_0 <= t_X < t_Y <= t_J.
inline void validate(const RunConfig& cfg, ConfigNeeds needs) {
  if (cfg.year_min > cfg.year_max) throw ConfigError("year_min must not exceed year_max");
  if (cfg.max_cohort < 1) throw ConfigError("max_cohort must be at least 1");
  if (cfg.max_predict_cohort < 0) throw ConfigError("max_predict_cohort must be 'auto' or positive");
  if (!(cfg.significance_level > 0.0 && cfg.significance_level <= 1.0)) {
    throw ConfigError("significance_level must be in (0, 1]");
  }
  if (cfg.min_cells < 2) throw ConfigError("min_cells must be at least 2");
  if (cfg.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (cfg.n_boot < 200) throw ConfigError("n_boot must be at least 200");
  if (cfg.dump_replicates < 0) throw ConfigError("dump_replicates must be non-negative");
  if (needs == ConfigNeeds::ingest) return;

  const std::pair<const char*, const std::optional<int>*> required[] = {
      {"history_start", &cfg.history_start}, {"train_start", &cfg.train_start}, {"train_end", &cfg.train_end},
      {"forecast_end", &cfg.forecast_end},   {"test_start", &cfg.test_start},   {"test_end", &cfg.test_end}};
  for (auto [name, v] : required) {
    if (!v->has_value()) throw ConfigError(std::string("missing required key '") + name + "'");
  }
  const int T0 = *cfg.history_start, t0 = *cfg.train_start, tL = *cfg.train_end, tJ = *cfg.forecast_end;
  const int tX = *cfg.test_start, tY = *cfg.test_end;
  auto order = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("window order violated: " + what);
  };
  order(T0 < t0, "history_start < train_start");
  order(t0 < tL, "train_start < train_end");
  order(tL <= tJ, "train_end <= forecast_end");
  order(tX < tY, "test_start < test_end (got test_start=" + std::to_string(tX) + ", test_end=" +
                     std::to_string(tY) + ")");
  order(t0 <= tX, "train_start <= test_start");
  order(tY <= tJ, "test_end <= forecast_end");
}

/// Generator spec from key=value text: alpha, beta (comma lists), history_start,
/// train_start, forecast_end, n_authors, seed, and either entry_years = A:B
/// (uniform) or entry_weights = year:w, year:w, ...
inline GeneratorSpec parse_generator_spec(std::istream& in) {
  GeneratorSpec spec;
  bool have_entry = false;
  auto numbers = [](const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& s : detail::split_list(value)) out.push_back(detail::double_value(key, s));
    return out;
  };
  for (const auto& [key, value] : parse_key_values(in)) {
    if (key == "alpha") spec.true_alpha = numbers(key, value);
    else if (key == "beta") spec.true_beta = numbers(key, value);
    else if (key == "history_start") spec.history_start = detail::int_value(key, value);
    else if (key == "train_start") spec.train_start = detail::int_value(key, value);
    else if (key == "forecast_end") spec.forecast_end = detail::int_value(key, value);
    else if (key == "n_authors") {
      auto v = table::parse_int<long long>(value);
      if (!v) throw ConfigError("key 'n_authors': expected an integer");
      spec.n_authors = *v;
    } else if (key == "seed") spec.seed = detail::seed_value(key, value);
    else if (key == "entry_years") {
      if (have_entry) throw ConfigError("give either entry_years or entry_weights, not both");
      auto colon = value.find(':');
      if (colon == std::string::npos) throw ConfigError("key 'entry_years': expected FIRST:LAST");
      int a = detail::int_value(key, detail::strip(value.substr(0, colon)));
      int b = detail::int_value(key, detail::strip(value.substr(colon + 1)));
      if (a > b) throw ConfigError("key 'entry_years': FIRST must not exceed LAST");
      for (int y = a; y <= b; ++y) spec.entry_weights[y] = 1.0;
      have_entry = true;
    } else if (key == "entry_weights") {
      if (have_entry) throw ConfigError("give either entry_years or entry_weights, not both");
      for (const auto& item : detail::split_list(value)) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("key 'entry_weights': expected year:weight items");
        spec.entry_weights[detail::int_value(key, detail::strip(item.substr(0, colon)))] =
            detail::double_value(key, detail::strip(item.substr(colon + 1)));
      }
      have_entry = true;
    } else {
      throw ConfigError("unknown generator key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

}  // namespace pubforge
