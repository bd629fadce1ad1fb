#pragma once

// Flat key-value run configuration.
//
//   # comment
//   [lattice]
//   W = 12
//   model.h_x_list = 0.2, 0.3, 0.45
//
// Keys inside a [section] are prefixed with the section name; dotted keys are
// taken as written. Unknown and duplicate keys are rejected. A run manifest
// (JSON with a "config" object of key -> value strings) is accepted as well.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polaron_tfim/errors.hpp"
#include "polaron_tfim/lattice.hpp"
#include "polaron_tfim/model.hpp"
#include "polaron_tfim/qmc_engine.hpp"

namespace polaron_tfim {

enum class ExperimentKind { Relax, Rates, Collapse, SwCheck, EdCheck };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Relax: return "relax";
    case ExperimentKind::Rates: return "rates";
    case ExperimentKind::Collapse: return "collapse";
    case ExperimentKind::SwCheck: return "sw-check";
    case ExperimentKind::EdCheck: return "ed-check";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Relax, ExperimentKind::Rates, ExperimentKind::Collapse, ExperimentKind::SwCheck,
                 ExperimentKind::EdCheck}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

enum class InitKind { DomainWall, GroundState };

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Relax;
  int width = 0;
  int height = 0;
  ModelParams model;
  std::vector<double> h_x_list;
  qmc::TrotterPolicy trotter;
  int n_steps = 0;
  double temperature = 0.0;
  std::vector<double> t_grid;
  std::vector<std::uint64_t> seeds;
  InitKind init = InitKind::DomainWall;
  Sublattice left = Sublattice::A;
  Sublattice right = Sublattice::B;
  int wall_column = 0;
  double Z_h = 0.0;
  double Z_p = 0.0;
  std::string collapse_input;
  double n_min = 0.0;
  double n_max = 3.0;
  std::string output_dir;
  bool write_trajectory = true;
  /// Every key (defaults included) with its textual value, except output.dir.
  std::map<std::string, std::string> resolved;
};

namespace config_detail {

enum class Type { Int, Double, Bool, String, DoubleList, SeedList };

struct KeySpec {
  Type type;
  std::set<ExperimentKind> required;
  std::optional<std::string> fallback;
};

inline const std::map<std::string, KeySpec>& schema() {
  using K = ExperimentKind;
  static const std::map<std::string, KeySpec> keys{
      {"experiment.kind", {Type::String, {}, std::nullopt}},
      {"lattice.W", {Type::Int, {K::Relax, K::Rates}, std::nullopt}},
      {"lattice.H", {Type::Int, {K::Relax, K::Rates}, std::nullopt}},
      {"model.J", {Type::Double, {}, "1"}},
      {"model.h_z", {Type::Double, {}, "2"}},
      {"model.h_x", {Type::Double, {K::Relax, K::SwCheck}, std::nullopt}},
      {"model.h_x_list", {Type::DoubleList, {K::Rates, K::EdCheck}, std::nullopt}},
      {"dynamics.M", {Type::Int, {}, "32"}},
      {"dynamics.auto_trotter", {Type::Bool, {}, "true"}},
      {"dynamics.max_dtau_energy", {Type::Double, {}, "0.3"}},
      {"dynamics.n_steps", {Type::Int, {K::Relax, K::Rates}, std::nullopt}},
      {"dynamics.T", {Type::Double, {K::Relax}, std::nullopt}},
      {"dynamics.T_grid", {Type::DoubleList, {K::Rates}, std::nullopt}},
      {"dynamics.seeds", {Type::SeedList, {K::Relax, K::Rates}, std::nullopt}},
      {"init.kind", {Type::String, {}, "domain_wall"}},
      {"init.left", {Type::String, {}, "A"}},
      {"init.right", {Type::String, {}, "B"}},
      {"init.wall_column", {Type::Int, {}, std::nullopt}},
      {"sw.Z_h", {Type::Double, {K::SwCheck, K::EdCheck}, std::nullopt}},
      {"sw.Z_p", {Type::Double, {K::SwCheck, K::EdCheck}, std::nullopt}},
      {"collapse.input", {Type::String, {}, std::nullopt}},
      {"collapse.n_min", {Type::Double, {}, "0"}},
      {"collapse.n_max", {Type::Double, {}, "3"}},
      {"output.dir", {Type::String, {}, std::nullopt}},
      {"output.trajectory", {Type::Bool, {}, "true"}},
  };
  return keys;
}

struct Entry {
  std::string value;
  int line = 0;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::map<std::string, Entry> tokenize(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", line_no, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "empty key");
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    if (!schema().contains(key)) throw ConfigError(key, line_no, "unknown key");
    if (auto it = entries.find(key); it != entries.end()) {
      throw ConfigError(key, line_no, "duplicate key, first defined on line " + std::to_string(it->second.line));
    }
    entries.emplace(key, Entry{value, line_no});
  }
  return entries;
}

inline std::map<std::string, Entry> from_manifest(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", 0, std::string("malformed manifest JSON: ") + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("config", 0, "manifest has no config object");
  std::map<std::string, Entry> entries;
  for (const auto& [key, value] : j["config"].items()) {
    if (!schema().contains(key)) throw ConfigError(key, 0, "unknown key");
    if (!value.is_string()) throw ConfigError(key, 0, "manifest values must be strings");
    entries.emplace(key, Entry{value.get<std::string>(), 0});
  }
  return entries;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.contains(key); }
  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  std::string text(const std::string& key) const {
    if (auto it = entries_.find(key); it != entries_.end()) return it->second.value;
    const auto& spec = schema().at(key);
    if (spec.fallback) return *spec.fallback;
    throw ConfigError(key, 0, "missing required key");
  }

  int integer(const std::string& key) const {
    const std::string v = text(key);
    std::size_t pos = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty() || out < INT32_MIN || out > INT32_MAX) {
      throw ConfigError(key, line(key), "expected an integer, got '" + v + "'");
    }
    return static_cast<int>(out);
  }

  double number(const std::string& key) const { return parse_double(key, text(key)); }

  bool boolean(const std::string& key) const {
    const std::string v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, line(key), "expected true or false, got '" + v + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(text(key))) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError(key, line(key), "list is empty");
    return out;
  }

  std::vector<std::uint64_t> seeds(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(text(key))) {
      std::size_t pos = 0;
      std::uint64_t v = 0;
      try {
        if (item.front() == '-') throw std::invalid_argument("negative");
        v = std::stoull(item, &pos, 0);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != item.size()) throw ConfigError(key, line(key), "expected an unsigned 64-bit seed, got '" + item + "'");
      out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key, line(key), "seed list is empty");
    return out;
  }

  std::map<std::string, std::string> resolved() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, spec] : schema()) {
      if (key == "output.dir") continue;
      if (auto it = entries_.find(key); it != entries_.end()) {
        out[key] = it->second.value;
      } else if (spec.fallback) {
        out[key] = *spec.fallback;
      }
    }
    return out;
  }

 private:
  double parse_double(const std::string& key, const std::string& v) const {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty() || !std::isfinite(out)) {
      throw ConfigError(key, line(key), "expected a number, got '" + v + "'");
    }
    return out;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace config_detail

/// Parses and validates a configuration. `expected` is the CLI subcommand; it
/// supplies the kind when experiment.kind is absent and must agree otherwise.
inline RunConfig parse_config(const std::string& text, std::optional<ExperimentKind> expected = std::nullopt) {
  using namespace config_detail;
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_manifest = first != std::string::npos && text[first] == '{';
  Reader r(is_manifest ? from_manifest(text) : tokenize(text));

  RunConfig cfg;
  if (r.has("experiment.kind")) {
    const auto kind = parse_kind(r.text("experiment.kind"));
    if (!kind) throw ConfigError("experiment.kind", r.line("experiment.kind"), "unknown experiment kind");
    if (expected && *expected != *kind) {
      throw ConfigError("experiment.kind", r.line("experiment.kind"),
                        "config is for '" + to_string(*kind) + "' but '" + to_string(*expected) + "' was requested");
    }
    cfg.kind = *kind;
  } else if (expected) {
    cfg.kind = *expected;
  } else {
    throw ConfigError("experiment.kind", 0, "missing required key");
  }

  for (const auto& [key, spec] : schema()) {
    if (spec.required.contains(cfg.kind) && !r.has(key)) {
      throw ConfigError(key, 0, "missing required key for '" + to_string(cfg.kind) + "'");
    }
  }

  auto fail = [&](const std::string& key, const std::string& msg) { return ConfigError(key, r.line(key), msg); };

  cfg.model.J = r.number("model.J");
  if (!(cfg.model.J > 0.0)) throw fail("model.J", "J must be positive");
  cfg.model.h_z = r.number("model.h_z");
  if (r.has("model.h_x")) {
    cfg.model.h_x = r.number("model.h_x");
    if (cfg.model.h_x < 0.0) throw fail("model.h_x", "h_x must be non-negative");
  }
  if (r.has("model.h_x_list")) {
    cfg.h_x_list = r.numbers("model.h_x_list");
    for (double h : cfg.h_x_list) {
      if (h < 0.0) throw fail("model.h_x_list", "h_x must be non-negative");
    }
    auto sorted = cfg.h_x_list;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw fail("model.h_x_list", "duplicate h_x");
  }

  if (r.has("lattice.W") || r.has("lattice.H")) {
    cfg.width = r.integer("lattice.W");
    cfg.height = r.integer("lattice.H");
    for (const char* key : {"lattice.W", "lattice.H"}) {
      const int v = std::string(key) == "lattice.W" ? cfg.width : cfg.height;
      try {
        build_lattice(v, 3);
      } catch (const Error& e) {
        throw fail(key, e.what());
      }
    }
  }

  cfg.trotter.min_slices = r.integer("dynamics.M");
  if (cfg.trotter.min_slices < 1) throw fail("dynamics.M", "M must be at least 1");
  cfg.trotter.auto_raise = r.boolean("dynamics.auto_trotter");
  cfg.trotter.max_dtau_energy = r.number("dynamics.max_dtau_energy");
  if (!(cfg.trotter.max_dtau_energy > 0.0)) throw fail("dynamics.max_dtau_energy", "must be positive");
  if (r.has("dynamics.n_steps")) {
    cfg.n_steps = r.integer("dynamics.n_steps");
    if (cfg.n_steps < 1) throw fail("dynamics.n_steps", "need at least one step");
  }
  if (r.has("dynamics.T")) {
    cfg.temperature = r.number("dynamics.T");
    if (!(cfg.temperature > 0.0)) throw fail("dynamics.T", "temperature must be positive");
  }
  if (r.has("dynamics.T_grid")) {
    cfg.t_grid = r.numbers("dynamics.T_grid");
    for (std::size_t k = 0; k < cfg.t_grid.size(); ++k) {
      if (!(cfg.t_grid[k] > 0.0)) throw fail("dynamics.T_grid", "temperatures must be positive");
      if (k > 0 && !(cfg.t_grid[k] > cfg.t_grid[k - 1])) throw fail("dynamics.T_grid", "temperatures must increase");
    }
  }
  if (r.has("dynamics.seeds")) cfg.seeds = r.seeds("dynamics.seeds");

  const std::string init = r.text("init.kind");
  if (init == "domain_wall") {
    cfg.init = InitKind::DomainWall;
  } else if (init == "ground_state") {
    cfg.init = InitKind::GroundState;
  } else {
    throw fail("init.kind", "expected domain_wall or ground_state");
  }
  for (const char* key : {"init.left", "init.right"}) {
    try {
      (std::string(key) == "init.left" ? cfg.left : cfg.right) = sublattice_from_string(r.text(key));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw fail(key, e.what());
    }
  }
  cfg.wall_column = r.has("init.wall_column") ? r.integer("init.wall_column") : cfg.width / 2;
  if (cfg.init == InitKind::DomainWall && cfg.width > 0) {
    if (cfg.left == cfg.right) throw fail("init.right", "domain wall needs two different orderings");
    if (cfg.wall_column <= 0 || cfg.wall_column >= cfg.width) throw fail("init.wall_column", "must lie in (0, W)");
  }

  if (r.has("sw.Z_h")) cfg.Z_h = r.number("sw.Z_h");
  if (r.has("sw.Z_p")) cfg.Z_p = r.number("sw.Z_p");
  if (r.has("collapse.input")) cfg.collapse_input = r.text("collapse.input");
  cfg.n_min = r.number("collapse.n_min");
  cfg.n_max = r.number("collapse.n_max");
  if (!(cfg.n_max > cfg.n_min)) throw fail("collapse.n_max", "must exceed collapse.n_min");
  if (r.has("output.dir")) cfg.output_dir = r.text("output.dir");
  cfg.write_trajectory = r.boolean("output.trajectory");

  if (cfg.kind == ExperimentKind::Rates) {
    for (double h : cfg.h_x_list) {
      if (h > 0.0 && cfg.trotter.min_slices < 2) throw fail("dynamics.M", "h_x > 0 needs M >= 2");
    }
  }
  if (cfg.kind == ExperimentKind::Relax && cfg.model.h_x > 0.0 && cfg.trotter.min_slices < 2) {
    throw fail("dynamics.M", "h_x > 0 needs M >= 2");
  }
  if (cfg.kind == ExperimentKind::EdCheck && cfg.h_x_list.size() < 3) {
    throw fail("model.h_x_list", "ed-check needs at least three h_x values");
  }

  cfg.resolved = r.resolved();
  cfg.resolved["experiment.kind"] = to_string(cfg.kind);
  return cfg;
}

}  // namespace polaron_tfim
