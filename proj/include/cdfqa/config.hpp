#pragma once
// Experiment configuration: a diffable "key = value" text format with a
// versioned schema tag, plus the expansion of a config into concrete runs.
//
// A config names either a preset or an explicit protocol, never both.  An
// explicit protocol may be swept over up to two axes (alpha, n_sites,
// delta_t, pool); the cross product defines one output curve per point.

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "noisy.hpp"
#include "protocol.hpp"

namespace cdfqa {

inline constexpr const char* kConfigSchema = "cdfqa-config-1";

struct SweepAxis {
  std::string axis;                 // alpha | n_sites | delta_t | pool
  std::vector<std::string> values;  // raw tokens, validated per axis
};

struct ExperimentConfig {
  std::optional<std::string> preset;
  ProtocolSpec spec;
  std::vector<SweepAxis> sweeps;  // 0..2 distinct axes
  std::string output_name;        // subdirectory under the output root
  std::uint64_t seed = 1;
  int shots = 0;  // 0: exact expectation values for the feedback fields
  std::optional<NoiseSpec> noise;
  bool extrapolate = false;
  int bin_count = 8;
  bool record_bins = false;
  bool measure_column = false;  // append cumulative parallel-measurement count
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] inline void fail(const std::string& where, int line,
                              const std::string& msg) {
  throw config_error(where + ":" + std::to_string(line) + ": " + msg);
}

inline double to_double(const std::string& v, const std::string& where,
                        int line) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    fail(where, line, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) fail(where, line, "trailing junk in number '" + v + "'");
  return out;
}

inline long to_long(const std::string& v, const std::string& where, int line) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    fail(where, line, "expected an integer, got '" + v + "'");
  }
  if (used != v.size())
    fail(where, line, "trailing junk in integer '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& v, const std::string& where, int line) {
  if (v == "on" || v == "true") return true;
  if (v == "off" || v == "false") return false;
  fail(where, line, "expected on/off, got '" + v + "'");
}

}  // namespace config_detail

// Parses a config from a stream.  `where` names the source (file name) for
// line-numbered diagnostics.  Throws config_error on any structural problem.
inline ExperimentConfig parse_config(std::istream& in,
                                     const std::string& where) {
  using namespace config_detail;
  ExperimentConfig cfg;
  bool schema_seen = false;
  std::set<std::string> seen;       // duplicate detection for scalar keys
  std::set<std::string> physics;    // explicit-protocol keys encountered
  bool fold_seen = false, extrap_seen = false, shots_seen = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      fail(where, line, "expected 'key = value', got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) fail(where, line, "missing key before '='");
    if (value.empty()) fail(where, line, "missing value for '" + key + "'");
    if (key != "sweep" && !seen.insert(key).second)
      fail(where, line, "duplicate key '" + key + "'");

    if (key == "schema") {
      if (value != kConfigSchema)
        fail(where, line, "unsupported schema '" + value + "' (expected '" +
                              std::string(kConfigSchema) + "')");
      schema_seen = true;
      continue;
    }
    if (!schema_seen)
      fail(where, line, "first entry must be 'schema = " +
                            std::string(kConfigSchema) + "'");

    if (key == "preset") {
      cfg.preset = value;
    } else if (key == "n_sites") {
      cfg.spec.chain.n_sites = static_cast<int>(to_long(value, where, line));
      physics.insert(key);
    } else if (key == "coupling_j") {
      cfg.spec.chain.coupling_j = to_double(value, where, line);
      physics.insert(key);
    } else if (key == "field_hz") {
      cfg.spec.chain.field_hz = to_double(value, where, line);
      physics.insert(key);
    } else if (key == "field_hx") {
      cfg.spec.chain.field_hx = to_double(value, where, line);
      physics.insert(key);
    } else if (key == "boundary") {
      if (value == "periodic")
        cfg.spec.chain.boundary = Boundary::periodic;
      else if (value == "open")
        cfg.spec.chain.boundary = Boundary::open;
      else
        fail(where, line, "boundary must be periodic or open");
      physics.insert(key);
    } else if (key == "h1") {
      try {
        cfg.spec.h1 = parse_tag(value);
      } catch (const config_error& e) {
        fail(where, line, e.what());
      }
      physics.insert(key);
    } else if (key == "h_cd") {
      try {
        cfg.spec.h_cd = parse_tag(value);
      } catch (const config_error& e) {
        fail(where, line, e.what());
      }
      physics.insert(key);
    } else if (key == "alpha") {
      cfg.spec.alpha = to_double(value, where, line);
      physics.insert(key);
    } else if (key == "delta_t") {
      cfg.spec.delta_t = to_double(value, where, line);
      physics.insert(key);
    } else if (key == "n_layers") {
      cfg.spec.n_layers = static_cast<int>(to_long(value, where, line));
      physics.insert(key);
    } else if (key == "mode") {
      if (value == "exact")
        cfg.spec.mode = EvolutionMode::exact;
      else if (value == "trotter1")
        cfg.spec.mode = EvolutionMode::trotter1;
      else
        fail(where, line, "mode must be exact or trotter1");
      physics.insert(key);
    } else if (key == "h_add") {
      cfg.spec.h_add_enabled = to_bool(value, where, line);
      physics.insert(key);
    } else if (key == "sweep") {
      const auto colon = value.find(':');
      if (colon == std::string::npos)
        fail(where, line, "sweep syntax: 'sweep = axis: v1, v2, ...'");
      SweepAxis axis;
      axis.axis = trim(value.substr(0, colon));
      axis.values = split_list(value.substr(colon + 1));
      if (axis.axis != "alpha" && axis.axis != "n_sites" &&
          axis.axis != "delta_t" && axis.axis != "pool")
        fail(where, line, "sweep axis must be one of alpha, n_sites, delta_t, pool");
      if (axis.values.empty() ||
          (axis.values.size() == 1 && axis.values[0].empty()))
        fail(where, line, "sweep axis needs a non-empty value list");
      for (const auto& other : cfg.sweeps)
        if (other.axis == axis.axis)
          fail(where, line, "sweep axis '" + axis.axis + "' repeated");
      if (cfg.sweeps.size() == 2)
        fail(where, line, "at most two sweep axes are supported");
      // Validate values now so the diagnostic carries the line number.
      for (const auto& v : axis.values) {
        if (axis.axis == "alpha" || axis.axis == "delta_t")
          to_double(v, where, line);
        else if (axis.axis == "n_sites")
          to_long(v, where, line);
        else {
          try {
            parse_tag(v);
          } catch (const config_error& e) {
            fail(where, line, e.what());
          }
        }
      }
      cfg.sweeps.push_back(std::move(axis));
      physics.insert(key);
    } else if (key == "output") {
      cfg.output_name = value;
    } else if (key == "seed") {
      const long s = to_long(value, where, line);
      if (s < 0) fail(where, line, "seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "shots") {
      const long s = to_long(value, where, line);
      if (s < 0) fail(where, line, "shots must be non-negative");
      cfg.shots = static_cast<int>(s);
      shots_seen = true;
    } else if (key == "noise_p") {
      NoiseSpec n = cfg.noise.value_or(NoiseSpec{});
      n.per_layer_error = to_double(value, where, line);
      cfg.noise = n;
    } else if (key == "fold_factors") {
      NoiseSpec n = cfg.noise.value_or(NoiseSpec{});
      n.fold_factors.clear();
      for (const auto& v : split_list(value))
        n.fold_factors.push_back(static_cast<int>(to_long(v, where, line)));
      cfg.noise = n;
      fold_seen = true;
    } else if (key == "extrapolate") {
      cfg.extrapolate = to_bool(value, where, line);
      extrap_seen = true;
    } else if (key == "bin_count") {
      cfg.bin_count = static_cast<int>(to_long(value, where, line));
      if (cfg.bin_count < 1) fail(where, line, "bin_count must be positive");
    } else if (key == "record_bins") {
      cfg.record_bins = to_bool(value, where, line);
    } else if (key == "measure_column") {
      cfg.measure_column = to_bool(value, where, line);
    } else {
      fail(where, line, "unknown key '" + key + "'");
    }
  }
  if (!schema_seen)
    throw config_error(where + ": missing 'schema = " +
                       std::string(kConfigSchema) + "' line");

  if (cfg.preset) {
    if (!physics.empty())
      throw config_error(where + ": a preset config takes no protocol keys (found '" +
                         *physics.begin() + "'); presets pin their own parameters");
    if (cfg.noise || shots_seen || extrap_seen || fold_seen)
      throw config_error(where +
                         ": a preset config takes no shots/noise overrides");
  } else if (physics.empty()) {
    throw config_error(where +
                       ": config provides neither a preset nor an explicit protocol");
  }
  if (cfg.noise && !fold_seen) cfg.noise->fold_factors = {1, 3};
  if (cfg.extrapolate && !cfg.noise)
    throw config_error(where + ": extrapolate = on requires noise_p");
  if (cfg.noise && cfg.shots > 0)
    throw config_error(where + ": sampled runs and the noisy channel are separate "
                       "paths; drop one of shots/noise_p");
  if (cfg.shots > 0 && cfg.spec.mode != EvolutionMode::exact)
    throw config_error(where + ": sampled runs require mode = exact");
  if (cfg.noise) {
    try {
      validate_noise(*cfg.noise);
    } catch (const domain_error& e) {
      throw config_error(where + ": " + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

// One concrete run produced by sweep expansion.
struct RunPoint {
  std::string label;  // curve file stem, unique within the config
  ProtocolSpec spec;
};

// File-system-safe rendering of an operator tag ("Y + 0.5*YZ" -> "Y+0.5xYZ").
inline std::string sanitize_tag(const OperatorTag& tag) {
  std::string out;
  for (char c : tag.text()) {
    if (c == ' ') continue;
    out.push_back(c == '*' ? 'x' : c);
  }
  return out;
}

namespace config_detail {

inline std::string number_fragment(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace config_detail

// Cross product of the sweep axes, first axis outermost.  Labels carry only
// the varying coordinates; a swept pool value leads the label bare, other
// axes contribute alpha<v> / N<v> / dt<v> fragments.
inline std::vector<RunPoint> expand_config(const ExperimentConfig& cfg) {
  if (cfg.preset)
    throw std::logic_error("expand_config: resolve the preset first");
  std::vector<RunPoint> points{{"", cfg.spec}};
  for (const auto& axis : cfg.sweeps) {
    std::vector<RunPoint> next;
    for (const auto& point : points) {
      for (const auto& v : axis.values) {
        RunPoint p = point;
        std::string frag;
        if (axis.axis == "alpha") {
          p.spec.alpha = std::stod(v);
          frag = "alpha" + config_detail::number_fragment(p.spec.alpha);
        } else if (axis.axis == "n_sites") {
          p.spec.chain.n_sites = static_cast<int>(std::stol(v));
          frag = "N" + std::to_string(p.spec.chain.n_sites);
        } else if (axis.axis == "delta_t") {
          p.spec.delta_t = std::stod(v);
          frag = "dt" + config_detail::number_fragment(p.spec.delta_t);
        } else {
          p.spec.h_cd = parse_tag(v);
          frag = sanitize_tag(p.spec.h_cd);
        }
        if (axis.axis == "pool" && !p.label.empty())
          p.label = frag + "_" + p.label;  // pool fragment leads the label
        else
          p.label = p.label.empty() ? frag : p.label + "_" + frag;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  for (auto& p : points)
    if (p.label.empty()) p.label = sanitize_tag(p.spec.h_cd);
  return points;
}

// Structural + physics validation without running anything.
inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.preset) return;  // preset parameters are validated by their driver
  for (const auto& point : expand_config(cfg)) validate_protocol(point.spec);
}

}  // namespace cdfqa
