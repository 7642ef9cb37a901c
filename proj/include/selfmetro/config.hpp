/*
 * Copyright 2026 The selfmetro Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file config.hpp
 * @brief Scenario configuration: flat `section.key = value` text.
 *
 * Blank lines and text after `#` are ignored. Unknown keys are errors.
 * Lists are comma separated. The interaction is given either as
 * `system.g` or as `system.gN`, not both.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "grid.hpp"
#include "mctdh.hpp"
#include "tmi.hpp"

namespace selfmetro {

struct ScenarioConfig {
  PotentialParams trap{0.5, 50.0, 1.0, 0.1};
  double g = 0.01;
  int particles = 10;
  int modes = 2;
  StateKind state_kind = StateKind::coherent;
  double half_width = 8.0;
  int n_points = 257;
  EvolutionConfig evolution{1e-4, 2.0, 100, 1e-8, false};
  double delta_qfi = 1e-4;
  double delta_cfi = 1e-3;
  std::vector<int> n_list{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  double n_sweep_time = 1.77;
  double p4_min = 0.0;
  double p4_max = 0.25;
  double p4_step = 0.0025;
  double family_time = 1.77;
  std::vector<int> nu_list{1, 2, 4, 8, 16, 32, 64, 128, 256};
  int trials = 10000;
  std::uint64_t seed = 20240613;
  double x_true = 0.1;
  int outcome_right = 3;  ///< slice (n_L, n_R) = (N - n_R, n_R)
  std::string output_dir = "selfmetro_out";

  double gN() const { return g * particles; }
  Grid grid() const { return Grid(half_width, n_points); }

  void validate() const {
    trap.validate();
    if (!std::isfinite(g)) throw ConfigError("system.g must be finite");
    if (particles < 1 || particles > kMaxPermanentSize) throw ConfigError("system.N must be in [1, 25]");
    if (modes != 2 && modes != 4) throw ConfigError("system.M must be 2 or 4");
    (void)grid();
    evolution.validate();
    if (!(delta_qfi > 0.0) || !(delta_cfi > 0.0)) throw ConfigError("fisher deltas must be positive");
    for (int n : n_list)
      if (n < 1 || n > kMaxPermanentSize) throw ConfigError("fisher.n_list entries must be in [1, 25]");
    if (!(n_sweep_time > 0.0) || !(family_time > 0.0)) throw ConfigError("measurement times must be positive");
    (void)make_p4_grid(p4_min, p4_max, p4_step);
    for (int nu : nu_list)
      if (nu < 1) throw ConfigError("estimation.nu_list entries must be >= 1");
    if (trials < 2) throw ConfigError("estimation.trials must be >= 2");
    if (outcome_right < 0 || outcome_right > particles) throw ConfigError("estimation.outcome_nR out of range");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }

  FamilyScenario family_scenario(double t_final) const {
    FamilyScenario sc;
    sc.grid = grid();
    sc.trap = trap;
    sc.g = g;
    sc.particles = particles;
    sc.modes = modes;
    sc.kind = state_kind;
    sc.evolution = evolution;
    sc.evolution.t_final = t_final;
    return sc;
  }

  /// Canonical `key=value` lines, one per setting, sorted by key.
  std::string canonical(bool with_output_dir = true) const {
    auto join = [](const std::vector<int>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    std::map<std::string, std::string> kv{
        {"trap.p1", format_double(trap.p1)},
        {"trap.p2", format_double(trap.p2)},
        {"trap.p3", format_double(trap.p3)},
        {"trap.p4", format_double(trap.p4)},
        {"system.g", format_double(g)},
        {"system.N", std::to_string(particles)},
        {"system.M", std::to_string(modes)},
        {"system.state_kind", to_string(state_kind)},
        {"grid.half_width", format_double(half_width)},
        {"grid.n_points", std::to_string(n_points)},
        {"evolution.dt", format_double(evolution.dt)},
        {"evolution.t_final", format_double(evolution.t_final)},
        {"evolution.sample_stride", std::to_string(evolution.sample_stride)},
        {"evolution.regularization", format_double(evolution.regularization)},
        {"evolution.frozen_orbitals", evolution.frozen_orbitals ? "true" : "false"},
        {"fisher.delta_qfi", format_double(delta_qfi)},
        {"fisher.delta_cfi", format_double(delta_cfi)},
        {"fisher.n_list", join(n_list)},
        {"fisher.n_sweep_time", format_double(n_sweep_time)},
        {"family.p4_min", format_double(p4_min)},
        {"family.p4_max", format_double(p4_max)},
        {"family.p4_step", format_double(p4_step)},
        {"family.t", format_double(family_time)},
        {"estimation.nu_list", join(nu_list)},
        {"estimation.trials", std::to_string(trials)},
        {"estimation.seed", std::to_string(seed)},
        {"estimation.x_true", format_double(x_true)},
        {"estimation.outcome_nR", std::to_string(outcome_right)},
    };
    if (with_output_dir) kv["output_dir"] = output_dir;
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
  }

  /// Hash of every setting that affects results (the output directory does not).
  std::string hash() const { return fnv1a_hex(canonical(false)); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a finite number, got '" + v + "'");
  }
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  const long long n = parse_integer(key, v);
  if (n < -2147483647LL || n > 2147483647LL) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(n);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& cell : split_csv_line(v)) out.push_back(parse_int(key, trim(cell)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

}  // namespace detail

/// Parses configuration text on top of the defaults.
inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_g = false, have_gn = false;
  double gn = 0.0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string v = detail::trim(line.substr(eq + 1));
    if (seen.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
    seen[key] = lineno;
    using namespace detail;
    if (key == "trap.p1") c.trap.p1 = parse_double(key, v);
    else if (key == "trap.p2") c.trap.p2 = parse_double(key, v);
    else if (key == "trap.p3") c.trap.p3 = parse_double(key, v);
    else if (key == "trap.p4") c.trap.p4 = parse_double(key, v);
    else if (key == "system.g") c.g = parse_double(key, v), have_g = true;
    else if (key == "system.gN") gn = parse_double(key, v), have_gn = true;
    else if (key == "system.N") c.particles = parse_int(key, v);
    else if (key == "system.M") c.modes = parse_int(key, v);
    else if (key == "system.state_kind") c.state_kind = parse_state_kind(v);
    else if (key == "grid.half_width") c.half_width = parse_double(key, v);
    else if (key == "grid.n_points") c.n_points = parse_int(key, v);
    else if (key == "evolution.dt") c.evolution.dt = parse_double(key, v);
    else if (key == "evolution.t_final") c.evolution.t_final = parse_double(key, v);
    else if (key == "evolution.sample_stride") c.evolution.sample_stride = parse_int(key, v);
    else if (key == "evolution.regularization") c.evolution.regularization = parse_double(key, v);
    else if (key == "evolution.frozen_orbitals") c.evolution.frozen_orbitals = parse_bool(key, v);
    else if (key == "fisher.delta_qfi") c.delta_qfi = parse_double(key, v);
    else if (key == "fisher.delta_cfi") c.delta_cfi = parse_double(key, v);
    else if (key == "fisher.n_list") c.n_list = parse_int_list(key, v);
    else if (key == "fisher.n_sweep_time") c.n_sweep_time = parse_double(key, v);
    else if (key == "family.p4_min") c.p4_min = parse_double(key, v);
    else if (key == "family.p4_max") c.p4_max = parse_double(key, v);
    else if (key == "family.p4_step") c.p4_step = parse_double(key, v);
    else if (key == "family.t") c.family_time = parse_double(key, v);
    else if (key == "estimation.nu_list") c.nu_list = parse_int_list(key, v);
    else if (key == "estimation.trials") c.trials = parse_int(key, v);
    else if (key == "estimation.seed") {
      const long long s = parse_integer(key, v);
      if (s < 0) throw ConfigError(key + ": seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "estimation.x_true") c.x_true = parse_double(key, v);
    else if (key == "estimation.outcome_nR") c.outcome_right = parse_int(key, v);
    else if (key == "output_dir") c.output_dir = v;
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (have_g && have_gn) throw ConfigError("set either system.g or system.gN, not both");
  if (have_gn) c.g = gn / c.particles;
  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace selfmetro
