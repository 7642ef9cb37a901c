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
 * @file scenario.hpp
 * @brief Fisher-information sweeps over time and particle number.
 *
 * A sweep runs ten trajectories from one initial state: the self-consistent
 * run at p4 and at p4 ± δ_qfi, p4 ± δ_cfi, and the frozen-orbital runs at p4,
 * p4 ± δ_qfi and p4 ± δ_cfi.
 */

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "csv.hpp"
#include "estimation.hpp"
#include "likelihood.hpp"
#include "mctdh.hpp"
#include "metrology.hpp"
#include "parallel.hpp"
#include "tmi.hpp"

namespace selfmetro {

struct FisherRow {
  double t = 0.0;
  int particles = 0;
  StateKind kind = StateKind::coherent;
  double qfi_sc = 0.0;            ///< full pure-state QFI, out-of-span part included
  double qfi_sc_span_only = 0.0;  ///< the seven term groups alone
  double qfi_tmi_analytic = 0.0;
  double qfi_tmi_numeric = 0.0;  ///< the seven-group formula on frozen-orbital trajectories
  double cfi_sc = 0.0;
  double cfi_tmi = 0.0;
  double antihermiticity_defect = 0.0;
  std::array<double, 7> sc_terms{};
};

struct FisherSweep {
  std::vector<FisherRow> rows;
  std::vector<TrajectoryLog> logs;  ///< every trajectory of the sweep
};

struct FisherSettings {
  double delta_qfi = 1e-4;
  double delta_cfi = 1e-3;
};

namespace detail {

struct Recorded {
  std::vector<ManyBodyState> states;
  TrajectoryLog log;
};

inline Recorded record_trajectory(const FamilyScenario& sc, const ManyBodyState& initial, double p4, bool frozen) {
  EvolutionConfig cfg = sc.evolution;
  cfg.frozen_orbitals = frozen;
  const System sys(sc.grid, sc.trap.with_tilt(p4), sc.g);
  Recorded r;
  auto result = evolve(sys, initial, cfg, [&](const ManyBodyState& s) { r.states.push_back(s); });
  r.log = std::move(result.second);
  return r;
}

inline OutcomeDistribution counting_distribution(const Grid& grid, const ManyBodyState& s, PermanentCache* cache) {
  return outcome_distribution(two_mode_projection(s.c, *s.basis), side_probabilities(grid, s.orbitals.leftCols(2)),
                              s.particles(), cache);
}

}  // namespace detail

/// Fisher information at every recorded sample of one scenario (tilt sc.trap.p4).
inline FisherSweep fisher_time_series(const FamilyScenario& sc, const FisherSettings& fs,
                                      int threads = thread_count()) {
  if (!(fs.delta_qfi > 0.0) || !(fs.delta_cfi > 0.0)) throw ConfigError("fisher: deltas must be positive");
  const ManyBodyState initial = prepare_initial_state(sc.grid, sc.trap, sc.particles, sc.modes, sc.kind);
  const double p4 = sc.trap.p4;
  struct Leg {
    double p4;
    bool frozen;
  };
  const std::array<Leg, 10> legs{{{p4, false},
                                 {p4 + fs.delta_qfi, false},
                                 {p4 - fs.delta_qfi, false},
                                 {p4 + fs.delta_cfi, false},
                                 {p4 - fs.delta_cfi, false},
                                 {p4, true},
                                 {p4 + fs.delta_qfi, true},
                                 {p4 - fs.delta_qfi, true},
                                 {p4 + fs.delta_cfi, true},
                                 {p4 - fs.delta_cfi, true}}};
  std::array<detail::Recorded, 10> rec;
  parallel_for(10, [&](int i) {
    const Leg& leg = legs[static_cast<std::size_t>(i)];
    rec[static_cast<std::size_t>(i)] = detail::record_trajectory(sc, initial, leg.p4, leg.frozen);
  }, threads);

  const double deps = dipole_difference(sc.grid, initial.orbitals.col(0), initial.orbitals.col(1));
  FisherSweep out;
  for (auto& r : rec) out.logs.push_back(r.log);
  PermanentCache cache;
  const std::size_t samples = rec[0].states.size();
  for (std::size_t k = 0; k < samples; ++k) {
    auto at = [&](std::size_t leg) -> const ManyBodyState& { return rec[leg].states[k]; };
    FisherRow row;
    row.t = at(0).t;
    row.particles = sc.particles;
    row.kind = sc.kind;

    const auto d_sc = parameter_derivatives(sc.grid, at(0), at(1), at(2), fs.delta_qfi);
    const auto q_sc = qfi_pure_state(sc.grid, at(0), d_sc, densities(at(0).c, *at(0).basis));
    row.qfi_sc = q_sc.value_with_complement;
    row.qfi_sc_span_only = q_sc.value;
    row.sc_terms = q_sc.terms;
    row.antihermiticity_defect = d_sc.antihermiticity_defect;

    const auto d_tmi = parameter_derivatives(sc.grid, at(5), at(6), at(7), fs.delta_qfi);
    row.qfi_tmi_numeric = qfi_pure_state(sc.grid, at(5), d_tmi, densities(at(5).c, *at(5).basis)).value;
    row.qfi_tmi_analytic = chain_rule_qfi(tmi_qfi_analytic(sc.kind, sc.particles, row.t), deps);

    const auto p0 = detail::counting_distribution(sc.grid, at(0), &cache);
    const auto pp = detail::counting_distribution(sc.grid, at(3), &cache);
    const auto pm = detail::counting_distribution(sc.grid, at(4), &cache);
    const auto c_sc = cfi(pp, pm, p0, fs.delta_cfi);
    row.cfi_sc = c_sc.value;
    FisherReport q_full = q_sc;
    q_full.value = q_sc.value_with_complement;
    if (!cfi_bounded_by_qfi(q_full, c_sc))
      log_warning("fisher: CFI " + format_double(c_sc.value) + " exceeds QFI " + format_double(row.qfi_sc) +
                  " at t=" + format_double(row.t));

    const auto f0 = detail::counting_distribution(sc.grid, at(5), &cache);
    const auto fp = detail::counting_distribution(sc.grid, at(8), &cache);
    const auto fm = detail::counting_distribution(sc.grid, at(9), &cache);
    row.cfi_tmi = cfi(fp, fm, f0, fs.delta_cfi).value;
    out.rows.push_back(row);
  }
  return out;
}

/// Fisher information at a single time for each particle number, gN held fixed.
inline FisherSweep fisher_particle_sweep(const FamilyScenario& base, const std::vector<int>& particle_numbers,
                                         double t, const FisherSettings& fs, int threads = thread_count()) {
  FisherSweep out;
  const double gn = base.g * base.particles;
  for (int n : particle_numbers) {
    FamilyScenario sc = base;
    sc.particles = n;
    sc.g = gn / n;
    sc.evolution.t_final = t;
    sc.evolution.sample_stride = std::max(1, sc.evolution.steps());
    auto sweep = fisher_time_series(sc, fs, threads);
    out.rows.push_back(sweep.rows.back());
    for (auto& l : sweep.logs) out.logs.push_back(std::move(l));
  }
  return out;
}

inline void write_fisher_csv(const std::filesystem::path& path, const std::string& comment,
                             const std::vector<FisherRow>& rows, bool by_particles) {
  CsvWriter w(path, comment,
              {by_particles ? "N" : "t", "qfi_sc", "qfi_tmi_analytic", "cfi_sc", "cfi_tmi", "state_kind",
               "qfi_sc_span_only", "qfi_tmi_numeric"});
  for (const auto& r : rows) {
    CsvWriter::Cell x = by_particles ? CsvWriter::Cell{static_cast<long long>(r.particles)} : CsvWriter::Cell{r.t};
    w.row({x, r.qfi_sc, r.qfi_tmi_analytic, r.cfi_sc, r.cfi_tmi, to_string(r.kind), r.qfi_sc_span_only,
           r.qfi_tmi_numeric});
  }
}

}  // namespace selfmetro
