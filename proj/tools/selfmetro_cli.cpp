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

// selfmetro: batch driver for the prepare -> evolve -> fisher -> family -> estimate pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "selfmetro/selfmetro.hpp"

namespace fs = std::filesystem;
using namespace selfmetro;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNoInformation = 4;

struct Context {
  ScenarioConfig cfg;
  fs::path out;
  std::string comment;
  bool svg = false;
};

std::vector<StateKind> both_kinds() { return {StateKind::cat, StateKind::coherent}; }

void run_prepare(const Context& ctx) {
  const auto& c = ctx.cfg;
  const Grid grid = c.grid();
  const RealFunction v = eval_potential(c.trap.with_tilt(0.0), grid);
  const auto pairs = lowest_eigenstates(grid, v, c.modes);
  CsvWriter eig(ctx.out / "eigenpairs.csv", ctx.comment, {"index", "energy", "parity"});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    eig.row({static_cast<long long>(i), pairs[i].energy, parity_expectation(grid, pairs[i].state)});
    log_info("eigenvalue " + std::to_string(i) + ": " + format_double(pairs[i].energy));
  }
  const ManyBodyState s = prepare_initial_state(grid, c.trap, c.particles, c.modes, c.state_kind);
  std::vector<SvgSeries> plot;
  for (int j = 0; j < c.modes; ++j) {
    CsvWriter w(ctx.out / ("orbital_" + std::to_string(j + 1) + ".csv"), ctx.comment, {"x", "re", "im"});
    SvgSeries series{"orbital " + std::to_string(j + 1), {}, {}, j % 2 == 1};
    for (int i = 0; i < grid.size(); ++i) {
      w.row({grid.x(i), s.orbitals(i, j).real(), s.orbitals(i, j).imag()});
      series.x.push_back(grid.x(i));
      series.y.push_back(s.orbitals(i, j).real());
    }
    plot.push_back(std::move(series));
  }
  if (ctx.svg) write_svg_chart(ctx.out / "orbitals.svg", "initial localized orbitals", "x", "phi", plot);
}

void run_evolve(const Context& ctx) {
  const auto& c = ctx.cfg;
  std::vector<SvgSeries> plot;
  std::vector<TrajectoryLog> logs(2);
  const auto kinds = both_kinds();
  parallel_for(2, [&](int i) {
    FamilyScenario sc = c.family_scenario(c.evolution.t_final);
    sc.kind = kinds[static_cast<std::size_t>(i)];
    const ManyBodyState initial = prepare_initial_state(sc.grid, sc.trap, sc.particles, sc.modes, sc.kind);
    const System sys(sc.grid, sc.trap, sc.g);
    logs[static_cast<std::size_t>(i)] = evolve(sys, initial, sc.evolution).second;
  });
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const auto& log = logs[i];
    write_trajectory_csv(ctx.out / ("trajectory_" + to_string(kinds[i]) + ".csv"), ctx.comment, log);
    log_info(to_string(kinds[i]) + ": min rho_tm " + format_double(log.min_rho_tm()) + ", energy drift " +
             format_double(log.relative_energy_drift()));
    SvgSeries s{to_string(kinds[i]), {}, {}, i == 1};
    for (const auto& smp : log.samples) s.x.push_back(smp.t), s.y.push_back(smp.rho_tm);
    plot.push_back(std::move(s));
  }
  if (ctx.svg) write_svg_chart(ctx.out / "rho_tm.svg", "two-mode fraction, gN=" + format_double(c.gN()), "t", "rho_tm", plot);
}

void plot_fisher(const Context& ctx, const std::string& name, const std::vector<FisherRow>& rows, bool by_n) {
  SvgSeries q{"QFI SC", {}, {}, false}, qa{"QFI TMI", {}, {}, true}, f{"CFI SC", {}, {}, false},
      ft{"CFI TMI", {}, {}, true};
  for (const auto& r : rows) {
    const double x = by_n ? r.particles : r.t;
    q.x.push_back(x), q.y.push_back(r.qfi_sc);
    qa.x.push_back(x), qa.y.push_back(r.qfi_tmi_analytic);
    f.x.push_back(x), f.y.push_back(r.cfi_sc);
    ft.x.push_back(x), ft.y.push_back(r.cfi_tmi);
  }
  write_svg_chart(ctx.out / (name + "_qfi.svg"), name, by_n ? "N" : "t", "QFI", {q, qa});
  write_svg_chart(ctx.out / (name + "_cfi.svg"), name, by_n ? "N" : "t", "CFI", {f, ft});
}

void run_fisher(const Context& ctx) {
  const auto& c = ctx.cfg;
  const FisherSettings settings{c.delta_qfi, c.delta_cfi};
  for (StateKind kind : both_kinds()) {
    FamilyScenario sc = c.family_scenario(c.evolution.t_final);
    sc.kind = kind;
    const auto by_t = fisher_time_series(sc, settings);
    const std::string tname = "fisher_t_" + to_string(kind);
    write_fisher_csv(ctx.out / (tname + ".csv"), ctx.comment, by_t.rows, false);
    const auto by_n = fisher_particle_sweep(sc, c.n_list, c.n_sweep_time, settings);
    const std::string nname = "fisher_N_" + to_string(kind);
    write_fisher_csv(ctx.out / (nname + ".csv"), ctx.comment, by_n.rows, true);
    if (ctx.svg) plot_fisher(ctx, tname, by_t.rows, false), plot_fisher(ctx, nname, by_n.rows, true);
  }
}

LikelihoodFamily obtain_family(const Context& ctx, bool reuse) {
  const fs::path path = ctx.out / "family.csv";
  if (reuse && fs::exists(path)) {
    const CsvTable t = read_csv(path);
    if (!t.comments.empty() && t.comments.front() == ctx.comment) {
      log_info("reusing " + path.string());
      return read_family(path);
    }
  }
  const auto& c = ctx.cfg;
  const auto fam = build_family(c.family_scenario(c.family_time), make_p4_grid(c.p4_min, c.p4_max, c.p4_step));
  write_family(path, ctx.comment, fam);
  return fam;
}

void write_slice(const Context& ctx, const LikelihoodFamily& fam) {
  const int n = fam.particles(), j = ctx.cfg.outcome_right;
  const std::string name = "slice_" + std::to_string(n - j) + "_" + std::to_string(j);
  CsvWriter w(ctx.out / (name + ".csv"), ctx.comment, {"p4", "probability"});
  SvgSeries s{"(" + std::to_string(n - j) + "," + std::to_string(j) + ")", {}, {}, ctx.cfg.evolution.frozen_orbitals};
  for (std::size_t i = 0; i < fam.size(); ++i) {
    w.row({fam.p4[i], fam.rows[i].p[static_cast<std::size_t>(j)]});
    s.x.push_back(fam.p4[i]), s.y.push_back(fam.rows[i].p[static_cast<std::size_t>(j)]);
  }
  if (ctx.svg) write_svg_chart(ctx.out / (name + ".svg"), "likelihood slice", "p4", "P(n|p4)", {s});
}

void run_family(const Context& ctx) { write_slice(ctx, obtain_family(ctx, false)); }

int run_estimate(const Context& ctx) {
  const auto& c = ctx.cfg;
  const LikelihoodFamily fam = obtain_family(ctx, true);
  write_slice(ctx, fam);
  const int n = fam.particles(), j = c.outcome_right;
  std::ofstream summary(ctx.out / "summary.txt");
  summary << "# " << ctx.comment << '\n';
  try {
    const double x = mle_estimate(j, fam);
    summary << "MLE for outcome (" << n - j << "," << j << "): " << format_double(x) << '\n';
  } catch (const NoInformationError& e) {
    summary << "no information: " << e.what() << '\n';
    CsvWriter w(ctx.out / "estimation.csv", ctx.comment, {"no_information"});
    w.row({static_cast<long long>(1)});
    log_warning(e.what());
    return kExitNoInformation;
  }
  std::vector<EstimationReport> reports;
  for (int nu : c.nu_list) reports.push_back(estimator_statistics(fam, c.x_true, nu, c.trials, c.seed));
  write_estimation_csv(ctx.out / "estimation.csv", ctx.comment, reports);
  write_mle_table_csv(ctx.out / "mle_table.csv", ctx.comment, reports.front().table, n);
  summary << summarize(reports);
  const auto bias = bias_profile(fam);
  CsvWriter bw(ctx.out / "bias.csv", ctx.comment, {"p4", "abs_bias"});
  for (std::size_t i = 0; i < fam.size(); ++i) bw.row({fam.p4[i], bias[i]});
  if (ctx.svg) {
    SvgSeries r{"msd/crlb", {}, {}, false};
    for (const auto& rep : reports) r.x.push_back(rep.nu), r.y.push_back(rep.ratio);
    write_svg_chart(ctx.out / "msd_over_crlb.svg", "msd / crlb", "nu", "ratio", {r});
  }
  std::cout << summarize(reports);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selfmetro: self-consistent many-body metrology in a tilted double well"};
  app.require_subcommand(1, 1);
  std::string config_path, output_dir;
  bool frozen = false, svg = false, quiet = false, verbose = false;
  app.add_option("-c,--config", config_path, "scenario configuration file (key = value)");
  app.add_option("-o,--output-dir", output_dir, "override output_dir");
  app.add_flag("--frozen-orbitals", frozen, "freeze the orbitals (two-mode interferometry)");
  app.add_flag("--svg", svg, "also emit SVG plots");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");
  app.add_flag("-v,--verbose", verbose, "progress messages");
  auto* prepare = app.add_subcommand("prepare", "eigenpairs and localized orbitals");
  auto* evolve_cmd = app.add_subcommand("evolve", "trajectories and two-mode monitor");
  auto* fisher = app.add_subcommand("fisher", "QFI and CFI sweeps over t and N");
  auto* family = app.add_subcommand("family", "likelihood family over the p4 grid");
  auto* estimate = app.add_subcommand("estimate", "maximum-likelihood estimation statistics");
  auto* all = app.add_subcommand("all", "every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : kExitConfig;
  }
  set_log_level(quiet ? LogLevel::quiet : verbose ? LogLevel::info : LogLevel::warning);

  try {
    Context ctx;
    ctx.cfg = config_path.empty() ? ScenarioConfig{} : load_config(config_path);
    if (frozen) ctx.cfg.evolution.frozen_orbitals = true;
    if (!output_dir.empty()) ctx.cfg.output_dir = output_dir;
    ctx.cfg.validate();
    ctx.out = ctx.cfg.output_dir;
    ctx.svg = svg;
    ctx.comment = "config_hash=" + ctx.cfg.hash();
    fs::create_directories(ctx.out);
    std::ofstream(ctx.out / "config.effective") << ctx.cfg.canonical();

    if (prepare->parsed() || all->parsed()) run_prepare(ctx);
    if (evolve_cmd->parsed() || all->parsed()) run_evolve(ctx);
    if (fisher->parsed() || all->parsed()) run_fisher(ctx);
    if (family->parsed()) run_family(ctx);
    if (estimate->parsed() || all->parsed()) return run_estimate(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NoInformationError& e) {
    std::cerr << "no information: " << e.what() << '\n';
    return kExitNoInformation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
