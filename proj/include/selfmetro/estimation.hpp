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
 * @file estimation.hpp
 * @brief Likelihood families over a tilt grid, maximum-likelihood estimation
 * and estimator statistics against the Cramér-Rao bound.
 *
 * The rescaled estimator deviation is δX = X_est / |∂<X_est>/∂X| - X and
 * msd = <δX²>; the bound is 1 / (ν F).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "likelihood.hpp"
#include "log.hpp"
#include "mctdh.hpp"
#include "metrology.hpp"
#include "parallel.hpp"
#include "tmi.hpp"

namespace selfmetro {

/// Everything needed to evolve one member of a likelihood family. The trap's
/// p4 is replaced by each grid value; evolution.t_final is the measurement time.
struct FamilyScenario {
  Grid grid{8.0, 257};
  PotentialParams trap;
  double g = 0.01;
  int particles = 10;
  int modes = 2;
  StateKind kind = StateKind::coherent;
  EvolutionConfig evolution;
};

struct LikelihoodFamily {
  std::vector<double> p4;
  std::vector<OutcomeDistribution> rows;
  std::map<std::string, std::string> metadata;
  std::string provenance;
  double min_rho_tm = 1.0;
  /// Worst conservation monitors over the member trajectories (not persisted).
  double max_norm_defect = 0.0;
  double max_energy_drift = 0.0;
  double max_trace_defect = 0.0;

  int particles() const { return rows.empty() ? 0 : rows.front().particles(); }
  std::size_t size() const { return p4.size(); }
  double step() const { return p4.size() > 1 ? p4[1] - p4[0] : 0.0; }
  /// Index of a grid value, matched to within 1e-6 of the grid step.
  std::optional<std::size_t> index_of(double x) const {
    const double tol = 1e-6 * std::max(step(), 1e-12);
    for (std::size_t i = 0; i < p4.size(); ++i)
      if (std::abs(p4[i] - x) <= tol) return i;
    return std::nullopt;
  }
  void validate() const {
    if (p4.size() != rows.size()) throw ConfigError("LikelihoodFamily: grid and rows differ in length");
    for (std::size_t i = 1; i < p4.size(); ++i)
      if (!(p4[i] > p4[i - 1])) throw ConfigError("LikelihoodFamily: grid must be strictly increasing");
    for (const auto& r : rows) {
      if (r.particles() != particles()) throw ConfigError("LikelihoodFamily: rows over different particle numbers");
      if (std::abs(r.total() - 1.0) > 1e-8) throw NumericalError("LikelihoodFamily: row not normalized");
    }
  }
};

/// Uniform grid min, min + step, ..., max (max included when step divides the span).
inline std::vector<double> make_p4_grid(double min, double max, double step) {
  if (!(step > 0.0) || !(max >= min) || !std::isfinite(min) || !std::isfinite(max))
    throw ConfigError("p4 grid: need finite min <= max and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = min + static_cast<double>(i) * step;
  return out;
}

struct MemberResult {
  OutcomeDistribution dist;
  ManyBodyState final_state;
  TrajectoryLog log;
};

/// One family member: evolve the initial state in the trap tilted by p4 and
/// record the counting distribution at t_final.
inline MemberResult evolve_member(const FamilyScenario& sc, double p4, PermanentCache* cache = nullptr) {
  const ManyBodyState initial = prepare_initial_state(sc.grid, sc.trap, sc.particles, sc.modes, sc.kind);
  const System sys(sc.grid, sc.trap.with_tilt(p4), sc.g);
  auto [final_state, log] = evolve(sys, initial, sc.evolution);
  MemberResult r;
  const CoefficientVector c2 = two_mode_projection(final_state.c, *final_state.basis);
  const SideProbabilities sp = side_probabilities(sc.grid, final_state.orbitals.leftCols(2));
  r.dist = outcome_distribution(c2, sp, sc.particles, cache);
  r.final_state = std::move(final_state);
  r.log = std::move(log);
  return r;
}

inline LikelihoodFamily build_family(const FamilyScenario& sc, const std::vector<double>& p4_grid,
                                     int threads = thread_count()) {
  if (p4_grid.empty()) throw ConfigError("build_family: empty p4 grid");
  sc.evolution.validate();
  LikelihoodFamily fam;
  fam.p4 = p4_grid;
  fam.rows.resize(p4_grid.size());
  std::vector<double> min_tm(p4_grid.size(), 1.0), norm(p4_grid.size()), drift(p4_grid.size()),
      trace(p4_grid.size());
  PermanentCache cache;
  parallel_for(static_cast<int>(p4_grid.size()), [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    auto r = evolve_member(sc, p4_grid[k], &cache);
    fam.rows[k] = std::move(r.dist);
    min_tm[k] = r.log.min_rho_tm();
    norm[k] = r.log.max_norm_defect();
    drift[k] = r.log.relative_energy_drift();
    trace[k] = r.log.max_trace_defect();
  }, threads);
  fam.min_rho_tm = *std::min_element(min_tm.begin(), min_tm.end());
  fam.max_norm_defect = *std::max_element(norm.begin(), norm.end());
  fam.max_energy_drift = *std::max_element(drift.begin(), drift.end());
  fam.max_trace_defect = *std::max_element(trace.begin(), trace.end());
  if (fam.min_rho_tm < 0.98)
    log_warning("build_family: two-mode fraction drops to " + format_double(fam.min_rho_tm) + " on the grid");
  fam.metadata = {{"t", format_double(sc.evolution.t_final)},
                  {"N", std::to_string(sc.particles)},
                  {"M", std::to_string(sc.modes)},
                  {"gN", format_double(sc.g * sc.particles)},
                  {"state_kind", to_string(sc.kind)},
                  {"dt", format_double(sc.evolution.dt)},
                  {"regularization", format_double(sc.evolution.regularization)},
                  {"frozen_orbitals", sc.evolution.frozen_orbitals ? "true" : "false"},
                  {"grid_half_width", format_double(sc.grid.half_width())},
                  {"grid_n_points", std::to_string(sc.grid.size())},
                  {"p1", format_double(sc.trap.p1)},
                  {"p2", format_double(sc.trap.p2)},
                  {"p3", format_double(sc.trap.p3)},
                  {"min_rho_tm", format_double(fam.min_rho_tm)}};
  std::string key;
  for (const auto& [k, v] : fam.metadata) key += k + "=" + v + ";";
  fam.provenance = fnv1a_hex(key);
  fam.validate();
  return fam;
}

/// Family table CSV (p4, P_0..P_N) and a key=value sidecar at `<path>.meta`.
inline void write_family(const std::filesystem::path& path, const std::string& comment, const LikelihoodFamily& fam) {
  std::vector<std::string> cols{"p4"};
  for (int j = 0; j <= fam.particles(); ++j) cols.push_back("P_" + std::to_string(j));
  CsvWriter w(path, comment, cols);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    std::vector<CsvWriter::Cell> cells{fam.p4[i]};
    for (double p : fam.rows[i].p) cells.emplace_back(p);
    w.row(cells);
  }
  std::ofstream meta(path.string() + ".meta");
  if (!meta) throw ConfigError("cannot write family metadata for " + path.string());
  for (const auto& [k, v] : fam.metadata) meta << k << '=' << v << '\n';
  meta << "provenance=" << fam.provenance << '\n';
}

inline LikelihoodFamily read_family(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  LikelihoodFamily fam;
  const int p4_col = t.column("p4");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    fam.p4.push_back(t.number(r, p4_col));
    OutcomeDistribution d;
    for (int j = 0;; ++j) {
      const std::string name = "P_" + std::to_string(j);
      if (std::find(t.columns.begin(), t.columns.end(), name) == t.columns.end()) break;
      d.p.push_back(t.number(r, t.column(name)));
    }
    fam.rows.push_back(std::move(d));
  }
  std::ifstream meta(path.string() + ".meta");
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "provenance") fam.provenance = v;
    else fam.metadata[k] = v;
  }
  if (auto it = fam.metadata.find("min_rho_tm"); it != fam.metadata.end()) fam.min_rho_tm = std::stod(it->second);
  fam.validate();
  return fam;
}

/// Outcome histogram: counts[j] shots with (n_L, n_R) = (N-j, j).
using OutcomeCounts = std::vector<int>;

/// argmax of Π_shots P(j|X) over the grid, refined by a parabola through the
/// log-likelihood at the maximum and its two neighbours.
inline double mle_estimate(const OutcomeCounts& counts, const LikelihoodFamily& fam) {
  const int n = fam.particles();
  if (static_cast<int>(counts.size()) != n + 1) throw ConfigError("mle_estimate: outcome histogram has wrong size");
  if (fam.size() == 0) throw ConfigError("mle_estimate: empty family");
  bool any = false, informative = false;
  for (int j = 0; j <= n; ++j) {
    if (counts[static_cast<std::size_t>(j)] < 0) throw ConfigError("mle_estimate: negative count");
    if (counts[static_cast<std::size_t>(j)] == 0) continue;
    any = true;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : fam.rows) {
      lo = std::min(lo, row.p[static_cast<std::size_t>(j)]);
      hi = std::max(hi, row.p[static_cast<std::size_t>(j)]);
    }
    if (hi - lo >= 1e-12) informative = true;
  }
  if (!any) throw ConfigError("mle_estimate: no shots");
  if (!informative) throw NoInformationError("mle_estimate: likelihood is flat in p4, no information");

  std::vector<double> ll(fam.size(), 0.0);
  for (std::size_t i = 0; i < fam.size(); ++i)
    for (int j = 0; j <= n; ++j) {
      const int c = counts[static_cast<std::size_t>(j)];
      if (c == 0) continue;
      const double p = fam.rows[i].p[static_cast<std::size_t>(j)];
      ll[i] += p > 0.0 ? c * std::log(p) : -std::numeric_limits<double>::infinity();
    }
  const auto best = static_cast<std::size_t>(std::max_element(ll.begin(), ll.end()) - ll.begin());
  if (!std::isfinite(ll[best])) throw NoInformationError("mle_estimate: outcome impossible on the whole grid");
  for (std::size_t i = best + 1; i < ll.size(); ++i)
    if (ll[i] == ll[best]) {
      log_warning("mle_estimate: degenerate maximum, taking the smaller p4");
      break;
    }
  if (best == 0 || best + 1 == fam.size()) return fam.p4[best];
  const double y0 = ll[best - 1], y1 = ll[best], y2 = ll[best + 1];
  const double curv = y0 - 2.0 * y1 + y2;
  if (!std::isfinite(curv) || curv >= 0.0) return fam.p4[best];
  const double shift = std::clamp(0.5 * (y0 - y2) / curv, -0.5, 0.5);
  return fam.p4[best] + shift * (fam.p4[best + 1] - fam.p4[best]);
}

/// Single-shot estimate for outcome (N-j, j).
inline double mle_estimate(int j, const LikelihoodFamily& fam) {
  if (j < 0 || j > fam.particles()) throw ConfigError("mle_estimate: outcome out of range");
  OutcomeCounts counts(static_cast<std::size_t>(fam.particles() + 1), 0);
  counts[static_cast<std::size_t>(j)] = 1;
  return mle_estimate(counts, fam);
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Portable uniform in [0, 1) from the top 53 bits of mt19937_64.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// ν i.i.d. draws from `dist` by inverse-CDF sampling.
inline OutcomeCounts sample_outcomes(const OutcomeDistribution& dist, int nu, std::uint64_t seed) {
  if (nu < 1) throw ConfigError("sample_outcomes: nu must be at least 1");
  std::vector<double> cdf(dist.p.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < dist.p.size(); ++j) cdf[j] = acc += std::max(dist.p[j], 0.0);
  std::mt19937_64 rng(seed);
  OutcomeCounts counts(dist.p.size(), 0);
  for (int s = 0; s < nu; ++s) {
    const double u = uniform01(rng) * acc;
    auto j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (j >= cdf.size()) j = cdf.size() - 1;
    while (dist.p[j] <= 0.0 && j > 0) --j;
    ++counts[j];
  }
  return counts;
}

/// 1/(νF); +infinity when F = 0.
inline double cramer_rao_bound(double fisher, int nu) {
  if (nu < 1) throw ConfigError("cramer_rao_bound: nu must be at least 1");
  if (!(fisher >= 0.0)) throw ConfigError("cramer_rao_bound: Fisher information must be nonnegative");
  if (fisher == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (nu * fisher);
}

struct MleEntry {
  int j = 0;
  double probability = 0.0;
  std::optional<double> estimate;  ///< empty when the outcome carries no information
};

struct EstimationReport {
  double x_true = 0.0;
  int nu = 1;
  int trials = 0;  ///< 0 for the exact expectation
  std::uint64_t seed = 0;
  double moe = 0.0;
  double moe_stderr = 0.0;
  double domoe = 0.0;
  double msd = 0.0;
  double msd_stderr = 0.0;
  double fisher = 0.0;
  double crlb = 0.0;
  double ratio = 0.0;  ///< msd / crlb = msd ν F
  double ratio_stderr = 0.0;
  std::vector<MleEntry> table;
};

/// Single-shot MLE for every outcome at grid row `row`.
inline std::vector<MleEntry> mle_table(const LikelihoodFamily& fam, std::size_t row) {
  std::vector<MleEntry> out;
  for (int j = 0; j <= fam.particles(); ++j) {
    MleEntry e;
    e.j = j;
    e.probability = fam.rows[row].p[static_cast<std::size_t>(j)];
    try {
      e.estimate = mle_estimate(j, fam);
    } catch (const NoInformationError&) {
    }
    out.push_back(e);
  }
  return out;
}

/// CFI at grid row i by central differences over neighbouring rows (one-sided at the edges).
inline double family_fisher(const LikelihoodFamily& fam, std::size_t i) {
  if (fam.size() < 2) throw ConfigError("family_fisher: need at least two grid points");
  const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == fam.size() ? i : i + 1;
  const double span = fam.p4[hi] - fam.p4[lo];
  const FisherReport r = cfi(fam.rows[hi], fam.rows[lo], fam.rows[i], 0.5 * span);
  return r.value;
}

namespace detail {

struct EstimateSamples {
  std::vector<double> values;  ///< per trial (or per outcome when exact)
  std::vector<double> weights;
};

class EstimateMemo {
 public:
  explicit EstimateMemo(const LikelihoodFamily& fam) : fam_(fam) {}
  double get(const OutcomeCounts& counts) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(counts); it != memo_.end()) return it->second;
    }
    const double v = mle_estimate(counts, fam_);
    std::lock_guard lock(mutex_);
    memo_.emplace(counts, v);
    return v;
  }

 private:
  const LikelihoodFamily& fam_;
  std::mutex mutex_;
  std::map<OutcomeCounts, double> memo_;
};

// Estimates at grid row `row`. ν = 1 enumerates outcomes with their exact
// probabilities; otherwise trial k uses seed derive_seed(seed, k), so rows
// sharing a seed see common random numbers.
inline EstimateSamples estimates_at(const LikelihoodFamily& fam, std::size_t row, int nu, int trials,
                                    std::uint64_t seed, EstimateMemo& memo, int threads) {
  EstimateSamples s;
  if (nu == 1) {
    for (int j = 0; j <= fam.particles(); ++j) {
      const double p = fam.rows[row].p[static_cast<std::size_t>(j)];
      if (p <= 0.0) continue;
      OutcomeCounts c(static_cast<std::size_t>(fam.particles() + 1), 0);
      c[static_cast<std::size_t>(j)] = 1;
      s.values.push_back(memo.get(c));
      s.weights.push_back(p);
    }
    return s;
  }
  s.values.resize(static_cast<std::size_t>(trials));
  s.weights.assign(static_cast<std::size_t>(trials), 1.0 / trials);
  parallel_for(trials, [&](int k) {
    const OutcomeCounts c = sample_outcomes(fam.rows[row], nu, derive_seed(seed, static_cast<std::uint64_t>(k)));
    s.values[static_cast<std::size_t>(k)] = memo.get(c);
  }, threads);
  return s;
}

inline double weighted_mean(const EstimateSamples& s) {
  double m = 0.0, w = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    m += s.weights[i] * s.values[i];
    w += s.weights[i];
  }
  return m / w;
}

}  // namespace detail

/// moe, domoe, msd and the Cramér-Rao comparison at grid value x_true.
/// `fisher` < 0 takes the CFI from the family itself.
inline EstimationReport estimator_statistics(const LikelihoodFamily& fam, double x_true, int nu, int trials,
                                             std::uint64_t seed, double fisher = -1.0,
                                             int threads = thread_count()) {
  if (nu < 1) throw ConfigError("estimator_statistics: nu must be at least 1");
  if (nu > 1 && trials < 2) throw ConfigError("estimator_statistics: need at least two trials for nu > 1");
  const auto idx = fam.index_of(x_true);
  if (!idx) throw ConfigError("estimator_statistics: X_true " + format_double(x_true) + " is not on the family grid");
  if (fam.size() < 2) throw ConfigError("estimator_statistics: grid too short for the derivative of moe");
  const std::size_t i = *idx;
  const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == fam.size() ? i : i + 1;

  detail::EstimateMemo memo(fam);
  const auto center = detail::estimates_at(fam, i, nu, trials, seed, memo, threads);
  const auto below = detail::estimates_at(fam, lo, nu, trials, seed, memo, threads);
  const auto above = detail::estimates_at(fam, hi, nu, trials, seed, memo, threads);

  EstimationReport r;
  r.x_true = fam.p4[i];
  r.nu = nu;
  r.trials = nu == 1 ? 0 : trials;
  r.seed = seed;
  r.moe = detail::weighted_mean(center);
  r.domoe = std::abs(detail::weighted_mean(above) - detail::weighted_mean(below)) / (fam.p4[hi] - fam.p4[lo]);
  if (!(r.domoe > 0.0)) throw NumericalError("estimator_statistics: mean estimate does not vary with X");

  double msd = 0.0, msd2 = 0.0, var_est = 0.0;
  for (std::size_t k = 0; k < center.values.size(); ++k) {
    const double dev = center.values[k] / r.domoe - r.x_true;
    msd += center.weights[k] * dev * dev;
    msd2 += center.weights[k] * dev * dev * dev * dev;
    var_est += center.weights[k] * (center.values[k] - r.moe) * (center.values[k] - r.moe);
  }
  r.msd = msd;
  if (nu > 1) {
    r.moe_stderr = std::sqrt(var_est / (trials - 1));
    r.msd_stderr = std::sqrt(std::max(msd2 - msd * msd, 0.0) / (trials - 1));
  }
  r.fisher = fisher >= 0.0 ? fisher : family_fisher(fam, i);
  r.crlb = cramer_rao_bound(r.fisher, nu);
  r.ratio = r.msd / r.crlb;
  r.ratio_stderr = r.msd_stderr / r.crlb;
  r.table = mle_table(fam, i);
  return r;
}

/// |moe(X) - X| over the grid for ν = 1, logged for the bias trend.
inline std::vector<double> bias_profile(const LikelihoodFamily& fam) {
  std::vector<double> bias;
  detail::EstimateMemo memo(fam);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto s = detail::estimates_at(fam, i, 1, 0, 0, memo, 1);
    bias.push_back(std::abs(detail::weighted_mean(s) - fam.p4[i]));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < bias.size(); ++i) monotone = monotone && bias[i] >= bias[i - 1];
  log_info(std::string("bias profile is ") + (monotone ? "" : "not ") + "monotone in p4");
  return bias;
}

inline void write_estimation_csv(const std::filesystem::path& path, const std::string& comment,
                                 const std::vector<EstimationReport>& reports) {
  CsvWriter w(path, comment,
              {"nu", "trials", "seed", "x_true", "moe", "moe_stderr", "domoe", "msd", "msd_stderr", "fisher", "crlb",
               "msd_over_crlb", "msd_over_crlb_stderr"});
  for (const auto& r : reports)
    w.row({static_cast<long long>(r.nu), static_cast<long long>(r.trials), std::to_string(r.seed), r.x_true, r.moe,
           r.moe_stderr, r.domoe, r.msd, r.msd_stderr, r.fisher, r.crlb, r.ratio, r.ratio_stderr});
}

inline void write_mle_table_csv(const std::filesystem::path& path, const std::string& comment,
                                const std::vector<MleEntry>& table, int n_particles) {
  CsvWriter w(path, comment, {"nL", "nR", "probability", "x_est", "informative"});
  for (const auto& e : table)
    w.row({static_cast<long long>(n_particles - e.j), static_cast<long long>(e.j), e.probability,
           e.estimate ? *e.estimate : std::numeric_limits<double>::quiet_NaN(),
           static_cast<long long>(e.estimate ? 1 : 0)});
}

inline std::string summarize(const std::vector<EstimationReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    out << "nu=" << r.nu << " X=" << format_double(r.x_true) << " moe=" << r.moe;
    if (r.trials) out << " (+/- " << r.moe_stderr << ", " << r.trials << " trials, seed " << r.seed << ")";
    out << " domoe=" << r.domoe << " msd=" << r.msd << " crlb=" << r.crlb << " msd/crlb=" << r.ratio << '\n';
  }
  return out.str();
}

}  // namespace selfmetro
