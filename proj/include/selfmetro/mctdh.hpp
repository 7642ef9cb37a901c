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
 * @file mctdh.hpp
 * @brief Multiconfigurational time-dependent Hartree propagation for bosons.
 *
 * Coefficients and orbitals evolve together:
 *
 *   i dC/dt   = H(t) C
 *   i dφ_j/dt = P [ ĥ φ_j + Σ_{k,s,q,l} (ρ⁻¹)_{jk} ρ_{ksql} W_{sl} φ_q ],
 *
 * with P = 1 - Σ_j |φ_j><φ_j| and W_{sl}(x) = g φ_s^*(x) φ_l(x) for the
 * contact interaction. ρ⁻¹ is inverted on the regularized spectrum
 * λ -> λ + ε_reg exp(-λ/ε_reg). Integration is classical fixed-step RK4
 * followed by Löwdin re-orthonormalization of the orbitals.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "grid.hpp"
#include "likelihood.hpp"
#include "tmi.hpp"

namespace selfmetro {

/// Mesh, post-quench trap and contact coupling.
struct System {
  Grid grid;
  RealFunction potential;
  double g = 0.0;

  System(Grid grid_, const PotentialParams& params, double coupling)
      : grid(std::move(grid_)), potential(eval_potential(params, grid)), g(coupling) {}
};

struct ManyBodyState {
  std::shared_ptr<const FockBasis> basis;
  CoefficientVector c;
  Eigen::MatrixXcd orbitals;  ///< n_points x M, columns are orbitals
  double t = 0.0;

  int modes() const { return basis->modes(); }
  int particles() const { return basis->particles(); }
};

struct EvolutionConfig {
  double dt = 1e-4;
  double t_final = 1.0;
  int sample_stride = 100;
  double regularization = 1e-8;
  bool frozen_orbitals = false;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("evolution dt must be positive");
    if (!(regularization > 0.0)) throw ConfigError("evolution regularization must be positive");
    if (sample_stride < 1) throw ConfigError("evolution sample_stride must be >= 1");
    if (!(t_final >= 0.0)) throw ConfigError("evolution t_final must be non-negative");
  }

  int steps() const { return static_cast<int>(std::llround(t_final / dt)); }
};

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> occupations;  ///< natural occupations, descending
  double rho_tm = 0.0;
  double energy = 0.0;
  double norm_defect = 0.0;
  double orthonormality_defect = 0.0;
  double trace_defect = 0.0;  ///< |tr ρ¹ - N|
  BoseHubbardParams bose_hubbard;
  SideProbabilities sides;
};

struct TrajectoryLog {
  std::vector<TrajectorySample> samples;

  double max_norm_defect() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.norm_defect);
    return m;
  }
  double max_orthonormality_defect() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.orthonormality_defect);
    return m;
  }
  double max_trace_defect() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.trace_defect);
    return m;
  }
  double relative_energy_drift() const {
    if (samples.empty()) return 0.0;
    const double e0 = samples.front().energy;
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, std::abs(s.energy - e0));
    return m / std::max(std::abs(e0), 1e-300);
  }
  double min_rho_tm() const {
    double m = 1e300;
    for (const auto& s : samples) m = std::min(m, s.rho_tm);
    return m;
  }
};

/// Initial M-mode state: ground-doublet localized orbitals (and, for M = 4,
/// the localized second doublet) of the untilted trap, with only the first
/// two modes occupied.
inline ManyBodyState prepare_initial_state(const Grid& grid, const PotentialParams& untilted, int n_particles,
                                           int n_modes, StateKind kind) {
  const RealFunction v = eval_potential(untilted.with_tilt(0.0), grid);
  const auto pairs = lowest_eigenstates(grid, v, n_modes);
  ManyBodyState s;
  s.basis = enumerate_configs(n_particles, n_modes);
  s.orbitals.resize(grid.size(), n_modes);
  for (int d = 0; d < n_modes / 2; ++d) {
    auto [left, right] = localized_orbitals(grid, pairs[static_cast<std::size_t>(2 * d)].state,
                                            pairs[static_cast<std::size_t>(2 * d + 1)].state);
    s.orbitals.col(2 * d) = left.cast<cplx>();
    s.orbitals.col(2 * d + 1) = right.cast<cplx>();
  }
  s.c = build_state(kind, *s.basis);
  s.t = 0.0;
  return s;
}

/// Descending eigenvalues of the one-body density matrix.
inline std::vector<double> natural_occupations(const Eigen::MatrixXcd& rho1) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho1, Eigen::EigenvaluesOnly);
  std::vector<double> occ(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(occ.begin(), occ.end(), std::greater<>());
  return occ;
}

/// (ρ_1 + ρ_2) / N.
inline double two_mode_fraction(const std::vector<double>& occupations, int n_particles) {
  if (occupations.size() < 2) throw ConfigError("two_mode_fraction: need at least two occupations");
  return (occupations[0] + occupations[1]) / static_cast<double>(n_particles);
}

/// ρ⁻¹ on the regularized spectrum λ + ε exp(-λ/ε).
inline Eigen::MatrixXcd regularized_inverse(const Eigen::MatrixXcd& rho1, double eps) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho1);
  Eigen::VectorXd inv(es.eigenvalues().size());
  for (int i = 0; i < inv.size(); ++i) {
    const double lam = es.eigenvalues()[i];
    const double reg = lam + eps * std::exp(-lam / eps);
    if (!(reg > 0.0) || !std::isfinite(1.0 / reg))
      throw NumericalError("regularized one-body density is singular (eigenvalue " + std::to_string(lam) + ")");
    inv[i] = 1.0 / reg;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

/// -i H C in the basis of the state's current orbitals.
inline CoefficientVector coefficient_rhs(const System& sys, const ManyBodyState& state) {
  const auto ints = orbital_integrals(sys.grid, state.orbitals, sys.potential, sys.g);
  return cplx(0.0, -1.0) * apply_hamiltonian(ints, *state.basis, state.c);
}

namespace detail {

inline Eigen::MatrixXcd project_out(const Grid& grid, const Eigen::MatrixXcd& orbitals, const Eigen::MatrixXcd& f) {
  return f - orbitals * (grid.spacing() * (orbitals.adjoint() * f));
}

// ĥφ_j + Σ (ρ⁻¹)_{jk} ρ_{ksql} g φ_s^* φ_l φ_q, before projection.
inline Eigen::MatrixXcd mean_field_action(const System& sys, const Eigen::MatrixXcd& orbitals,
                                          const DensityData& density, double regularization) {
  const int m = static_cast<int>(orbitals.cols());
  Eigen::MatrixXcd out = apply_h(sys.grid, sys.potential, orbitals);
  if (sys.g == 0.0) return out;
  const Eigen::MatrixXcd rinv = regularized_inverse(density.rho1, regularization);
  // A[s][l](q, j) = Σ_k rinv(j,k) ρ_{ksql}
  for (int s = 0; s < m; ++s) {
    for (int l = 0; l < m; ++l) {
      Eigen::MatrixXcd a(m, m);
      for (int q = 0; q < m; ++q)
        for (int j = 0; j < m; ++j) {
          cplx acc = 0.0;
          for (int k = 0; k < m; ++k) acc += rinv(j, k) * density.two(k, s, q, l);
          a(q, j) = acc;
        }
      if (a.cwiseAbs().maxCoeff() == 0.0) continue;
      const Eigen::VectorXcd wsl = sys.g * orbitals.col(s).conjugate().cwiseProduct(orbitals.col(l));
      out += wsl.asDiagonal() * (orbitals * a);
    }
  }
  return out;
}

struct Derivative {
  CoefficientVector dc;
  Eigen::MatrixXcd dphi;
};

inline Derivative derivative(const System& sys, const FockBasis& basis, const CoefficientVector& c,
                             const Eigen::MatrixXcd& orbitals, const EvolutionConfig& cfg) {
  const auto ints = orbital_integrals(sys.grid, orbitals, sys.potential, sys.g);
  Derivative d;
  d.dc = cplx(0.0, -1.0) * apply_hamiltonian(ints, basis, c);
  if (cfg.frozen_orbitals) {
    d.dphi = Eigen::MatrixXcd::Zero(orbitals.rows(), orbitals.cols());
  } else {
    const DensityData density = densities(c, basis);
    d.dphi = cplx(0.0, -1.0) * project_out(sys.grid, orbitals, mean_field_action(sys, orbitals, density, cfg.regularization));
  }
  return d;
}

}  // namespace detail

/// dφ_j/dt for every orbital; zero when the orbitals are frozen.
inline Eigen::MatrixXcd orbital_rhs(const System& sys, const ManyBodyState& state, const DensityData& density,
                                    double regularization = 1e-8, bool frozen_orbitals = false) {
  if (frozen_orbitals) return Eigen::MatrixXcd::Zero(state.orbitals.rows(), state.orbitals.cols());
  return cplx(0.0, -1.0) *
         detail::project_out(sys.grid, state.orbitals, detail::mean_field_action(sys, state.orbitals, density, regularization));
}

inline double total_energy(const System& sys, const ManyBodyState& state) {
  const auto ints = orbital_integrals(sys.grid, state.orbitals, sys.potential, sys.g);
  return state.c.dot(apply_hamiltonian(ints, *state.basis, state.c)).real();
}

/// Löwdin orthonormalization Φ S^{-1/2}.
inline Eigen::MatrixXcd lowdin(const Grid& grid, const Eigen::MatrixXcd& orbitals) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram(grid, orbitals));
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return orbitals * (es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint());
}

struct StepDefects {
  double norm = 0.0;
  double orthonormality = 0.0;
};

inline constexpr double kMaxStepDefect = 1e-4;

/// One RK4 step of size cfg.dt followed by re-orthonormalization.
inline ManyBodyState step(const System& sys, const ManyBodyState& state, const EvolutionConfig& cfg,
                          StepDefects* defects = nullptr) {
  const auto& basis = *state.basis;
  const double h = cfg.dt;
  const auto k1 = detail::derivative(sys, basis, state.c, state.orbitals, cfg);
  const auto k2 = detail::derivative(sys, basis, state.c + 0.5 * h * k1.dc, state.orbitals + 0.5 * h * k1.dphi, cfg);
  const auto k3 = detail::derivative(sys, basis, state.c + 0.5 * h * k2.dc, state.orbitals + 0.5 * h * k2.dphi, cfg);
  const auto k4 = detail::derivative(sys, basis, state.c + h * k3.dc, state.orbitals + h * k3.dphi, cfg);

  ManyBodyState next;
  next.basis = state.basis;
  next.t = state.t + h;
  next.c = state.c + (h / 6.0) * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc);
  const double norm_defect = std::abs(next.c.squaredNorm() - 1.0);
  double ortho_defect = 0.0;
  if (cfg.frozen_orbitals) {
    next.orbitals = state.orbitals;
  } else {
    next.orbitals = state.orbitals + (h / 6.0) * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
    ortho_defect = orthonormality_defect(sys.grid, next.orbitals);
  }
  if (norm_defect > kMaxStepDefect || ortho_defect > kMaxStepDefect || !std::isfinite(norm_defect) ||
      !std::isfinite(ortho_defect))
    throw NumericalError("step size failure at t=" + std::to_string(next.t) + ": norm defect " +
                         std::to_string(norm_defect) + ", orthonormality defect " + std::to_string(ortho_defect));
  if (!cfg.frozen_orbitals) next.orbitals = lowdin(sys.grid, next.orbitals);
  next.c /= next.c.norm();
  if (defects) *defects = {norm_defect, ortho_defect};
  return next;
}

/// Monitor snapshot of a state.
inline TrajectorySample monitor(const System& sys, const ManyBodyState& state, const StepDefects& defects = {}) {
  TrajectorySample s;
  s.t = state.t;
  const auto rho1 = one_body_rdm(state.c, *state.basis);
  s.occupations = natural_occupations(rho1);
  s.trace_defect = std::abs(rho1.trace().real() - state.particles());
  s.rho_tm = two_mode_fraction(s.occupations, state.particles());
  s.energy = total_energy(sys, state);
  s.norm_defect = defects.norm;
  s.orthonormality_defect = defects.orthonormality;
  s.bose_hubbard = bose_hubbard_params(sys.grid, state.orbitals.leftCols(2), sys.potential, sys.g, state.particles());
  s.sides = side_probabilities(sys.grid, state.orbitals);
  return s;
}

using SampleObserver = std::function<void(const ManyBodyState&)>;

/// Propagates to cfg.t_final, recording monitors at step 0, every
/// sample_stride steps and at the final step. `observer` sees the state at
/// every recorded sample.
inline std::pair<ManyBodyState, TrajectoryLog> evolve(const System& sys, ManyBodyState state, const EvolutionConfig& cfg,
                                                      const SampleObserver& observer = {}) {
  cfg.validate();
  TrajectoryLog log;
  const int steps = cfg.steps();
  const double t0 = state.t;
  StepDefects worst;
  log.samples.push_back(monitor(sys, state));
  if (observer) observer(state);
  for (int n = 1; n <= steps; ++n) {
    StepDefects d;
    state = step(sys, state, cfg, &d);
    state.t = t0 + n * cfg.dt;
    worst.norm = std::max(worst.norm, d.norm);
    worst.orthonormality = std::max(worst.orthonormality, d.orthonormality);
    if (n % cfg.sample_stride == 0 || n == steps) {
      log.samples.push_back(monitor(sys, state, worst));
      if (observer) observer(state);
      worst = {};
    }
  }
  return {std::move(state), std::move(log)};
}

inline void write_trajectory_csv(const std::filesystem::path& path, const std::string& comment,
                                 const TrajectoryLog& log) {
  CsvWriter w(path, comment,
              {"t", "rho1", "rho2", "rho3", "rho4", "rho_tm", "energy", "norm_defect", "tau", "eps", "U", "PL1", "PR1",
               "PL2", "PR2"});
  for (const auto& s : log.samples) {
    auto occ = [&](std::size_t i) { return i < s.occupations.size() ? s.occupations[i] : 0.0; };
    w.row({s.t, occ(0), occ(1), occ(2), occ(3), s.rho_tm, s.energy, s.norm_defect, s.bose_hubbard.tunneling_magnitude,
           s.bose_hubbard.eps, s.bose_hubbard.U, s.sides.left[0], s.sides.right[0], s.sides.left[1], s.sides.right[1]});
  }
}

}  // namespace selfmetro
