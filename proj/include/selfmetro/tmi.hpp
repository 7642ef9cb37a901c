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
 * @file tmi.hpp
 * @brief Fixed-orbital two-mode interferometry: the two-site Bose-Hubbard
 * reduction H = -τ J_x + ε J_z + U J_z², its phase-only evolution and the
 * closed-form Fisher information of the two probe states.
 *
 * J_z |N-k,k> = (N-2k)/2 |N-k,k>, J_x = (b_L^† b_R + b_R^† b_L)/2.
 */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "errors.hpp"
#include "fock.hpp"
#include "grid.hpp"

namespace selfmetro {

enum class StateKind { cat, coherent };

inline std::string to_string(StateKind k) { return k == StateKind::cat ? "cat" : "coherent"; }

inline StateKind parse_state_kind(const std::string& s) {
  if (s == "cat" || s == "noon") return StateKind::cat;
  if (s == "coherent" || s == "coh") return StateKind::coherent;
  throw ConfigError("unknown state kind '" + s + "' (expected cat or coherent)");
}

inline CoefficientVector build_state(StateKind kind, const FockBasis& basis) {
  return kind == StateKind::cat ? build_noon(basis) : build_spin_coherent(basis);
}

struct BoseHubbardParams {
  double tau = 0.0;
  double eps = 0.0;
  double U = 0.0;
  /// 2|h_LR|, meaningful for complex (time-evolved) orbitals.
  double tunneling_magnitude = 0.0;
  /// Largest interaction integral outside the J_z, J_z² structure
  /// (pair and density-assisted tunneling), dropped by the reduction.
  double neglected = 0.0;
};

/// Reduction of the M=2 Fock-space Hamiltonian built on (φ_L, φ_R).
/// H_fock = H_BH + const on the two-mode basis, up to `neglected`.
inline BoseHubbardParams bose_hubbard_params(const Grid& grid, const Eigen::MatrixXcd& pair,
                                             const RealFunction& potential, double g, int n_particles) {
  if (pair.cols() != 2) throw ConfigError("bose_hubbard_params: need exactly two orbitals");
  const double defect = orthonormality_defect(grid, pair);
  if (defect > 1e-6)
    throw NumericalError("bose_hubbard_params: orbitals not orthonormal (Gram defect " + std::to_string(defect) + ")");
  const auto ints = orbital_integrals(grid, pair, potential, g);
  const double n = static_cast<double>(n_particles);
  const double u_left = ints.W(0, 0, 0, 0).real();
  const double u_right = ints.W(1, 1, 1, 1).real();
  const double w_cross = ints.W(0, 1, 0, 1).real();

  BoseHubbardParams bh;
  bh.tau = -2.0 * ints.h(0, 1).real();
  bh.tunneling_magnitude = 2.0 * std::abs(ints.h(0, 1));
  bh.eps = (ints.h(0, 0) - ints.h(1, 1)).real() + 0.5 * (u_left - u_right) * (n - 1.0);
  bh.U = 0.5 * (u_left + u_right) - 2.0 * w_cross;
  bh.neglected = std::max({std::abs(ints.W(0, 0, 1, 1)), std::abs(ints.W(0, 0, 0, 1)), std::abs(ints.W(1, 1, 1, 0))});
  return bh;
}

template <class Derived>
BoseHubbardParams bose_hubbard_params(const Grid& grid, const Eigen::MatrixBase<Derived>& phi_left,
                                      const Eigen::MatrixBase<Derived>& phi_right, const RealFunction& potential,
                                      double g, int n_particles) {
  Eigen::MatrixXcd pair(phi_left.rows(), 2);
  pair.col(0) = phi_left.template cast<cplx>();
  pair.col(1) = phi_right.template cast<cplx>();
  return bose_hubbard_params(grid, pair, potential, g, n_particles);
}

/// -τ J_x + ε J_z + U J_z² on the basis |N-k,k>, k = 0..N.
inline Eigen::MatrixXd bose_hubbard_matrix(const BoseHubbardParams& bh, int n_particles) {
  const int d = n_particles + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double jz = 0.5 * (n_particles - 2 * k);
    h(k, k) = bh.eps * jz + bh.U * jz * jz;
    if (k > 0) {
      // <N-k+1,k-1| J_x |N-k,k> = ½ sqrt((N-k+1) k)
      const double jx = 0.5 * std::sqrt(static_cast<double>((n_particles - k + 1) * k));
      h(k - 1, k) = -bh.tau * jx;
      h(k, k - 1) = -bh.tau * jx;
    }
  }
  return h;
}

/// Phase-only evolution exp(-i(ε J_z + U J_z²) t) of a two-mode coefficient vector.
inline CoefficientVector tmi_evolve(const CoefficientVector& c0, double eps, double U, double t) {
  const int n = static_cast<int>(c0.size()) - 1;
  CoefficientVector c(c0.size());
  for (int k = 0; k <= n; ++k) {
    const double jz = 0.5 * (n - 2 * k);
    c[k] = std::exp(cplx(0.0, -(eps * jz + U * jz * jz) * t)) * c0[k];
  }
  return c;
}

/// Var(J_z), J_z = (n_L - n_R)/2, for a two-mode coefficient vector.
inline double jz_variance(const CoefficientVector& c) {
  const int n = static_cast<int>(c.size()) - 1;
  double m1 = 0.0, m2 = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double jz = 0.5 * (n - 2 * k);
    const double p = std::norm(c[k]);
    m1 += p * jz;
    m2 += p * jz * jz;
  }
  return m2 - m1 * m1;
}

/// QFI with respect to ε of the phase-only evolution: N² t² (cat), N t² (coherent).
inline double tmi_qfi_analytic(StateKind kind, int n_particles, double t) {
  const double n = static_cast<double>(n_particles);
  switch (kind) {
    case StateKind::cat: return n * n * t * t;
    case StateKind::coherent: return n * t * t;
  }
  throw ConfigError("tmi_qfi_analytic: unknown state kind");
}

inline double chain_rule_qfi(double qfi_eps, double deps_dp4) { return qfi_eps * deps_dp4 * deps_dp4; }

/// ∂ε/∂p4 of the fixed-orbital reduction: the difference of orbital dipole moments.
template <class A, class B>
double dipole_difference(const Grid& grid, const Eigen::MatrixBase<A>& phi1, const Eigen::MatrixBase<B>& phi2) {
  return dipole_moment(grid, phi1) - dipole_moment(grid, phi2);
}

}  // namespace selfmetro
