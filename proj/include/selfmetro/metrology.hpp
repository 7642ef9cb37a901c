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
 * @file metrology.hpp
 * @brief Quantum Fisher information of an MCTDH state and classical Fisher
 * information of the left/right counting measurement.
 *
 * Parameter derivatives are central differences of two trajectories evolved
 * from the same initial state with the tilt shifted by ±δ. With
 * D_kq = <φ_k|∂φ_q> and ζ_qk = sqrt(n_k (n_q+1)) (n_k when q = k) the pure
 * state QFI is 4 Σ_i T_i over the seven groups
 *
 *   T1 =  Σ_n |∂C_n|²
 *   T2 = -|Σ_n C_n^* ∂C_n|²
 *   T3 =  Σ_n Σ_kq (∂C_n^* C_{n_k^q} - C_n^* ∂C_{n_k^q}) D_kq ζ_qk
 *   T4 = -Σ_n (∂C_n^* C_n - C_n^* ∂C_n) Σ_kq D_kq ρ_kq
 *   T5 = -Σ_ksq D_ks D_sq ρ_kq
 *   T6 =  (Σ_kq D_kq ρ_kq)²
 *   T7 = -Σ_ksql D_kq D_sl ρ_ksql.
 *
 * These groups retain only the part of ∂φ inside the orbital span. The
 * remainder contributes Σ_kq <P∂φ_k|P∂φ_q> ρ_kq, reported separately as
 * `out_of_span`; `value_with_complement` includes it.
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fock.hpp"
#include "likelihood.hpp"
#include "log.hpp"
#include "mctdh.hpp"
#include "tmi.hpp"

namespace selfmetro {

enum class FisherMethod { sc, tmi, analytic };

inline std::string to_string(FisherMethod m) {
  switch (m) {
    case FisherMethod::sc: return "SC";
    case FisherMethod::tmi: return "TMI";
    case FisherMethod::analytic: return "analytic";
  }
  return "?";
}

struct FisherReport {
  double value = 0.0;
  double fd_step = 0.0;
  FisherMethod method = FisherMethod::sc;
  double t = 0.0;
  int particles = 0;
  /// QFI only: the seven term groups (before the factor 4), the out-of-span
  /// contribution and the value including it.
  std::array<double, 7> terms{};
  double out_of_span = 0.0;
  double value_with_complement = 0.0;
  /// CFI only: probability mass of outcomes skipped for P < 1e-14.
  double excluded_mass = 0.0;
};

struct DerivativeData {
  CoefficientVector dc;
  Eigen::MatrixXcd dphi;
  Eigen::MatrixXcd d_orb;  ///< D_kq = <φ_k|∂φ_q>
  double antihermiticity_defect = 0.0;
};

namespace detail {
inline double clip_fisher(double v, const char* what) {
  if (v < 0.0) {
    if (v < -1e-8) log_warning(std::string(what) + ": negative value " + std::to_string(v) + " clipped to 0");
    return 0.0;
  }
  return v;
}
}  // namespace detail

/// Central differences (plus - minus) / 2δ, D_kq taken against `center`'s orbitals.
inline DerivativeData parameter_derivatives(const Grid& grid, const ManyBodyState& center, const ManyBodyState& plus,
                                            const ManyBodyState& minus, double delta) {
  if (!(delta > 0.0)) throw ConfigError("parameter_derivatives: finite-difference step must be positive");
  if (plus.basis->size() != minus.basis->size() || plus.basis->modes() != minus.basis->modes() ||
      center.basis->size() != plus.basis->size())
    throw ConfigError("parameter_derivatives: mismatched Fock bases");
  if (std::abs(plus.t - minus.t) > 1e-9 || std::abs(center.t - plus.t) > 1e-9)
    throw ConfigError("parameter_derivatives: states at different times");
  DerivativeData d;
  d.dc = (plus.c - minus.c) / (2.0 * delta);
  d.dphi = (plus.orbitals - minus.orbitals) / (2.0 * delta);
  d.d_orb = grid.spacing() * (center.orbitals.adjoint() * d.dphi);
  d.antihermiticity_defect = (d.d_orb + d.d_orb.adjoint()).cwiseAbs().maxCoeff();
  return d;
}

inline FisherReport qfi_pure_state(const Grid& grid, const ManyBodyState& state, const DerivativeData& deriv,
                                   const DensityData& density) {
  const auto& basis = *state.basis;
  const int m = basis.modes();
  const auto& c = state.c;
  const auto& dc = deriv.dc;
  const auto& d = deriv.d_orb;

  const cplx overlap = c.dot(dc);  // Σ C^* ∂C
  cplx trace_d_rho = 0.0;          // Σ D_kq ρ_kq
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < m; ++q) trace_d_rho += d(k, q) * density.rho1(k, q);

  std::array<cplx, 7> t{};
  t[0] = dc.squaredNorm();
  t[1] = -std::norm(overlap);
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < m; ++q) {
      cplx acc = 0.0;
      for (const auto& e : basis.one_body_table(k, q))
        acc += (std::conj(dc[e.bra]) * c[e.ket] - std::conj(c[e.bra]) * dc[e.ket]) * e.factor;
      t[2] += acc * d(k, q);
    }
  t[3] = -(dc.dot(c) - c.dot(dc)) * trace_d_rho;
  for (int k = 0; k < m; ++k)
    for (int s = 0; s < m; ++s)
      for (int q = 0; q < m; ++q) t[4] -= d(k, s) * d(s, q) * density.rho1(k, q);
  t[5] = trace_d_rho * trace_d_rho;
  for (int k = 0; k < m; ++k)
    for (int s = 0; s < m; ++s)
      for (int q = 0; q < m; ++q)
        for (int l = 0; l < m; ++l) t[6] -= d(k, q) * d(s, l) * density.two(k, s, q, l);

  const Eigen::MatrixXcd perp = deriv.dphi - state.orbitals * deriv.d_orb;
  const Eigen::MatrixXcd perp_gram = grid.spacing() * (perp.adjoint() * perp);
  cplx out_of_span = 0.0;
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < m; ++q) out_of_span += perp_gram(k, q) * density.rho1(k, q);

  FisherReport r;
  cplx sum = 0.0;
  for (int i = 0; i < 7; ++i) {
    r.terms[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i)].real();
    sum += t[static_cast<std::size_t>(i)];
  }
  r.value = detail::clip_fisher(4.0 * sum.real(), "qfi_pure_state");
  r.out_of_span = out_of_span.real();
  r.value_with_complement = detail::clip_fisher(4.0 * (sum.real() + out_of_span.real()), "qfi_pure_state");
  r.t = state.t;
  r.particles = state.particles();
  r.method = FisherMethod::sc;
  return r;
}

/// F = Σ_j P_j (∂ log P_j)², derivative by central differences.
inline FisherReport cfi(const OutcomeDistribution& plus, const OutcomeDistribution& minus,
                        const OutcomeDistribution& center, double delta) {
  if (!(delta > 0.0)) throw ConfigError("cfi: finite-difference step must be positive");
  if (plus.p.size() != center.p.size() || minus.p.size() != center.p.size())
    throw ConfigError("cfi: distributions over different outcome sets");
  FisherReport r;
  r.fd_step = delta;
  double f = 0.0;
  for (std::size_t j = 0; j < center.p.size(); ++j) {
    const double p = center.p[j];
    if (p <= 1e-14) {
      r.excluded_mass += std::max(p, 0.0);
      continue;
    }
    const double dlog = (plus.p[j] - minus.p[j]) / (2.0 * delta * p);
    f += p * dlog * dlog;
  }
  r.value = f;
  r.particles = center.particles();
  return r;
}

/// CFI <= QFI with 1e-3 relative slack for finite-difference noise.
inline bool cfi_bounded_by_qfi(const FisherReport& qfi, const FisherReport& cfi_report) {
  return cfi_report.value <= qfi.value * (1.0 + 1e-3);
}

}  // namespace selfmetro
