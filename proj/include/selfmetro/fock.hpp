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
 * @file fock.hpp
 * @brief Bosonic configuration space of N particles in M modes.
 *
 * Reduced density matrices use the conventions
 *   rho1(k,q)     = <b_k^† b_q>
 *   rho2(k,s,q,l) = <b_k^† b_s^† b_q b_l>
 * and n_k^q denotes the configuration with one particle moved from mode k to
 * mode q. Matrix elements are tabulated once per basis from the closed-form
 * element classes; the tables drive the density matrices and the action of
 * the many-body Hamiltonian.
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace selfmetro {

using CoefficientVector = Eigen::VectorXcd;
using Occupation = std::vector<int>;

/// One tabulated matrix element <bra| operator |ket> = factor.
struct TableEntry {
  int bra;
  int ket;
  double factor;
};

class FockBasis {
 public:
  FockBasis(int n_particles, int n_modes) : n_(n_particles), m_(n_modes) {
    if (n_particles < 1) throw ConfigError("FockBasis: need at least one particle");
    if (n_modes != 2 && n_modes != 4) throw ConfigError("FockBasis: supported mode counts are 2 and 4");
    Occupation occ(static_cast<std::size_t>(m_), 0);
    enumerate(0, n_, occ);
    for (std::size_t i = 0; i < configs_.size(); ++i) index_.emplace(configs_[i], static_cast<int>(i));
    build_tables();
  }

  int particles() const { return n_; }
  int modes() const { return m_; }
  int size() const { return static_cast<int>(configs_.size()); }
  const Occupation& config(int i) const { return configs_[static_cast<std::size_t>(i)]; }
  const std::vector<Occupation>& configs() const { return configs_; }

  std::optional<int> find(const Occupation& occ) const {
    auto it = index_.find(occ);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Index of n with `count` particles removed from each mode in `from` and
  /// added to each mode in `to`; nullopt when the move is impossible.
  std::optional<int> shifted(int i, std::initializer_list<int> from, std::initializer_list<int> to) const {
    Occupation occ = config(i);
    for (int f : from)
      if (--occ[static_cast<std::size_t>(f)] < 0) return std::nullopt;
    for (int t : to) ++occ[static_cast<std::size_t>(t)];
    return find(occ);
  }

  int pair_index(int k, int q) const { return k * m_ + q; }
  int quad_index(int k, int s, int q, int l) const { return ((k * m_ + s) * m_ + q) * m_ + l; }

  /// Entries of <n| b_k^† b_q |m>.
  const std::vector<TableEntry>& one_body_table(int k, int q) const {
    return one_body_[static_cast<std::size_t>(pair_index(k, q))];
  }
  /// Entries of <n| b_k^† b_s^† b_q b_l |m>.
  const std::vector<TableEntry>& two_body_table(int k, int s, int q, int l) const {
    return two_body_[static_cast<std::size_t>(quad_index(k, s, q, l))];
  }

 private:
  void enumerate(int mode, int remaining, Occupation& occ) {
    if (mode == m_ - 1) {
      occ[static_cast<std::size_t>(mode)] = remaining;
      configs_.push_back(occ);
      return;
    }
    for (int n = remaining; n >= 0; --n) {
      occ[static_cast<std::size_t>(mode)] = n;
      enumerate(mode + 1, remaining - n, occ);
    }
  }

  void build_tables();

  int n_;
  int m_;
  std::vector<Occupation> configs_;
  std::map<Occupation, int> index_;
  std::vector<std::vector<TableEntry>> one_body_;
  std::vector<std::vector<TableEntry>> two_body_;
};

inline void FockBasis::build_tables() {
  const std::size_t m = static_cast<std::size_t>(m_);
  one_body_.assign(m * m, {});
  two_body_.assign(m * m * m * m, {});
  auto nk = [&](int i, int k) { return static_cast<double>(config(i)[static_cast<std::size_t>(k)]); };

  for (int i = 0; i < size(); ++i) {
    for (int k = 0; k < m_; ++k) {
      for (int q = 0; q < m_; ++q) {
        auto& t = one_body_[static_cast<std::size_t>(pair_index(k, q))];
        if (k == q) {
          if (nk(i, k) > 0) t.push_back({i, i, nk(i, k)});
        } else if (auto j = shifted(i, {k}, {q})) {
          t.push_back({i, *j, std::sqrt(nk(i, k) * (nk(i, q) + 1.0))});
        }
      }
    }
  }

  // Two-body elements depend only on the creation multiset {k,s} and the
  // annihilation multiset {q,l}; each index pattern maps onto one closed form.
  for (int i = 0; i < size(); ++i) {
    for (int k = 0; k < m_; ++k)
      for (int s = 0; s < m_; ++s)
        for (int q = 0; q < m_; ++q)
          for (int l = 0; l < m_; ++l) {
            auto& t = two_body_[static_cast<std::size_t>(quad_index(k, s, q, l))];
            auto push = [&](std::optional<int> j, double f) {
              if (j && f != 0.0) t.push_back({i, *j, f});
            };
            const bool a_pair = (k == s);
            const bool b_pair = (q == l);
            if (a_pair && b_pair) {
              const int a = k, b = q;
              if (a == b) {
                // rho_kkkk
                push(i, nk(i, a) * (nk(i, a) - 1.0));
              } else {
                // rho_kkqq
                push(shifted(i, {a, a}, {b, b}),
                     std::sqrt((nk(i, a) - 1.0) * nk(i, a) * (nk(i, b) + 1.0) * (nk(i, b) + 2.0)));
              }
            } else if (a_pair) {
              const int a = k;
              if (q == a || l == a) {
                // rho_kkkl
                const int c = (q == a) ? l : q;
                push(shifted(i, {a}, {c}), (nk(i, a) - 1.0) * std::sqrt(nk(i, a) * (nk(i, c) + 1.0)));
              } else {
                // rho_kkql
                push(shifted(i, {a, a}, {q, l}),
                     std::sqrt((nk(i, a) - 1.0) * nk(i, a) * (nk(i, q) + 1.0) * (nk(i, l) + 1.0)));
              }
            } else if (b_pair) {
              const int b = q;
              if (k == b || s == b) {
                // rho_ksss
                const int a = (k == b) ? s : k;
                push(shifted(i, {a}, {b}), nk(i, b) * std::sqrt(nk(i, a) * (nk(i, b) + 1.0)));
              } else {
                // rho_ksqq
                push(shifted(i, {k, s}, {b, b}),
                     std::sqrt(nk(i, k) * nk(i, s) * (nk(i, b) + 1.0) * (nk(i, b) + 2.0)));
              }
            } else {
              const bool same = (k == q && s == l) || (k == l && s == q);
              if (same) {
                // rho_ksks
                push(i, nk(i, k) * nk(i, s));
              } else {
                // shared index between {k,s} and {q,l}
                int shared = -1;
                for (int a : {k, s})
                  if (a == q || a == l) shared = a;
                if (shared >= 0) {
                  // rho_kssl
                  const int a = (k == shared) ? s : k;
                  const int c = (q == shared) ? l : q;
                  push(shifted(i, {a}, {c}), nk(i, shared) * std::sqrt(nk(i, a) * (nk(i, c) + 1.0)));
                } else {
                  // rho_ksql
                  push(shifted(i, {k, s}, {q, l}),
                       std::sqrt(nk(i, k) * nk(i, s) * (nk(i, q) + 1.0) * (nk(i, l) + 1.0)));
                }
              }
            }
          }
  }
}

inline std::shared_ptr<const FockBasis> enumerate_configs(int n_particles, int n_modes) {
  return std::make_shared<const FockBasis>(n_particles, n_modes);
}

namespace detail {
inline Occupation two_mode_occupation(const FockBasis& basis, int left, int right) {
  Occupation occ(static_cast<std::size_t>(basis.modes()), 0);
  occ[0] = left;
  occ[1] = right;
  return occ;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}
}  // namespace detail

/// (|N,0> + |0,N>)/√2, empty modes beyond the first two.
inline CoefficientVector build_noon(const FockBasis& basis) {
  CoefficientVector c = CoefficientVector::Zero(basis.size());
  const int n = basis.particles();
  c[*basis.find(detail::two_mode_occupation(basis, n, 0))] = 1.0 / std::sqrt(2.0);
  c[*basis.find(detail::two_mode_occupation(basis, 0, n))] = 1.0 / std::sqrt(2.0);
  return c;
}

/// Binomial amplitudes sqrt(N!/(k!(N-k)!)) cos^{N-k}(π/4) sin^k(π/4) on |N-k,k>.
inline CoefficientVector build_spin_coherent(const FockBasis& basis) {
  CoefficientVector c = CoefficientVector::Zero(basis.size());
  const int n = basis.particles();
  const double cs = std::cos(M_PI / 4.0), sn = std::sin(M_PI / 4.0);
  for (int k = 0; k <= n; ++k) {
    const double amp = std::sqrt(detail::binomial(n, k)) * std::pow(cs, n - k) * std::pow(sn, k);
    c[*basis.find(detail::two_mode_occupation(basis, n - k, k))] = amp;
  }
  return c;
}

/// One- and two-body reduced density matrix elements.
struct DensityData {
  int modes = 0;
  Eigen::MatrixXcd rho1;
  std::vector<cplx> rho2;

  cplx two(int k, int s, int q, int l) const {
    return rho2[static_cast<std::size_t>(((k * modes + s) * modes + q) * modes + l)];
  }
};

inline Eigen::MatrixXcd one_body_rdm(const CoefficientVector& c, const FockBasis& basis) {
  const int m = basis.modes();
  Eigen::MatrixXcd rho(m, m);
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < m; ++q) {
      cplx acc = 0.0;
      for (const auto& e : basis.one_body_table(k, q)) acc += std::conj(c[e.bra]) * c[e.ket] * e.factor;
      rho(k, q) = acc;
    }
  return rho;
}

inline std::vector<cplx> two_body_rdm(const CoefficientVector& c, const FockBasis& basis) {
  const int m = basis.modes();
  std::vector<cplx> rho(static_cast<std::size_t>(m * m * m * m));
  for (int k = 0; k < m; ++k)
    for (int s = 0; s < m; ++s)
      for (int q = 0; q < m; ++q)
        for (int l = 0; l < m; ++l) {
          cplx acc = 0.0;
          for (const auto& e : basis.two_body_table(k, s, q, l)) acc += std::conj(c[e.bra]) * c[e.ket] * e.factor;
          rho[static_cast<std::size_t>(basis.quad_index(k, s, q, l))] = acc;
        }
  return rho;
}

inline DensityData densities(const CoefficientVector& c, const FockBasis& basis) {
  return {basis.modes(), one_body_rdm(c, basis), two_body_rdm(c, basis)};
}

/// One-body h_ij = <φ_i|ĥ|φ_j> and contact integrals W_ijkl = g Δx Σ φ_i^* φ_j^* φ_k φ_l.
struct OrbitalIntegrals {
  int modes = 0;
  Eigen::MatrixXcd h;
  std::vector<cplx> w;

  cplx W(int i, int j, int k, int l) const {
    return w[static_cast<std::size_t>(((i * modes + j) * modes + k) * modes + l)];
  }
};

inline double orthonormality_defect(const Grid& grid, const Eigen::MatrixXcd& orbitals) {
  const Eigen::MatrixXcd s = gram(grid, orbitals);
  return (s - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
}

inline OrbitalIntegrals orbital_integrals(const Grid& grid, const Eigen::MatrixXcd& orbitals,
                                          const RealFunction& potential, double g) {
  const int m = static_cast<int>(orbitals.cols());
  OrbitalIntegrals out;
  out.modes = m;
  out.h = grid.spacing() * (orbitals.adjoint() * apply_h(grid, potential, orbitals));
  out.w.assign(static_cast<std::size_t>(m * m * m * m), 0.0);
  const double scale = g * grid.spacing();
  // Contact integrals are symmetric under i<->j, k<->l and complex conjugation
  // pairs; fill the full tensor from pair products.
  std::vector<Eigen::VectorXcd> prod(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k)
      prod[static_cast<std::size_t>(i * m + k)] = orbitals.col(i).conjugate().cwiseProduct(orbitals.col(k));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          // W_ijkl = g Δx Σ (φ_i^* φ_k)(φ_j^* φ_l)
          const auto& a = prod[static_cast<std::size_t>(i * m + k)];
          const auto& b = prod[static_cast<std::size_t>(j * m + l)];
          out.w[static_cast<std::size_t>(((i * m + j) * m + k) * m + l)] = scale * (a.array() * b.array()).sum();
        }
  return out;
}

/// H C with H = Σ h_ij b_i^† b_j + ½ Σ W_ijkl b_i^† b_j^† b_l b_k.
inline CoefficientVector apply_hamiltonian(const OrbitalIntegrals& ints, const FockBasis& basis,
                                           const CoefficientVector& c) {
  const int m = basis.modes();
  CoefficientVector out = CoefficientVector::Zero(basis.size());
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < m; ++q) {
      const cplx h = ints.h(k, q);
      for (const auto& e : basis.one_body_table(k, q)) out[e.bra] += h * e.factor * c[e.ket];
    }
  // b_k^† b_s^† b_q b_l carries ½ W_{k s l q}.
  for (int k = 0; k < m; ++k)
    for (int s = 0; s < m; ++s)
      for (int q = 0; q < m; ++q)
        for (int l = 0; l < m; ++l) {
          const cplx w = 0.5 * ints.W(k, s, l, q);
          if (w == 0.0) continue;
          for (const auto& e : basis.two_body_table(k, s, q, l)) out[e.bra] += w * e.factor * c[e.ket];
        }
  return out;
}

inline Eigen::MatrixXcd hamiltonian_matrix(const OrbitalIntegrals& ints, const FockBasis& basis) {
  const int d = basis.size();
  Eigen::MatrixXcd h(d, d);
  for (int j = 0; j < d; ++j) h.col(j) = apply_hamiltonian(ints, basis, CoefficientVector::Unit(d, j));
  return h;
}

/// Many-body Hamiltonian in the Fock basis built on `orbitals`.
inline Eigen::MatrixXcd hamiltonian_matrix(const Grid& grid, const Eigen::MatrixXcd& orbitals,
                                           const RealFunction& potential, double g, const FockBasis& basis) {
  if (orbitals.cols() != basis.modes()) throw ConfigError("hamiltonian_matrix: orbital count != basis modes");
  grid.require_samples(orbitals, "hamiltonian_matrix orbitals");
  const double defect = orthonormality_defect(grid, orbitals);
  if (defect > 1e-6)
    throw NumericalError("hamiltonian_matrix: orbitals not orthonormal (Gram defect " + std::to_string(defect) + ")");
  return hamiltonian_matrix(orbital_integrals(grid, orbitals, potential, g), basis);
}

}  // namespace selfmetro
