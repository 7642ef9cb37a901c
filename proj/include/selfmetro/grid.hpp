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
 * @file grid.hpp
 * @brief Uniform 1D mesh, double-well trap potential and the discretized
 * single-particle Hamiltonian.
 *
 * The kinetic operator is the second-order central difference with hard-wall
 * boundaries: samples outside the mesh are zero. The same operator is used
 * for the eigensolve that prepares the initial orbitals and for the dynamics.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace selfmetro {

using cplx = std::complex<double>;
using RealFunction = Eigen::VectorXd;
using ComplexFunction = Eigen::VectorXcd;

/// Uniform mesh on [-half_width, half_width], symmetric about x = 0.
class Grid {
 public:
  static constexpr int kMinPoints = 16;

  Grid(double half_width, int n_points) : half_width_(half_width), n_(n_points) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw ConfigError("grid half_width must be positive, got " + std::to_string(half_width));
    if (n_points < kMinPoints)
      throw ConfigError("grid needs at least " + std::to_string(kMinPoints) + " points, got " +
                        std::to_string(n_points));
    dx_ = 2.0 * half_width / static_cast<double>(n_points - 1);
    nodes_.resize(n_points);
    // (i - c) * dx with c = (n-1)/2 keeps mirrored nodes exact negatives of each other.
    const double c = 0.5 * static_cast<double>(n_points - 1);
    for (int i = 0; i < n_points; ++i) nodes_[i] = (static_cast<double>(i) - c) * dx_;
  }

  double half_width() const { return half_width_; }
  int size() const { return n_; }
  double spacing() const { return dx_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  double x(int i) const { return nodes_[i]; }
  int mirror(int i) const { return n_ - 1 - i; }
  bool has_center_node() const { return n_ % 2 == 1; }

  bool operator==(const Grid& o) const { return n_ == o.n_ && half_width_ == o.half_width_; }

  template <class Derived>
  void require_samples(const Eigen::DenseBase<Derived>& f, const char* what) const {
    if (f.rows() != n_)
      throw ConfigError(std::string(what) + ": sample count " + std::to_string(f.rows()) +
                        " does not match grid size " + std::to_string(n_));
  }

 private:
  double half_width_;
  int n_;
  double dx_;
  Eigen::VectorXd nodes_;
};

inline Grid build_grid(double half_width, int n_points) { return Grid(half_width, n_points); }

/// V(x) = p1 x^2 / 2 + p2 exp(-x^2 / (2 p3^2)) + p4 x.
struct PotentialParams {
  double p1 = 0.5;  ///< harmonic curvature
  double p2 = 50.0; ///< barrier height
  double p3 = 1.0;  ///< barrier width
  double p4 = 0.0;  ///< tilt slope

  void validate() const {
    if (!(p1 > 0.0)) throw ConfigError("p1 must be positive");
    if (!(p2 >= 0.0)) throw ConfigError("p2 must be non-negative");
    if (!(p3 > 0.0)) throw ConfigError("p3 must be positive");
    if (!std::isfinite(p4)) throw ConfigError("p4 must be finite");
  }

  PotentialParams with_tilt(double tilt) const {
    PotentialParams p = *this;
    p.p4 = tilt;
    return p;
  }

  double operator()(double x) const {
    return 0.5 * p1 * x * x + p2 * std::exp(-x * x / (2.0 * p3 * p3)) + p4 * x;
  }
};

inline RealFunction eval_potential(const PotentialParams& params, const Grid& grid) {
  params.validate();
  RealFunction v(grid.size());
  for (int i = 0; i < grid.size(); ++i) v[i] = params(grid.x(i));
  return v;
}

/// Δx-weighted inner product <f|g>.
template <class A, class B>
cplx inner(const Grid& grid, const Eigen::MatrixBase<A>& f, const Eigen::MatrixBase<B>& g) {
  return grid.spacing() * cplx(f.template cast<cplx>().dot(g.template cast<cplx>()));
}

template <class A>
double norm_sq(const Grid& grid, const Eigen::MatrixBase<A>& f) {
  return grid.spacing() * f.squaredNorm();
}

/// Gram matrix S_ij = <φ_i|φ_j> of the columns of `orbitals`.
inline Eigen::MatrixXcd gram(const Grid& grid, const Eigen::MatrixXcd& orbitals) {
  return grid.spacing() * (orbitals.adjoint() * orbitals);
}

/// (ĥψ) column by column, ĥ = -½ d²/dx² + V(x).
template <class Derived>
auto apply_h(const Grid& grid, const RealFunction& potential, const Eigen::MatrixBase<Derived>& psi) {
  grid.require_samples(potential, "apply_h potential");
  grid.require_samples(psi, "apply_h wavefunction");
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = grid.size();
  const double inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
  Mat out = ((potential.array() + inv_dx2).matrix().asDiagonal() * psi).eval();
  out.topRows(n - 1) -= (0.5 * inv_dx2) * psi.bottomRows(n - 1);
  out.bottomRows(n - 1) -= (0.5 * inv_dx2) * psi.topRows(n - 1);
  if constexpr (Derived::ColsAtCompileTime == 1) {
    return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(out);
  } else {
    return out;
  }
}

struct Eigenpair {
  double energy;
  RealFunction state;
};

namespace detail {

inline bool is_mirror_symmetric(const Grid& grid, const RealFunction& v) {
  for (int i = 0; i < grid.size() / 2; ++i)
    if (v[i] != v[grid.mirror(i)]) return false;
  return true;
}

// First sample with |ψ| > 1e-6 is made positive; normalization is Δx-weighted.
inline void normalize_and_fix_sign(const Grid& grid, RealFunction& psi) {
  psi /= std::sqrt(norm_sq(grid, psi));
  for (int i = 0; i < psi.size(); ++i) {
    if (std::abs(psi[i]) > 1e-6) {
      if (psi[i] < 0.0) psi = -psi;
      break;
    }
  }
}

struct Tridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd sub;
};

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_tridiagonal(const Tridiagonal& t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(t.diag, t.sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
  return es;
}

// Full-mesh eigenpairs of the discretized ĥ.
inline std::vector<Eigenpair> eigenpairs_dense(const Grid& grid, const RealFunction& v, int k) {
  const int n = grid.size();
  const double inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
  Tridiagonal t{(v.array() + inv_dx2).matrix(), Eigen::VectorXd::Constant(n - 1, -0.5 * inv_dx2)};
  auto es = solve_tridiagonal(t);
  std::vector<Eigenpair> out;
  for (int j = 0; j < k; ++j) out.push_back({es.eigenvalues()[j], es.eigenvectors().col(j)});
  return out;
}

// For a mirror-symmetric potential the even and odd sectors are diagonalized
// separately. The ground doublet of a high barrier is split far below the
// resolution of a full-mesh solve, which would return arbitrary mixtures.
inline std::vector<Eigenpair> eigenpairs_by_parity(const Grid& grid, const RealFunction& v, int k) {
  const int n = grid.size();
  const double a = 0.5 / (grid.spacing() * grid.spacing());  // off-diagonal magnitude
  std::vector<Eigenpair> all;

  auto unfold = [&](const Eigen::VectorXd& half, bool even, bool center) {
    // half[i] is the sample at the i-th node right of the mirror plane.
    RealFunction full = RealFunction::Zero(n);
    const int c = n / 2;
    if (center) {
      full[c] = half[0];
      for (int i = 1; i < half.size(); ++i) {
        full[c + i] = half[i];
        full[c - i] = even ? half[i] : -half[i];
      }
    } else {
      for (int i = 0; i < half.size(); ++i) {
        full[c + i] = half[i];
        full[c - 1 - i] = even ? half[i] : -half[i];
      }
    }
    return full;
  };

  if (grid.has_center_node()) {
    const int c = n / 2;
    // Even sector, unknowns (ψ_c, √2 ψ_{c+1}, ..., √2 ψ_{n-1}) give a symmetric matrix.
    {
      const int m = c + 1;
      Tridiagonal t{Eigen::VectorXd(m), Eigen::VectorXd::Constant(m - 1, -a)};
      for (int i = 0; i < m; ++i) t.diag[i] = 2.0 * a + v[c + i];
      t.sub[0] = -std::sqrt(2.0) * a;
      auto es = solve_tridiagonal(t);
      for (int j = 0; j < std::min(m, k); ++j) {
        Eigen::VectorXd h = es.eigenvectors().col(j);
        h.tail(m - 1) /= std::sqrt(2.0);
        all.push_back({es.eigenvalues()[j], unfold(h, true, true)});
      }
    }
    // Odd sector, ψ_c = 0.
    {
      const int m = c;
      Tridiagonal t{Eigen::VectorXd(m), Eigen::VectorXd::Constant(m - 1, -a)};
      for (int i = 0; i < m; ++i) t.diag[i] = 2.0 * a + v[c + 1 + i];
      auto es = solve_tridiagonal(t);
      for (int j = 0; j < std::min(m, k); ++j) {
        Eigen::VectorXd h(m + 1);
        h[0] = 0.0;
        h.tail(m) = es.eigenvectors().col(j);
        all.push_back({es.eigenvalues()[j], unfold(h, false, true)});
      }
    }
  } else {
    const int m = n / 2;
    for (int parity = 0; parity < 2; ++parity) {
      const bool even = parity == 0;
      Tridiagonal t{Eigen::VectorXd(m), Eigen::VectorXd::Constant(m - 1, -a)};
      for (int i = 0; i < m; ++i) t.diag[i] = 2.0 * a + v[m + i];
      t.diag[0] += even ? -a : a;
      auto es = solve_tridiagonal(t);
      for (int j = 0; j < std::min(m, k); ++j)
        all.push_back({es.eigenvalues()[j], unfold(es.eigenvectors().col(j), even, false)});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Eigenpair& l, const Eigenpair& r) { return l.energy < r.energy; });
  all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace detail

/// The k lowest eigenpairs of the discretized ĥ, ascending, orthonormal under
/// the Δx-weighted product, each with its leftmost significant sample positive.
inline std::vector<Eigenpair> lowest_eigenstates(const Grid& grid, const RealFunction& potential, int k) {
  grid.require_samples(potential, "lowest_eigenstates");
  if (k < 1 || k > grid.size())
    throw ConfigError("lowest_eigenstates: k must lie in [1, n_points]");
  auto pairs = detail::is_mirror_symmetric(grid, potential) ? detail::eigenpairs_by_parity(grid, potential, k)
                                                            : detail::eigenpairs_dense(grid, potential, k);
  for (auto& p : pairs) detail::normalize_and_fix_sign(grid, p.state);
  return pairs;
}

/// <f|Π|f> with Π the reflection x -> -x.
inline double parity_expectation(const Grid& grid, const RealFunction& f) {
  return grid.spacing() * f.dot(f.reverse());
}

/// Weight of |f|² on x < 0; the x = 0 node counts half.
template <class Derived>
double left_weight(const Grid& grid, const Eigen::MatrixBase<Derived>& f) {
  double s = 0.0;
  const int n = grid.size();
  for (int i = 0; i < n / 2; ++i) s += std::norm(cplx(f[i]));
  if (grid.has_center_node()) s += 0.5 * std::norm(cplx(f[n / 2]));
  return grid.spacing() * s;
}

/// Left/right localized combinations (φ0 ± φ1)/√2 of the ground doublet.
/// The combination with more weight on x < 0 is returned first.
inline std::pair<RealFunction, RealFunction> localized_orbitals(const Grid& grid, const RealFunction& phi0,
                                                                const RealFunction& phi1) {
  grid.require_samples(phi0, "localized_orbitals phi0");
  grid.require_samples(phi1, "localized_orbitals phi1");
  const double par0 = parity_expectation(grid, phi0);
  const double par1 = parity_expectation(grid, phi1);
  if (std::abs(par0 - 1.0) >= 0.05 || std::abs(par1 + 1.0) >= 0.05)
    throw NumericalError("localized_orbitals: inputs are not a symmetric/antisymmetric pair (parities " +
                         std::to_string(par0) + ", " + std::to_string(par1) + ")");
  RealFunction plus = (phi0 + phi1) / std::sqrt(2.0);
  RealFunction minus = (phi0 - phi1) / std::sqrt(2.0);
  if (left_weight(grid, plus) >= left_weight(grid, minus)) return {plus, minus};
  return {minus, plus};
}

/// <φ|ĥ|φ> for a normalized orbital.
template <class Derived>
double single_particle_energy(const Grid& grid, const Eigen::MatrixBase<Derived>& phi, const RealFunction& potential) {
  const double nrm = norm_sq(grid, phi);
  if (std::abs(nrm - 1.0) > 1e-6)
    throw ConfigError("single_particle_energy: orbital norm " + std::to_string(nrm) + " != 1");
  const ComplexFunction psi = phi.template cast<cplx>();
  const cplx e = inner(grid, psi, apply_h(grid, potential, psi));
  if (std::abs(e.imag()) > 1e-10) throw NumericalError("single_particle_energy: complex expectation value");
  return e.real();
}

/// ∫ x |φ|² dx.
template <class Derived>
double dipole_moment(const Grid& grid, const Eigen::MatrixBase<Derived>& phi) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i) s += grid.x(i) * std::norm(cplx(phi[i]));
  return grid.spacing() * s;
}

}  // namespace selfmetro
