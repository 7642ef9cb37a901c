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
 * @file likelihood.hpp
 * @brief Left/right particle-count statistics of a two-mode many-body state.
 *
 * A particle in orbital j is found left (right) of x = 0 with probability
 * P_{L,j} (P_{R,j}). For the configuration |N-k,k> the probability of the
 * outcome (n_L, n_R) = (N-j, j) is
 *
 *   P(j | k) = perm(V_{j,k}) / ((N-j)! j!),
 *
 * where V_{j,k} has N-j rows "L" followed by j rows "R", N-k columns
 * "orbital 1" followed by k columns "orbital 2", and entries P_{side,orbital}.
 * The outcome distribution is P_j = Σ_k |C_k|² P(j | k).
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "grid.hpp"
#include "log.hpp"
#include "parallel.hpp"
#include "permanent.hpp"

namespace selfmetro {

struct SideProbabilities {
  std::vector<double> left;
  std::vector<double> right;

  int orbitals() const { return static_cast<int>(left.size()); }
  double get(bool is_left, int orbital) const {
    return is_left ? left[static_cast<std::size_t>(orbital)] : right[static_cast<std::size_t>(orbital)];
  }
};

/// Outcome probabilities P_j of (n_L, n_R) = (N-j, j), j = 0..N.
struct OutcomeDistribution {
  std::vector<double> p;

  int particles() const { return static_cast<int>(p.size()) - 1; }
  double total() const { return std::accumulate(p.begin(), p.end(), 0.0); }
};

/// Split of each orbital's density at x = 0; a node at x = 0 counts half to each side.
inline SideProbabilities side_probabilities(const Grid& grid, const Eigen::MatrixXcd& orbitals) {
  grid.require_samples(orbitals, "side_probabilities");
  SideProbabilities sp;
  for (int j = 0; j < orbitals.cols(); ++j) {
    const double total = norm_sq(grid, orbitals.col(j));
    const double left = left_weight(grid, orbitals.col(j));
    sp.left.push_back(left / total);
    sp.right.push_back((total - left) / total);
  }
  return sp;
}

inline Eigen::MatrixXd build_outcome_matrix(int j, int k, int n_particles, const SideProbabilities& sp) {
  if (n_particles < 1) throw ConfigError("build_outcome_matrix: N must be positive");
  if (j < 0 || j > n_particles || k < 0 || k > n_particles)
    throw ConfigError("build_outcome_matrix: index out of range");
  if (sp.orbitals() < 2) throw ConfigError("build_outcome_matrix: need side probabilities of two orbitals");
  Eigen::MatrixXd v(n_particles, n_particles);
  for (int r = 0; r < n_particles; ++r) {
    const bool left = r < n_particles - j;
    for (int c = 0; c < n_particles; ++c) {
      const int orbital = c < n_particles - k ? 0 : 1;
      v(r, c) = sp.get(left, orbital);
    }
  }
  return v;
}

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// 1/((N-j)! j!) = binom(N, j) / N!; exact products up to N = 20.
inline double outcome_prefactor(int n, int j) {
  if (n <= 20) {
    double a = 1.0, b = 1.0;
    for (int i = 2; i <= n - j; ++i) a *= i;
    for (int i = 2; i <= j; ++i) b *= i;
    return 1.0 / (a * b);
  }
  return std::exp(-log_factorial(n - j) - log_factorial(j));
}

}  // namespace detail

/// Memo of perm(V_{j,k}) keyed on (N, j, k) and the exact bit patterns of the
/// four side probabilities.
class PermanentCache {
 public:
  double get(int j, int k, int n, const SideProbabilities& sp) {
    Key key{n, j, k, bits(sp.left[0]), bits(sp.left[1]), bits(sp.right[0]), bits(sp.right[1])};
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const double value = permanent(build_outcome_matrix(j, k, n, sp));
    std::lock_guard lock(mutex_);
    memo_.emplace(key, value);
    return value;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return memo_.size();
  }

 private:
  using Key = std::tuple<int, int, int, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t>;
  static std::uint64_t bits(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof b);
    return b;
  }
  mutable std::mutex mutex_;
  std::map<Key, double> memo_;
};

/// Conditional table P(j | k) for all outcomes j and configurations k.
inline Eigen::MatrixXd outcome_kernel(int n_particles, const SideProbabilities& sp, PermanentCache* cache = nullptr,
                                      int threads = 1) {
  const int d = n_particles + 1;
  Eigen::MatrixXd kernel(d, d);
  parallel_for(d * d, [&](int idx) {
    const int j = idx / d, k = idx % d;
    const double perm = cache ? cache->get(j, k, n_particles, sp)
                              : permanent(build_outcome_matrix(j, k, n_particles, sp));
    kernel(j, k) = detail::outcome_prefactor(n_particles, j) * perm;
  }, threads);
  return kernel;
}

/// Two-mode coefficient vector C_k of |N-k,k> from a state on M = 2 or 4 modes.
/// Amplitude on configurations with modes 3-4 occupied must stay below 1e-6
/// (probability mass); it is dropped and the remainder renormalized.
inline CoefficientVector two_mode_projection(const CoefficientVector& c, const FockBasis& basis) {
  const int n = basis.particles();
  CoefficientVector out(n + 1);
  if (basis.modes() == 2) return c;
  double kept = 0.0;
  for (int k = 0; k <= n; ++k) {
    Occupation occ(static_cast<std::size_t>(basis.modes()), 0);
    occ[0] = n - k;
    occ[1] = k;
    out[k] = c[*basis.find(occ)];
    kept += std::norm(out[k]);
  }
  const double excess = c.squaredNorm() - kept;
  if (excess > 1e-6)
    throw NumericalError("outcome_distribution: occupation outside the first two modes is " + std::to_string(excess));
  if (excess > 1e-14) log_warning("outcome_distribution: renormalizing away mass " + std::to_string(excess) + " in modes 3-4");
  return out / std::sqrt(kept);
}

inline OutcomeDistribution outcome_distribution(const CoefficientVector& c_two_mode, const SideProbabilities& sp,
                                                int n_particles, PermanentCache* cache = nullptr,
                                                int threads = 1) {
  if (c_two_mode.size() != n_particles + 1)
    throw ConfigError("outcome_distribution: expected N+1 two-mode coefficients");
  const Eigen::MatrixXd kernel = outcome_kernel(n_particles, sp, cache, threads);
  Eigen::VectorXd weights(n_particles + 1);
  for (int k = 0; k <= n_particles; ++k) weights[k] = std::norm(c_two_mode[k]);
  const Eigen::VectorXd p = kernel * weights;
  OutcomeDistribution dist;
  dist.p.assign(p.data(), p.data() + p.size());
  return dist;
}

inline void write_outcome_csv(const std::filesystem::path& path, const std::string& comment,
                              const OutcomeDistribution& dist) {
  CsvWriter w(path, comment, {"nL", "nR", "probability"});
  const int n = dist.particles();
  for (int j = 0; j <= n; ++j)
    w.row({static_cast<long long>(n - j), static_cast<long long>(j), dist.p[static_cast<std::size_t>(j)]});
}

}  // namespace selfmetro
