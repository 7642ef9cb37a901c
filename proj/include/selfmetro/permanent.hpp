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

#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace selfmetro {

inline constexpr int kMaxPermanentSize = 25;

/**
 * Permanent by Ryser's inclusion-exclusion formula in the Nijenhuis-Wilf
 * form: row sums start at a_{i,n-1} - ½ Σ_j a_ij and a Gray code walks the
 * subsets of the first n-1 columns, so each of the 2^{n-1} terms costs O(n).
 */
template <class Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw ConfigError("permanent: matrix must be square");
  if (n > kMaxPermanentSize)
    throw ConfigError("permanent: size " + std::to_string(n) + " exceeds cap " + std::to_string(kMaxPermanentSize));
  if (n == 0) return Scalar(1);

  std::vector<Scalar> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = a(i, n - 1) - Scalar(0.5) * a.row(i).sum();

  auto product = [&] {
    Scalar p(1);
    for (const auto& v : x) p *= v;
    return p;
  };

  Scalar total = product();
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < count; ++k) {
    const int j = std::countr_zero(k);
    gray ^= std::uint64_t{1} << j;
    const Scalar sign = ((gray >> j) & 1U) ? Scalar(1) : Scalar(-1);
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] += sign * a(i, j);
    const Scalar p = product();
    total += (k & 1U) ? -p : p;
  }
  return Scalar(2) * ((n - 1) % 2 == 0 ? total : -total);
}

}  // namespace selfmetro
