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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "selfmetro/permanent.hpp"

using namespace selfmetro;

namespace {

// Σ over all permutations σ of Π_i a(i, σ(i)).
double permutation_sum(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> sigma(static_cast<std::size_t>(n));
  std::iota(sigma.begin(), sigma.end(), 0);
  double total = 0.0;
  do {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= a(i, sigma[static_cast<std::size_t>(i)]);
    total += p;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return total;
}

}  // namespace

TEST(Permanent, MatchesPermutationSumUpToSeven) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 1; n <= 7; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
      const double expect = permutation_sum(a);
      ASSERT_NEAR(permanent(a), expect, 1e-10 * std::max(1.0, std::abs(expect))) << "n=" << n;
    }
}

TEST(Permanent, KnownValues) {
  EXPECT_EQ(permanent(Eigen::MatrixXd(0, 0)), 1.0);
  Eigen::MatrixXd two(2, 2);
  two << 1, 2, 3, 4;
  EXPECT_DOUBLE_EQ(permanent(two), 10.0);
  for (int n = 1; n <= 10; ++n) {
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    EXPECT_NEAR(permanent(Eigen::MatrixXd::Ones(n, n)), fact, 1e-9 * fact);
    EXPECT_NEAR(permanent(Eigen::MatrixXd::Identity(n, n)), 1.0, 1e-12);
  }
}

TEST(Permanent, InvariantUnderRowAndColumnPermutations) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 8;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
  const double base = permanent(a);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd rows(n, n), cols(n, n);
    for (int i = 0; i < n; ++i) rows.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
    for (int j = 0; j < n; ++j) cols.col(j) = a.col(perm[static_cast<std::size_t>(j)]);
    EXPECT_NEAR(permanent(rows), base, 1e-12 * base);
    EXPECT_NEAR(permanent(cols), base, 1e-12 * base);
  }
}

TEST(Permanent, LinearInEachRow) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 6;
  Eigen::MatrixXd a(n, n), b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = u(rng), b(i, j) = u(rng);
  for (int r = 0; r < n; ++r) {
    Eigen::MatrixXd mixed = a, other = a;
    other.row(r) = b.row(r);
    mixed.row(r) = 2.0 * a.row(r) - 0.5 * b.row(r);
    EXPECT_NEAR(permanent(mixed), 2.0 * permanent(a) - 0.5 * permanent(other), 1e-12);
  }
}

TEST(Permanent, ComplexScalar) {
  Eigen::MatrixXcd a(2, 2);
  a << std::complex<double>(1, 1), 2, 3, std::complex<double>(0, 1);
  EXPECT_NEAR(std::abs(permanent(a) - (std::complex<double>(1, 1) * std::complex<double>(0, 1) + 6.0)), 0.0, 1e-14);
}

TEST(Permanent, RejectsNonSquareAndOversize) {
  EXPECT_THROW(permanent(Eigen::MatrixXd::Ones(2, 3)), ConfigError);
  EXPECT_THROW(permanent(Eigen::MatrixXd::Ones(26, 26)), ConfigError);
}
