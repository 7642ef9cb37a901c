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

#include <bit>
#include <filesystem>
#include <random>

#include "selfmetro/likelihood.hpp"

using namespace selfmetro;

namespace {

SideProbabilities random_sides(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = u(rng), b = u(rng);
  return {{a, b}, {1.0 - a, 1.0 - b}};
}

CoefficientVector random_two_mode(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CoefficientVector c(n + 1);
  for (int k = 0; k <= n; ++k) c[k] = {g(rng), g(rng)};
  return c / c.norm();
}

// Each of the N particles (N-k in orbital 1, k in orbital 2) is independently
// found left or right; sum the probabilities of all 2^N assignments.
std::vector<double> enumeration_oracle(const CoefficientVector& c, const SideProbabilities& sp) {
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
  for (int k = 0; k <= n; ++k) {
    const double w = std::norm(c[k]);
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
      double prob = 1.0;
      for (int particle = 0; particle < n; ++particle) {
        const int orbital = particle < n - k ? 0 : 1;
        const bool right = (mask >> particle) & 1U;
        prob *= right ? sp.right[static_cast<std::size_t>(orbital)] : sp.left[static_cast<std::size_t>(orbital)];
      }
      p[static_cast<std::size_t>(std::popcount(mask))] += w * prob;
    }
  }
  return p;
}

}  // namespace

TEST(Likelihood, TwoParticleFormulas) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const SideProbabilities sp = random_sides(rng);
    const CoefficientVector c = random_two_mode(2, rng);
    const double l1 = sp.left[0], l2 = sp.left[1], r1 = sp.right[0], r2 = sp.right[1];
    const double c0 = std::norm(c[0]), c1 = std::norm(c[1]), c2 = std::norm(c[2]);
    const auto d = outcome_distribution(c, sp, 2);
    EXPECT_NEAR(d.p[0], c0 * l1 * l1 + c1 * l1 * l2 + c2 * l2 * l2, 1e-15);
    EXPECT_NEAR(d.p[1], 2 * c0 * l1 * r1 + c1 * (l1 * r2 + r1 * l2) + 2 * c2 * l2 * r2, 1e-15);
    EXPECT_NEAR(d.p[2], c0 * r1 * r1 + c1 * r1 * r2 + c2 * r2 * r2, 1e-15);
  }
}

TEST(Likelihood, TwoParticleKernelCoefficients) {
  const SideProbabilities sp{{0.3, 0.8}, {0.7, 0.2}};
  const Eigen::MatrixXd kernel = outcome_kernel(2, sp);
  const double l1 = 0.3, l2 = 0.8, r1 = 0.7, r2 = 0.2;
  const double expect[3][3] = {{l1 * l1, l1 * l2, l2 * l2},
                               {2 * l1 * r1, l1 * r2 + r1 * l2, 2 * l2 * r2},
                               {r1 * r1, r1 * r2, r2 * r2}};
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(kernel(j, k), expect[j][k], 1e-15);
}

TEST(Likelihood, OutcomeMatrixLayout) {
  const SideProbabilities sp{{0.3, 0.8}, {0.7, 0.2}};
  const Eigen::MatrixXd v = build_outcome_matrix(1, 2, 2, sp);
  EXPECT_EQ(v(0, 0), 0.8);
  EXPECT_EQ(v(0, 1), 0.8);
  EXPECT_EQ(v(1, 0), 0.2);
  EXPECT_EQ(v(1, 1), 0.2);
  EXPECT_THROW(build_outcome_matrix(3, 0, 2, sp), ConfigError);
}

TEST(Likelihood, MatchesEnumerationOracle) {
  std::mt19937_64 rng(2);
  for (int n = 1; n <= 6; ++n)
    for (int trial = 0; trial < 30; ++trial) {
      const SideProbabilities sp = random_sides(rng);
      const CoefficientVector c = random_two_mode(n, rng);
      const auto d = outcome_distribution(c, sp, n);
      const auto o = enumeration_oracle(c, sp);
      for (int j = 0; j <= n; ++j) ASSERT_NEAR(d.p[static_cast<std::size_t>(j)], o[static_cast<std::size_t>(j)], 1e-10);
    }
}

TEST(Likelihood, NormalizedForRandomInputs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(1, 12);
  PermanentCache cache;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = pick(rng);
    const auto d = outcome_distribution(random_two_mode(n, rng), random_sides(rng), n, &cache);
    ASSERT_NEAR(d.total(), 1.0, 1e-10);
    for (double p : d.p) ASSERT_GE(p, -1e-14);
  }
}

TEST(Likelihood, MassMovesLeftWithOrbitalOne) {
  CoefficientVector c = CoefficientVector::Zero(7);
  c[0] = 1.0;
  double previous = -1.0;
  for (double pl : {0.2, 0.4, 0.6, 0.8, 0.95}) {
    const auto d = outcome_distribution(c, {{pl, 0.5}, {1 - pl, 0.5}}, 6);
    EXPECT_GT(d.p[0], previous);
    previous = d.p[0];
  }
}

TEST(Likelihood, LocalizedOrbitalsReproduceFockWeights) {
  std::mt19937_64 rng(4);
  const CoefficientVector c = random_two_mode(8, rng);
  const auto d = outcome_distribution(c, {{1.0, 0.0}, {0.0, 1.0}}, 8);
  for (int k = 0; k <= 8; ++k) EXPECT_NEAR(d.p[static_cast<std::size_t>(k)], std::norm(c[k]), 1e-14);
}

TEST(Likelihood, PrefactorAboveExactRange) {
  for (int j : {0, 5, 11, 22}) {
    const double exact = std::exp(-std::lgamma(23.0 - j) - std::lgamma(j + 1.0));
    EXPECT_NEAR(detail::outcome_prefactor(22, j), exact, 1e-12 * exact);
  }
  EXPECT_NEAR(detail::outcome_prefactor(4, 2), 0.25, 1e-16);
}

TEST(Likelihood, CacheReusesIdenticalSides) {
  PermanentCache cache;
  const SideProbabilities sp{{0.9, 0.1}, {0.1, 0.9}};
  std::mt19937_64 rng(5);
  const auto a = outcome_distribution(random_two_mode(5, rng), sp, 5, &cache);
  const std::size_t filled = cache.size();
  const auto b = outcome_distribution(random_two_mode(5, rng), sp, 5, &cache);
  EXPECT_EQ(cache.size(), filled);
  EXPECT_EQ(filled, 36u);
  (void)a;
  (void)b;
}

TEST(Likelihood, SideProbabilitiesSumToOne) {
  const Grid grid = build_grid(8.0, 257);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd orb(grid.size(), 2);
  for (int i = 0; i < grid.size(); ++i) orb(i, 0) = {g(rng), g(rng)}, orb(i, 1) = {g(rng), g(rng)};
  const auto sp = side_probabilities(grid, orb);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(sp.left[static_cast<std::size_t>(j)] + sp.right[static_cast<std::size_t>(j)], 1.0, 1e-10);
    EXPECT_GE(sp.left[static_cast<std::size_t>(j)], 0.0);
    EXPECT_LE(sp.left[static_cast<std::size_t>(j)], 1.0);
  }
}

TEST(Likelihood, FourModeProjection) {
  const auto b = enumerate_configs(4, 4);
  CoefficientVector c = CoefficientVector::Zero(b->size());
  c[*b->find({4, 0, 0, 0})] = 0.6;
  c[*b->find({0, 4, 0, 0})] = 0.8;
  const CoefficientVector two = two_mode_projection(c, *b);
  ASSERT_EQ(two.size(), 5);
  EXPECT_NEAR(two[0].real(), 0.6, 1e-15);
  EXPECT_NEAR(two[4].real(), 0.8, 1e-15);
  c[*b->find({3, 0, 1, 0})] = 0.1;
  EXPECT_THROW(two_mode_projection(c, *b), NumericalError);
}

TEST(Likelihood, CsvColumns) {
  const auto path = std::filesystem::temp_directory_path() / "selfmetro_outcome_test.csv";
  write_outcome_csv(path, "config_hash=test", OutcomeDistribution{{0.25, 0.5, 0.25}});
  const CsvTable t = read_csv(path);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"nL", "nR", "probability"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][0], "2");
  EXPECT_EQ(t.rows[0][1], "0");
  EXPECT_EQ(t.comments.front(), "config_hash=test");
  std::filesystem::remove(path);
}
