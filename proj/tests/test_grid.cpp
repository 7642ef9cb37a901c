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

#include <cmath>
#include <random>

#include "selfmetro/grid.hpp"

using namespace selfmetro;

namespace {

PotentialParams harmonic() {
  PotentialParams p;
  p.p2 = 0.0;
  p.p4 = 0.0;
  return p;
}

ComplexFunction random_function(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  ComplexFunction f(n);
  for (int i = 0; i < n; ++i) f[i] = {d(rng), d(rng)};
  return f;
}

}  // namespace

TEST(Grid, RejectsTooFewPointsAndBadWidth) {
  EXPECT_THROW(build_grid(8.0, 5), ConfigError);
  EXPECT_THROW(build_grid(0.0, 257), ConfigError);
  EXPECT_THROW(build_grid(-1.0, 257), ConfigError);
}

TEST(Grid, SpacingAndSymmetry) {
  const Grid g = build_grid(8.0, 257);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.0625);
  EXPECT_TRUE(g.has_center_node());
  EXPECT_EQ(g.x(128), 0.0);
  for (int i = 0; i < g.size(); ++i) EXPECT_EQ(g.x(i), -g.x(g.mirror(i)));
  for (int i = 1; i < g.size(); ++i) EXPECT_NEAR(g.x(i) - g.x(i - 1), g.spacing(), 1e-12 * g.spacing());
  EXPECT_EQ(g.x(0), -8.0);
  EXPECT_EQ(g.x(256), 8.0);
}

TEST(Grid, EvenPointCountStraddlesOrigin) {
  const Grid g = build_grid(8.0, 256);
  EXPECT_FALSE(g.has_center_node());
  EXPECT_LT(g.x(127), 0.0);
  EXPECT_GT(g.x(128), 0.0);
  EXPECT_DOUBLE_EQ(g.x(127), -g.x(128));
}

TEST(Potential, DirectSubstitution) {
  PotentialParams p;
  p.p4 = 0.0;
  EXPECT_DOUBLE_EQ(p(0.0), 50.0);
  p.p4 = 0.1;
  EXPECT_DOUBLE_EQ(p(0.0), 50.0);
  EXPECT_DOUBLE_EQ(harmonic()(2.0), 1.0);
  EXPECT_NEAR(p(1.5), 0.25 * 2.25 + 50.0 * std::exp(-1.125) + 0.15, 1e-14);
}

TEST(Potential, ValidatesParameters) {
  PotentialParams p;
  p.p1 = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = PotentialParams{};
  p.p3 = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = PotentialParams{};
  p.p2 = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = PotentialParams{};
  p.p4 = -0.3;
  EXPECT_NO_THROW(p.validate());
}

TEST(Potential, EvenWithoutTilt) {
  const Grid g = build_grid(8.0, 257);
  PotentialParams p;
  p.p4 = 0.0;
  const RealFunction v = eval_potential(p, g);
  for (int i = 0; i < g.size(); ++i) EXPECT_EQ(v[i], v[g.mirror(i)]);
}

TEST(Hamiltonian, HermitianOnRandomPairs) {
  const Grid g = build_grid(8.0, 257);
  const RealFunction v = eval_potential(PotentialParams{}, g);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexFunction a = random_function(g.size(), rng), b = random_function(g.size(), rng);
    const cplx lhs = inner(g, a, apply_h(g, v, b));
    const cplx rhs = std::conj(inner(g, b, apply_h(g, v, a)));
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(lhs));
  }
}

TEST(Hamiltonian, HarmonicGroundStateResidual) {
  const Grid g = build_grid(8.0, 257);
  const RealFunction v = eval_potential(harmonic(), g);
  const double omega = std::sqrt(0.5);
  ComplexFunction psi(g.size());
  for (int i = 0; i < g.size(); ++i) psi[i] = std::exp(-0.5 * omega * g.x(i) * g.x(i));
  const ComplexFunction hpsi = apply_h(g, v, psi);
  for (int i = 16; i < g.size() - 16; ++i) EXPECT_NEAR(std::abs(hpsi[i] - 0.5 * omega * psi[i]), 0.0, 1e-3);
}

TEST(Hamiltonian, ConstantPlateauHasNoKineticEnergy) {
  const Grid g = build_grid(8.0, 257);
  const RealFunction zero = RealFunction::Zero(g.size());
  const ComplexFunction ones = ComplexFunction::Ones(g.size());
  const ComplexFunction out = apply_h(g, zero, ones);
  for (int i = 1; i < g.size() - 1; ++i) EXPECT_NEAR(std::abs(out[i]), 0.0, 1e-12);
}

TEST(Hamiltonian, RejectsWrongLength) {
  const Grid g = build_grid(8.0, 257);
  const RealFunction v = eval_potential(PotentialParams{}, g);
  EXPECT_THROW(apply_h(g, v, ComplexFunction::Ones(100)), ConfigError);
}

TEST(Eigen, HarmonicLevels) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(harmonic(), g), 3);
  const double omega = std::sqrt(0.5);
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(pairs[static_cast<std::size_t>(n)].energy, omega * (n + 0.5), 1e-3);
}

TEST(Eigen, HarmonicErrorIsSecondOrder) {
  const double omega = std::sqrt(0.5);
  auto err = [&](int n) {
    const Grid g = build_grid(8.0, n);
    return std::abs(lowest_eigenstates(g, eval_potential(harmonic(), g), 1)[0].energy - 0.5 * omega);
  };
  const double ratio = err(129) / err(257);
  EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(Eigen, OrthonormalAndSignFixed) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 4);
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    for (std::size_t b = 0; b < pairs.size(); ++b)
      EXPECT_NEAR(g.spacing() * pairs[a].state.dot(pairs[b].state), a == b ? 1.0 : 0.0, 1e-10);
    int first = 0;
    while (std::abs(pairs[a].state[first]) <= 1e-6) ++first;
    EXPECT_GT(pairs[a].state[first], 0.0);
  }
  for (std::size_t a = 1; a < pairs.size(); ++a) EXPECT_GT(pairs[a].energy, pairs[a - 1].energy);
}

TEST(Eigen, TunnelingDoubletRegression) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 3);
  const double split = pairs[1].energy - pairs[0].energy;
  EXPECT_NEAR(pairs[0].energy, 3.83553202603896, 1e-9);
  EXPECT_NEAR(pairs[2].energy, 5.6904497603793, 1e-9);
  // The splitting sits at the solver's absolute resolution (~ |H| eps), so only its scale is pinned.
  EXPECT_LT(std::abs(split), 1e-12);
  EXPECT_LT(std::abs(split), 1e-10 * (pairs[2].energy - pairs[1].energy));
}

TEST(Eigen, ParitySolverMatchesDenseOnModerateBarrier) {
  // A barrier low enough that the doublet is resolvable by the full-mesh solve.
  const Grid g = build_grid(8.0, 257);
  PotentialParams p;
  p.p2 = 5.0;
  p.p4 = 0.0;
  const RealFunction v = eval_potential(p, g);
  const auto by_parity = detail::eigenpairs_by_parity(g, v, 4);
  const auto dense = detail::eigenpairs_dense(g, v, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(by_parity[i].energy, dense[i].energy, 1e-10);
    const double overlap = by_parity[i].state.dot(dense[i].state) / (by_parity[i].state.norm() * dense[i].state.norm());
    EXPECT_NEAR(std::abs(overlap), 1.0, 1e-9);
  }
}

TEST(Eigen, GridConvergence) {
  const PotentialParams p = PotentialParams{}.with_tilt(0.0);
  const Grid coarse = build_grid(8.0, 257), fine = build_grid(8.0, 513);
  const auto a = lowest_eigenstates(coarse, eval_potential(p, coarse), 3);
  const auto b = lowest_eigenstates(fine, eval_potential(p, fine), 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i].energy, b[i].energy, 2e-3 * b[i].energy);
}

TEST(Localized, LeftRightPair) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 2);
  const auto [l, r] = localized_orbitals(g, pairs[0].state, pairs[1].state);
  EXPECT_GT(left_weight(g, l), 0.95);
  EXPECT_LT(left_weight(g, r), 0.05);
  EXPECT_NEAR(g.spacing() * l.dot(r), 0.0, 1e-10);
  EXPECT_NEAR(g.spacing() * l.squaredNorm(), 1.0, 1e-10);
  double mirrored = 0.0;
  for (int i = 0; i < g.size(); ++i) mirrored = std::max(mirrored, std::abs(std::abs(r[i]) - std::abs(l[g.mirror(i)])));
  EXPECT_LT(mirrored, 1e-8);
}

TEST(Localized, SwappedInputsSwapOrbitals) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 2);
  const auto [l, r] = localized_orbitals(g, pairs[0].state, pairs[1].state);
  // Negating the odd state exchanges φ0 + φ1 and φ0 - φ1.
  const RealFunction flipped = -pairs[1].state;
  const auto [l2, r2] = localized_orbitals(g, pairs[0].state, flipped);
  EXPECT_LT((l2 - l).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((r2 - r).cwiseAbs().maxCoeff(), 1e-12);
  const RealFunction plus = (pairs[0].state + flipped) / std::sqrt(2.0);
  EXPECT_LT((plus - r).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Localized, RejectsWrongParity) {
  const Grid g = build_grid(8.0, 257);
  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 2);
  EXPECT_THROW(localized_orbitals(g, pairs[1].state, pairs[0].state), NumericalError);
}

TEST(SingleParticleEnergy, HarmonicAndDoubleWell) {
  const Grid g = build_grid(8.0, 257);
  const auto ho = lowest_eigenstates(g, eval_potential(harmonic(), g), 1);
  EXPECT_NEAR(single_particle_energy(g, ho[0].state, eval_potential(harmonic(), g)), std::sqrt(0.5) / 2, 1e-3);

  const auto pairs = lowest_eigenstates(g, eval_potential(PotentialParams{}.with_tilt(0.0), g), 2);
  const auto [l, r] = localized_orbitals(g, pairs[0].state, pairs[1].state);
  const RealFunction sym = eval_potential(PotentialParams{}.with_tilt(0.0), g);
  EXPECT_NEAR(single_particle_energy(g, l, sym), single_particle_energy(g, r, sym), 1e-8);
  const RealFunction tilted = eval_potential(PotentialParams{}.with_tilt(0.1), g);
  EXPECT_LT(single_particle_energy(g, l, tilted), single_particle_energy(g, r, tilted));
  EXPECT_THROW(single_particle_energy(g, RealFunction(2.0 * l), sym), ConfigError);
}
