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

#include "selfmetro/config.hpp"

using namespace selfmetro;

TEST(Config, DefaultsDescribeTheTiltedTrap) {
  const ScenarioConfig c = parse_config("");
  EXPECT_EQ(c.trap.p1, 0.5);
  EXPECT_EQ(c.trap.p2, 50.0);
  EXPECT_EQ(c.trap.p3, 1.0);
  EXPECT_EQ(c.trap.p4, 0.1);
  EXPECT_EQ(c.particles, 10);
  EXPECT_NEAR(c.gN(), 0.1, 1e-15);
  EXPECT_EQ(c.grid().size(), 257);
  EXPECT_EQ(c.evolution.dt, 1e-4);
  EXPECT_EQ(c.evolution.regularization, 1e-8);
  EXPECT_EQ(make_p4_grid(c.p4_min, c.p4_max, c.p4_step).size(), 101u);
}

TEST(Config, ParsesKeysCommentsAndLists) {
  const ScenarioConfig c = parse_config(
      "# scenario\n"
      "system.N = 6   # particles\n"
      "system.gN = 1.2\n"
      "system.state_kind = cat\n"
      "evolution.frozen_orbitals = true\n"
      "fisher.n_list = 2, 4,6\n"
      "estimation.seed = 77\n"
      "\n"
      "output_dir = out dir\n");
  EXPECT_EQ(c.particles, 6);
  EXPECT_NEAR(c.g, 0.2, 1e-15);
  EXPECT_EQ(c.state_kind, StateKind::cat);
  EXPECT_TRUE(c.evolution.frozen_orbitals);
  EXPECT_EQ(c.n_list, (std::vector<int>{2, 4, 6}));
  EXPECT_EQ(c.seed, 77u);
  EXPECT_EQ(c.output_dir, "out dir");
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("system.Q = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("system.N\n"), ConfigError);
  EXPECT_THROW(parse_config("system.N = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("system.N = 4\nsystem.N = 5\n"), ConfigError);
  EXPECT_THROW(parse_config("system.g = 0.1\nsystem.gN = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("system.M = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("system.N = 30\n"), ConfigError);
  EXPECT_THROW(parse_config("system.state_kind = squeezed\n"), ConfigError);
  EXPECT_THROW(parse_config("grid.n_points = 8\n"), ConfigError);
  EXPECT_THROW(parse_config("evolution.dt = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("evolution.frozen_orbitals = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("estimation.seed = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("trap.p1 = nan\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/selfmetro.cfg"), ConfigError);
}

TEST(Config, HashTracksSettings) {
  const ScenarioConfig a = parse_config("system.N = 4\n");
  const ScenarioConfig b = parse_config("# same\nsystem.N=4");
  const ScenarioConfig c = parse_config("system.N = 5\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(parse_config(a.canonical()).hash(), a.hash());
}

TEST(Config, FamilyScenarioCarriesSettings) {
  const ScenarioConfig c = parse_config("system.M = 4\nsystem.state_kind = cat\ngrid.n_points = 129\n");
  const FamilyScenario sc = c.family_scenario(0.5);
  EXPECT_EQ(sc.modes, 4);
  EXPECT_EQ(sc.kind, StateKind::cat);
  EXPECT_EQ(sc.grid.size(), 129);
  EXPECT_EQ(sc.evolution.t_final, 0.5);
  EXPECT_EQ(sc.trap.p4, 0.1);
}

TEST(Config, HashIgnoresOutputDirectory) {
  EXPECT_EQ(parse_config("output_dir = a\n").hash(), parse_config("output_dir = b\n").hash());
  EXPECT_NE(parse_config("output_dir = a\n").canonical(), parse_config("output_dir = b\n").canonical());
}
