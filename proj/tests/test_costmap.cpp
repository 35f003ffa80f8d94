// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles/oracles.hpp"
#include "support/test_support.hpp"
#include "terraseg/costmap.hpp"
#include "terraseg/error.hpp"

namespace terraseg {
namespace {

const ClassSchema& schema() { return ClassSchema::default_schema(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

Costmap uniform_map(int h, int w, double cost) {
  Costmap map(w, h, TierCosts{});
  for (std::size_t i = 0; i < map.cell_costs.size(); ++i) {
    map.cell_costs[i] = cost;
    map.tiers[i] = SafetyTier::kSafe;
  }
  return map;
}

void block(Costmap& map, int r, int c) {
  map.cell_costs[map.index(r, c)] = kBlocked;
  map.tiers[map.index(r, c)] = SafetyTier::kObstacle;
}

// Recomputes a path's cost from its steps and checks it is a legal walk.
double walk_cost(const Costmap& map, const std::vector<GridCell>& path) {
  PathCost cost;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int dr = std::abs(path[i].row - path[i - 1].row);
    const int dc = std::abs(path[i].col - path[i - 1].col);
    EXPECT_TRUE(dr <= 1 && dc <= 1 && dr + dc > 0);
    EXPECT_FALSE(map.blocked(path[i].row, path[i].col));
    (dr && dc ? cost.diagonal : cost.orthogonal) += map.cost(path[i].row, path[i].col);
  }
  return cost.total();
}

TEST(Costmap, TierCostsFromMask) {
  // Landscape, Flowers / Logs, Sky.
  const Costmap map = to_costmap(testing::mask_from(2, 2, {8, 5, 6, 9}), schema(), {1.0, 10.0});
  EXPECT_EQ(map.cost(0, 0), 1.0);
  EXPECT_EQ(map.cost(0, 1), 10.0);
  EXPECT_TRUE(map.blocked(1, 0));
  EXPECT_EQ(map.cost(1, 1), 1.0);
  EXPECT_EQ(map.tiers[2], SafetyTier::kObstacle);

  const Costmap sky = to_costmap(LabelMap(4, 3, 9), schema());
  for (double c : sky.cell_costs) EXPECT_EQ(c, 1.0);
  const Costmap rocks = to_costmap(LabelMap(4, 3, 7), schema());
  for (double c : rocks.cell_costs) EXPECT_TRUE(std::isinf(c));
}

TEST(Costmap, IgnoredPixelsAreBlockedAndBadLabelsRejected) {
  LabelMap mask(2, 1, 2);
  mask.data[1] = kIgnoreIndex;
  const ClassSchema with_ignore(schema().classes(), std::uint8_t{0});
  const Costmap map = to_costmap(mask, with_ignore);
  EXPECT_EQ(code_of([&] { to_costmap(mask, schema()); }), ErrorCode::kIndexOutOfRange);
  EXPECT_FALSE(map.blocked(0, 0));
  EXPECT_TRUE(map.blocked(0, 1));
  EXPECT_EQ(code_of([] { to_costmap(LabelMap(1, 1, 12), schema()); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([] { to_costmap(LabelMap(1, 1, 0), schema(), {5.0, 2.0}); }),
            ErrorCode::kInvalidArgument);
}

TEST(Costmap, EachCellDependsOnlyOnItsPixel) {
  SeededRng rng(7);
  LabelMap mask = testing::random_mask(rng, 9, 11, 10);
  const Costmap before = to_costmap(mask, schema());
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap changed = mask;
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, 98));
    changed.data[i] = static_cast<std::uint8_t>(rng.uniform_int(0, 9));
    const Costmap after = to_costmap(changed, schema());
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (j != i) ASSERT_EQ(after.cell_costs[j], before.cell_costs[j]);
    }
  }
}

TEST(Projection, IdentityAndTranslation) {
  SeededRng rng(8);
  const Costmap map = to_costmap(testing::random_mask(rng, 6, 7, 10), schema());
  EXPECT_EQ(project_ground(map, kIdentityHomography, 6, 7), map);

  const Costmap shifted = project_ground(map, {1, 0, 2, 0, 1, 0, 0, 0, 1}, 6, 7);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 7; ++c) {
      if (c < 2) {
        EXPECT_TRUE(shifted.blocked(r, c));
      } else {
        EXPECT_EQ(shifted.cost(r, c), map.cost(r, c - 2));
      }
    }
  }
}

TEST(Projection, InverseUndoesForwardInsideTheFootprint) {
  SeededRng rng(9);
  const Costmap map = to_costmap(testing::random_mask(rng, 8, 8, 10), schema());
  const Costmap fwd = project_ground(map, {1, 0, 3, 0, 1, 1, 0, 0, 1}, 8, 8);
  const Costmap back = project_ground(fwd, {1, 0, -3, 0, 1, -1, 0, 0, 1}, 8, 8);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 5; ++c) EXPECT_EQ(back.cost(r, c), map.cost(r, c));
  }
}

TEST(Projection, RejectsSingularMatricesAndBadSizes) {
  const Costmap map = uniform_map(3, 3, 1.0);
  EXPECT_EQ(code_of([&] { project_ground(map, {1, 2, 3, 2, 4, 6, 0, 0, 1}, 3, 3); }),
            ErrorCode::kSingularHomography);
  EXPECT_EQ(code_of([&] { project_ground(map, kIdentityHomography, 0, 3); }),
            ErrorCode::kInvalidArgument);
}

TEST(Planner, DiagonalAcrossOpenGrid) {
  const PathPlan plan = plan_path(uniform_map(3, 3, 1.0), {0, 0}, {2, 2});
  EXPECT_NEAR(plan.total_cost, 2.0 * std::numbers::sqrt2, 1e-12);
  ASSERT_EQ(plan.waypoints.size(), 3u);
  EXPECT_EQ(plan.waypoints[1], (GridCell{1, 1}));
  EXPECT_EQ(plan.blocked_cells_adjacent, 0u);
}

TEST(Planner, DetoursAroundBlockedCentre) {
  Costmap map = uniform_map(3, 3, 1.0);
  block(map, 1, 1);
  const PathPlan plan = plan_path(map, {0, 0}, {2, 2});
  EXPECT_NEAR(plan.total_cost, 2.0 + std::numbers::sqrt2, 1e-12);
  for (const auto& w : plan.waypoints) EXPECT_FALSE(w == (GridCell{1, 1}));
  EXPECT_EQ(plan.blocked_cells_adjacent, 1u);
  EXPECT_EQ(plan_to_json(plan)["waypoints"].size(), 4u);
}

TEST(Planner, EndpointFailures) {
  Costmap map = uniform_map(3, 3, 1.0);
  block(map, 0, 0);
  block(map, 2, 2);
  EXPECT_EQ(code_of([&] { plan_path(map, {0, 0}, {1, 1}); }), ErrorCode::kStartBlocked);
  EXPECT_EQ(code_of([&] { plan_path(map, {1, 1}, {2, 2}); }), ErrorCode::kGoalBlocked);
  EXPECT_EQ(code_of([&] { plan_path(map, {1, 1}, {3, 0}); }), ErrorCode::kIndexOutOfRange);
  Costmap wall = uniform_map(3, 3, 1.0);
  for (int r = 0; r < 3; ++r) block(wall, r, 1);
  EXPECT_EQ(code_of([&] { plan_path(wall, {0, 0}, {2, 2}); }), ErrorCode::kNoPath);
}

TEST(Planner, MatchesDijkstraOnRandomMaps) {
  SeededRng rng(10);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int h = static_cast<int>(rng.uniform_int(2, 14));
    const int w = static_cast<int>(rng.uniform_int(2, 14));
    const Costmap map = testing::random_costmap(rng, h, w);
    const GridCell s{static_cast<int>(rng.uniform_int(0, h - 1)),
                     static_cast<int>(rng.uniform_int(0, w - 1))};
    const GridCell g{static_cast<int>(rng.uniform_int(0, h - 1)),
                     static_cast<int>(rng.uniform_int(0, w - 1))};
    ErrorCode expected{};
    bool expect_fail = false;
    PathPlan want;
    try {
      want = oracle::oracle_dijkstra(map, s, g);
    } catch (const Error& e) {
      expect_fail = true;
      expected = e.code();
    }
    if (expect_fail) {
      EXPECT_EQ(code_of([&] { plan_path(map, s, g); }), expected) << "trial " << trial;
      continue;
    }
    const PathPlan got = plan_path(map, s, g);
    ASSERT_EQ(got.total_cost, want.total_cost) << "trial " << trial;
    EXPECT_EQ(walk_cost(map, got.waypoints), got.total_cost);
    EXPECT_EQ(got.waypoints.front(), s);
    EXPECT_EQ(got.waypoints.back(), g);
    EXPECT_EQ(got.blocked_cells_adjacent, count_adjacent_obstacles(map, got.waypoints));
    ++compared;
  }
  EXPECT_GT(compared, 80);
}

TEST(Planner, CostNeverDropsAsCautionGetsPricier) {
  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMap mask = testing::random_mask(rng, 10, 10, 10);
    // Keep obstacles sparse so most instances are solvable.
    for (auto& v : mask.data) {
      if (schema().at(v).tier == SafetyTier::kObstacle && rng.uniform01() < 0.7) v = 8;
    }
    mask.at(0, 0) = 8;
    mask.at(9, 9) = 8;
    double prev = 0.0;
    try {
      for (double caution : {2.0, 5.0, 10.0, 40.0}) {
        const double cost = plan_path(to_costmap(mask, schema(), {1.0, caution}), {0, 0}, {9, 9}).total_cost;
        EXPECT_GE(cost, prev - 1e-9);
        prev = cost;
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoPath);
    }
  }
}

TEST(Waypoints, ClearanceBehaviour) {
  Costmap map = uniform_map(7, 7, 1.0);
  block(map, 3, 3);
  const PathPlan base = plan_path(map, {0, 3}, {6, 3});
  EXPECT_GT(base.blocked_cells_adjacent, 0u);

  const PathPlan same = suggest_waypoints(base, map, 0);
  EXPECT_EQ(same.total_cost, base.total_cost);

  const PathPlan wide = suggest_waypoints(base, map, 1);
  EXPECT_EQ(wide.blocked_cells_adjacent, 0u);
  EXPECT_GE(wide.total_cost, base.total_cost);

  EXPECT_EQ(code_of([&] { suggest_waypoints(base, map, 3); }), ErrorCode::kNoPath);
  EXPECT_EQ(code_of([&] { suggest_waypoints(base, map, -1); }), ErrorCode::kInvalidArgument);
}

TEST(Waypoints, InflationOnlyRaisesCost) {
  SeededRng rng(12);
  const Costmap map = testing::random_costmap(rng, 12, 12);
  const Costmap inflated = inflate_obstacles(map, 2);
  for (std::size_t i = 0; i < map.cell_costs.size(); ++i) {
    EXPECT_GE(inflated.cell_costs[i], map.cell_costs[i]);
    EXPECT_EQ(std::isinf(inflated.cell_costs[i]), std::isinf(map.cell_costs[i]));
  }
}

TEST(CostmapPng, RoundTripAndSidecar) {
  SeededRng rng(13);
  const Costmap map = to_costmap(testing::random_mask(rng, 5, 6, 10), schema(), {1.0, 10.0});
  const Costmap back = costmap_from_png(costmap_to_png(map), {1.0, 10.0});
  EXPECT_EQ(back, map);

  const nlohmann::json side = costmap_sidecar_json(map, schema(), kIdentityHomography);
  EXPECT_EQ(side["width"], 6);
  EXPECT_EQ(side["blocked_value"], 65535);
  EXPECT_EQ(side["tiers"]["Safe"], nlohmann::json({"Dry Grass", "Landscape", "Sky"}));
  EXPECT_EQ(side["tiers"]["Obstacle"], nlohmann::json({"Trees", "Dry Bushes", "Logs", "Rocks"}));
  const int total = side["tier_counts"]["Safe"].get<int>() + side["tier_counts"]["Caution"].get<int>() +
                    side["tier_counts"]["Obstacle"].get<int>();
  EXPECT_EQ(total, 30);
  EXPECT_EQ(side["homography"].size(), 9u);
  EXPECT_TRUE(costmap_sidecar_json(map, schema(), std::nullopt)["homography"].is_null());
}

}  // namespace
}  // namespace terraseg
