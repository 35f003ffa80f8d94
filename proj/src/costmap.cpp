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

#include "terraseg/costmap.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "terraseg/error.hpp"
#include "terraseg/png_codec.hpp"

namespace terraseg {

void validate_tier_costs(const TierCosts& costs) {
  if (!(costs.safe > 0.0) || !(costs.caution > 0.0) || !(costs.safe < costs.caution) ||
      !std::isfinite(costs.caution)) {
    throw Error(ErrorCode::kInvalidArgument, "tier costs must satisfy 0 < safe < caution");
  }
}

Costmap to_costmap(const LabelMap& mask, const ClassSchema& schema, TierCosts costs) {
  validate_tier_costs(costs);
  Costmap map(mask.width, mask.height, costs);
  const int c = schema.num_classes();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto label = mask.data[i];
    if (label == kIgnoreIndex && schema.ignore_value()) continue;  // stays blocked
    if (label >= c) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "label " + std::to_string(label) + " at pixel " + std::to_string(i));
    }
    const SafetyTier tier = schema.at(label).tier;
    map.tiers[i] = tier;
    switch (tier) {
      case SafetyTier::kSafe: map.cell_costs[i] = costs.safe; break;
      case SafetyTier::kCaution: map.cell_costs[i] = costs.caution; break;
      case SafetyTier::kObstacle: map.cell_costs[i] = kBlocked; break;
    }
  }
  return map;
}

Costmap project_ground(const Costmap& map, const Homography& h, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "output size must be positive");
  }
  const double det = h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
                     h[2] * (h[3] * h[7] - h[4] * h[6]);
  if (!(std::abs(det) > 1e-12)) {
    throw Error(ErrorCode::kSingularHomography, "|det| = " + std::to_string(std::abs(det)));
  }
  // Adjugate / determinant.
  const std::array<double, 9> inv{
      (h[4] * h[8] - h[5] * h[7]) / det, (h[2] * h[7] - h[1] * h[8]) / det,
      (h[1] * h[5] - h[2] * h[4]) / det, (h[5] * h[6] - h[3] * h[8]) / det,
      (h[0] * h[8] - h[2] * h[6]) / det, (h[2] * h[3] - h[0] * h[5]) / det,
      (h[3] * h[7] - h[4] * h[6]) / det, (h[1] * h[6] - h[0] * h[7]) / det,
      (h[0] * h[4] - h[1] * h[3]) / det};
  Costmap out(out_width, out_height, map.costs);
  for (int r = 0; r < out_height; ++r) {
    for (int c = 0; c < out_width; ++c) {
      const double x = inv[0] * c + inv[1] * r + inv[2];
      const double y = inv[3] * c + inv[4] * r + inv[5];
      const double w = inv[6] * c + inv[7] * r + inv[8];
      if (std::abs(w) < 1e-12) continue;
      const double sx = std::floor(x / w + 0.5);
      const double sy = std::floor(y / w + 0.5);
      if (sx < 0 || sy < 0 || sx >= map.width || sy >= map.height) continue;
      const std::size_t src = map.index(static_cast<int>(sy), static_cast<int>(sx));
      out.cell_costs[out.index(r, c)] = map.cell_costs[src];
      out.tiers[out.index(r, c)] = map.tiers[src];
    }
  }
  return out;
}

namespace {

void check_endpoint(const Costmap& map, GridCell cell, ErrorCode blocked_code, const char* what) {
  if (!map.in_bounds(cell.row, cell.col)) {
    throw Error(ErrorCode::kIndexOutOfRange, std::string(what) + " (" + std::to_string(cell.row) +
                                                 ", " + std::to_string(cell.col) + ") off the map");
  }
  if (map.blocked(cell.row, cell.col)) {
    throw Error(blocked_code, std::string(what) + " (" + std::to_string(cell.row) + ", " +
                                  std::to_string(cell.col) + ") is blocked");
  }
}

struct OpenEntry {
  double f;
  int row;
  int col;

  // std::priority_queue is a max-heap: "greater" means popped later.
  bool operator<(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (row != o.row) return row > o.row;
    return col > o.col;
  }
};

}  // namespace

PathPlan plan_path(const Costmap& map, GridCell start, GridCell goal) {
  check_endpoint(map, start, ErrorCode::kStartBlocked, "start");
  check_endpoint(map, goal, ErrorCode::kGoalBlocked, "goal");

  double min_cost = kBlocked;
  for (double c : map.cell_costs) min_cost = std::min(min_cost, c);
  auto heuristic = [&](int r, int c) {
    return min_cost * std::max(std::abs(r - goal.row), std::abs(c - goal.col));
  };

  const std::size_t n = map.cell_costs.size();
  std::vector<PathCost> g(n, PathCost{kBlocked, 0.0});
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  std::priority_queue<OpenEntry> open;
  const std::size_t s = map.index(start.row, start.col);
  const std::size_t t = map.index(goal.row, goal.col);
  g[s] = {0.0, 0.0};
  open.push({heuristic(start.row, start.col), start.row, start.col});

  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    const std::size_t u = map.index(cur.row, cur.col);
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == t) break;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nr = cur.row + dr;
        const int nc = cur.col + dc;
        if (!map.in_bounds(nr, nc) || map.blocked(nr, nc)) continue;
        const std::size_t v = map.index(nr, nc);
        if (closed[v]) continue;
        PathCost cand = g[u];
        if (dr != 0 && dc != 0) {
          cand.diagonal += map.cell_costs[v];
        } else {
          cand.orthogonal += map.cell_costs[v];
        }
        if (cand.total() < g[v].total()) {
          g[v] = cand;
          parent[v] = static_cast<int>(u);
          open.push({cand.total() + heuristic(nr, nc), nr, nc});
        }
      }
    }
  }
  if (!closed[t]) {
    throw Error(ErrorCode::kNoPath, "goal unreachable from start");
  }
  PathPlan plan;
  for (int v = static_cast<int>(t); v >= 0; v = parent[v]) {
    plan.waypoints.push_back({v / map.width, v % map.width});
  }
  std::reverse(plan.waypoints.begin(), plan.waypoints.end());
  plan.total_cost = g[t].total();
  plan.blocked_cells_adjacent = count_adjacent_obstacles(map, plan.waypoints);
  return plan;
}

std::size_t count_adjacent_obstacles(const Costmap& map, const std::vector<GridCell>& path) {
  std::set<std::size_t> seen;
  for (const auto& w : path) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = w.row + dr;
        const int c = w.col + dc;
        if (map.in_bounds(r, c) && map.tiers[map.index(r, c)] == SafetyTier::kObstacle) {
          seen.insert(map.index(r, c));
        }
      }
    }
  }
  return seen.size();
}

Costmap inflate_obstacles(const Costmap& map, int clearance) {
  if (clearance < 0) throw Error(ErrorCode::kInvalidArgument, "clearance must be >= 0");
  Costmap out = map;
  if (clearance == 0) return out;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      if (map.tiers[map.index(r, c)] != SafetyTier::kObstacle) continue;
      for (int y = std::max(0, r - clearance); y <= std::min(map.height - 1, r + clearance); ++y) {
        for (int x = std::max(0, c - clearance); x <= std::min(map.width - 1, c + clearance); ++x) {
          const std::size_t i = out.index(y, x);
          if (out.tiers[i] == SafetyTier::kObstacle) continue;
          out.tiers[i] = SafetyTier::kCaution;
          out.cell_costs[i] = std::max(out.cell_costs[i], map.costs.caution);
        }
      }
    }
  }
  return out;
}

PathPlan suggest_waypoints(const PathPlan& plan, const Costmap& map, int clearance) {
  if (plan.waypoints.empty()) throw Error(ErrorCode::kInvalidArgument, "plan has no waypoints");
  const GridCell start = plan.waypoints.front();
  const GridCell goal = plan.waypoints.back();
  if (clearance == 0) return plan_path(map, start, goal);
  const Costmap inflated = inflate_obstacles(map, clearance);
  check_endpoint(map, goal, ErrorCode::kGoalBlocked, "goal");
  if (inflated.tiers[map.index(goal.row, goal.col)] != map.tiers[map.index(goal.row, goal.col)]) {
    throw Error(ErrorCode::kNoPath, "goal lies within " + std::to_string(clearance) +
                                        " cell(s) of an obstacle");
  }
  PathPlan out = plan_path(inflated, start, goal);
  out.blocked_cells_adjacent = count_adjacent_obstacles(map, out.waypoints);
  return out;
}

Bytes costmap_to_png(const Costmap& map) {
  PngPixels px;
  px.width = map.width;
  px.height = map.height;
  px.channels = 1;
  px.bit_depth = 16;
  px.data.resize(map.cell_costs.size() * 2);
  for (std::size_t i = 0; i < map.cell_costs.size(); ++i) {
    std::uint16_t v = kBlockedPngValue;
    if (!std::isinf(map.cell_costs[i])) {
      v = static_cast<std::uint16_t>(std::clamp(std::round(map.cell_costs[i]), 1.0, 65534.0));
    }
    px.data[2 * i] = static_cast<std::uint8_t>(v >> 8);
    px.data[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  return encode_png(px);
}

Costmap costmap_from_png(std::span<const std::uint8_t> png, TierCosts costs) {
  validate_tier_costs(costs);
  const PngPixels px = decode_png(png);
  if (px.channels != 1 || px.was_palette) {
    throw Error(ErrorCode::kNotGrayscale, "costmap PNG must be single-channel");
  }
  Costmap map(px.width, px.height, costs);
  for (std::size_t i = 0; i < map.cell_costs.size(); ++i) {
    const std::uint16_t v = px.bit_depth == 16
                                ? static_cast<std::uint16_t>((px.data[2 * i] << 8) | px.data[2 * i + 1])
                                : px.data[i];
    if (v == kBlockedPngValue || v == 0) continue;
    map.cell_costs[i] = v;
    map.tiers[i] = v <= costs.safe ? SafetyTier::kSafe : SafetyTier::kCaution;
  }
  return map;
}

nlohmann::json costmap_sidecar_json(const Costmap& map, const ClassSchema& schema,
                                    const std::optional<Homography>& homography) {
  nlohmann::json legend = {{"Safe", nlohmann::json::array()},
                           {"Caution", nlohmann::json::array()},
                           {"Obstacle", nlohmann::json::array()}};
  for (const auto& c : schema.classes()) legend[std::string(tier_name(c.tier))].push_back(c.name);
  std::size_t counts[3] = {0, 0, 0};
  for (auto t : map.tiers) ++counts[static_cast<int>(t)];
  return {{"width", map.width},
          {"height", map.height},
          {"costs", {{"safe", map.costs.safe}, {"caution", map.costs.caution}}},
          {"blocked_value", kBlockedPngValue},
          {"tiers", legend},
          {"tier_counts", {{"Safe", counts[0]}, {"Caution", counts[1]}, {"Obstacle", counts[2]}}},
          {"homography", homography ? nlohmann::json(*homography) : nlohmann::json(nullptr)}};
}

nlohmann::json plan_to_json(const PathPlan& plan) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& w : plan.waypoints) pts.push_back({w.row, w.col});
  return {{"waypoints", pts},
          {"total_cost", plan.total_cost},
          {"blocked_cells_adjacent", plan.blocked_cells_adjacent}};
}

}  // namespace terraseg
