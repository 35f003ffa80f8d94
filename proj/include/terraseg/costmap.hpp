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

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <json.hpp>

#include "terraseg/class_schema.hpp"
#include "terraseg/tensor_io.hpp"
#include "terraseg/types.hpp"

namespace terraseg {

inline constexpr double kBlocked = std::numeric_limits<double>::infinity();
inline constexpr std::uint16_t kBlockedPngValue = 65535;

struct TierCosts {
  double safe = 1.0;
  double caution = 10.0;

  friend bool operator==(const TierCosts&, const TierCosts&) = default;
};

void validate_tier_costs(const TierCosts& costs);

/// Grid of traversal costs; Obstacle-tier cells hold kBlocked.
struct Costmap {
  int width = 0;
  int height = 0;
  TierCosts costs;
  std::vector<double> cell_costs;
  std::vector<SafetyTier> tiers;

  Costmap() = default;
  Costmap(int w, int h, TierCosts c)
      : width(w), height(h), costs(c),
        cell_costs(static_cast<std::size_t>(w) * h, kBlocked),
        tiers(static_cast<std::size_t>(w) * h, SafetyTier::kObstacle) {}

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
  bool blocked(int row, int col) const { return std::isinf(cell_costs[index(row, col)]); }
  double cost(int row, int col) const { return cell_costs[index(row, col)]; }

  friend bool operator==(const Costmap&, const Costmap&) = default;
};

/// Tier lookup per pixel; ignored pixels are treated as obstacles.
Costmap to_costmap(const LabelMap& mask, const ClassSchema& schema, TierCosts costs = {});

/// Row-major 3x3 matrix mapping source (x = col, y = row, 1) to destination.
using Homography = std::array<double, 9>;

inline constexpr Homography kIdentityHomography{1, 0, 0, 0, 1, 0, 0, 0, 1};

/// Inverse warp with nearest-neighbour sampling; cells whose preimage falls
/// outside the source are blocked.
Costmap project_ground(const Costmap& map, const Homography& homography, int out_height,
                       int out_width);

struct GridCell {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

struct PathPlan {
  std::vector<GridCell> waypoints;
  double total_cost = 0.0;
  std::size_t blocked_cells_adjacent = 0;
};

/// Path cost split into orthogonal and diagonal sums so that the total
/// orthogonal + sqrt(2) * diagonal does not depend on summation order.
struct PathCost {
  double orthogonal = 0.0;
  double diagonal = 0.0;

  double total() const { return orthogonal + diagonal * std::numbers::sqrt2; }
};

/// 8-connected A* with step cost cost(destination) * (1 or sqrt 2) and the
/// Chebyshev distance times the cheapest cell cost as heuristic. Ties in the
/// open set go to the smaller (row, col).
PathPlan plan_path(const Costmap& map, GridCell start, GridCell goal);

/// Obstacle cells within Chebyshev distance 1 of any waypoint.
std::size_t count_adjacent_obstacles(const Costmap& map, const std::vector<GridCell>& path);

/// Marks every non-obstacle cell within `clearance` (Chebyshev) of an
/// obstacle as Caution with at least the caution cost.
Costmap inflate_obstacles(const Costmap& map, int clearance);

/// Replans between the plan's endpoints on the inflated map. NoPath when the
/// goal falls inside the inflated band.
PathPlan suggest_waypoints(const PathPlan& plan, const Costmap& map, int clearance);

/// 16-bit grayscale: round(cost) clamped to [1, 65534], blocked -> 65535.
Bytes costmap_to_png(const Costmap& map);
/// Cells equal to 65535 become obstacles, values up to costs.safe Safe, the
/// rest Caution.
Costmap costmap_from_png(std::span<const std::uint8_t> png, TierCosts costs = {});

nlohmann::json costmap_sidecar_json(const Costmap& map, const ClassSchema& schema,
                                    const std::optional<Homography>& homography);
nlohmann::json plan_to_json(const PathPlan& plan);

}  // namespace terraseg
