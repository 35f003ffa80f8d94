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

#include "oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "terraseg/error.hpp"

namespace terraseg::oracle {

ConfusionAccumulator oracle_confusion(const LabelMap& gt, const LabelMap& pred, int num_classes) {
  ConfusionAccumulator acc(num_classes);
  for (int g = 0; g < num_classes; ++g) {
    for (int p = 0; p < num_classes; ++p) {
      std::uint64_t n = 0;
      for (int r = 0; r < gt.height; ++r) {
        for (int c = 0; c < gt.width; ++c) {
          if (gt.at(r, c) == g && pred.at(r, c) == p) ++n;
        }
      }
      acc.set_count(g, p, n);
    }
  }
  return acc;
}

double oracle_iou(const LabelMap& gt, const LabelMap& pred, int c) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool in_gt = gt.data[i] == c;
    const bool in_pred = pred.data[i] == c;
    if (in_gt && in_pred) ++inter;
    if (in_gt || in_pred) ++uni;
  }
  return uni == 0 ? -1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double oracle_pixel_accuracy(const LabelMap& gt, const LabelMap& pred) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += gt.data[i] == pred.data[i];
  return static_cast<double>(hits) / static_cast<double>(gt.size());
}

RealTensor oracle_crf(const RealTensor& probs, const RgbImage& image, const CrfParams& params) {
  const int channels = probs.channels;
  const int width = probs.width;
  const std::size_t n = probs.plane_size();
  auto q_at = [&](const std::vector<std::vector<double>>& q, std::size_t i, int l) { return q[i][l]; };

  std::vector<std::vector<double>> unary(n, std::vector<double>(channels));
  for (std::size_t i = 0; i < n; ++i) {
    for (int l = 0; l < channels; ++l) {
      unary[i][l] = -std::log(std::max(probs.data[l * n + i], kCrfProbabilityFloor));
    }
  }
  auto kernel = [&](std::size_t i, std::size_t j) {
    const double xi = static_cast<double>(i % width), yi = static_cast<double>(i / width);
    const double xj = static_cast<double>(j % width), yj = static_cast<double>(j / width);
    const double d2 = (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj);
    const std::uint8_t* ci = image.data.data() + 3 * i;
    const std::uint8_t* cj = image.data.data() + 3 * j;
    double c2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = static_cast<double>(ci[k]) - static_cast<double>(cj[k]);
      c2 += d * d;
    }
    const double smooth = params.w_smooth *
                          std::exp(-d2 / (2.0 * params.theta_gamma * params.theta_gamma));
    const double appearance =
        params.w_bilateral * std::exp(-d2 / (2.0 * params.theta_alpha * params.theta_alpha) -
                                      c2 / (2.0 * params.theta_beta * params.theta_beta));
    return smooth + appearance;
  };
  auto potts = [](int a, int b) { return a == b ? 0.0 : 1.0; };
  auto normalised = [&](const std::vector<double>& energy) {
    std::vector<double> out(channels);
    const double lo = *std::min_element(energy.begin(), energy.end());
    double z = 0.0;
    for (int l = 0; l < channels; ++l) {
      out[l] = std::exp(-(energy[l] - lo));
      z += out[l];
    }
    for (auto& v : out) v /= z;
    return out;
  };

  std::vector<std::vector<double>> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = normalised(unary[i]);

  for (int it = 0; it < params.iterations; ++it) {
    std::vector<std::vector<double>> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> energy = unary[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double k = kernel(i, j);
        for (int l = 0; l < channels; ++l) {
          double expected = 0.0;
          for (int m = 0; m < channels; ++m) expected += potts(l, m) * q_at(q, j, m);
          energy[l] += k * expected;
        }
      }
      next[i] = normalised(energy);
    }
    q = std::move(next);
  }

  RealTensor out(channels, probs.height, probs.width);
  for (std::size_t i = 0; i < n; ++i) {
    for (int l = 0; l < channels; ++l) out.data[l * n + i] = q[i][l];
  }
  return out;
}

PathPlan oracle_dijkstra(const Costmap& map, GridCell start, GridCell goal) {
  if (map.blocked(start.row, start.col)) throw Error(ErrorCode::kStartBlocked, "start blocked");
  if (map.blocked(goal.row, goal.col)) throw Error(ErrorCode::kGoalBlocked, "goal blocked");
  const std::size_t n = map.cell_costs.size();
  // Distances kept as (orthogonal sum, diagonal sum) pairs, compared by value.
  std::vector<double> orth(n, kBlocked), diag(n, 0.0);
  std::vector<bool> done(n, false);
  std::vector<long> parent(n, -1);
  auto value = [&](std::size_t v) { return orth[v] + diag[v] * std::sqrt(2.0); };
  const std::size_t s = map.index(start.row, start.col);
  const std::size_t t = map.index(goal.row, goal.col);
  orth[s] = 0.0;
  for (;;) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || std::isinf(orth[v])) continue;
      if (best == n || value(v) < value(best)) best = v;
    }
    if (best == n) break;
    done[best] = true;
    if (best == t) break;
    const int r = static_cast<int>(best) / map.width;
    const int c = static_cast<int>(best) % map.width;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if ((dr == 0 && dc == 0) || !map.in_bounds(r + dr, c + dc)) continue;
        const std::size_t v = map.index(r + dr, c + dc);
        if (done[v] || std::isinf(map.cell_costs[v])) continue;
        double o = orth[best], d = diag[best];
        if (dr != 0 && dc != 0) {
          d += map.cell_costs[v];
        } else {
          o += map.cell_costs[v];
        }
        if (o + d * std::sqrt(2.0) < value(v)) {
          orth[v] = o;
          diag[v] = d;
          parent[v] = static_cast<long>(best);
        }
      }
    }
  }
  if (!done[t]) throw Error(ErrorCode::kNoPath, "goal unreachable");
  PathPlan plan;
  for (long v = static_cast<long>(t); v >= 0; v = parent[v]) {
    plan.waypoints.push_back({static_cast<int>(v) / map.width, static_cast<int>(v) % map.width});
  }
  std::reverse(plan.waypoints.begin(), plan.waypoints.end());
  plan.total_cost = value(t);
  plan.blocked_cells_adjacent = count_adjacent_obstacles(map, plan.waypoints);
  return plan;
}

RealTensor oracle_fd_grad(const RealTensor& logits, const LabelMap& gt, const ClassSchema& schema,
                          double step, const LossOptions& options) {
  RealTensor grad(logits.channels, logits.height, logits.width);
  RealTensor probe = logits;
  for (std::size_t i = 0; i < logits.data.size(); ++i) {
    const double orig = probe.data[i];
    probe.data[i] = orig + step;
    const double up = combined_loss(probe, gt, schema, options).combined;
    probe.data[i] = orig - step;
    const double down = combined_loss(probe, gt, schema, options).combined;
    probe.data[i] = orig;
    grad.data[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double max_relative_error(const RealTensor& analytic, const RealTensor& numeric) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.data.size(); ++i) {
    diff = std::max(diff, std::abs(analytic.data[i] - numeric.data[i]));
    scale = std::max({scale, std::abs(analytic.data[i]), std::abs(numeric.data[i])});
  }
  return scale == 0.0 ? diff : diff / scale;
}

const std::vector<PublishedClassScore>& published_class_scores() {
  static const std::vector<PublishedClassScore> rows = {
      {"Sky", 98.2, 37.84},        {"Trees", 85.7, 4.07},     {"Dry Grass", 70.2, 19.31},
      {"Lush Bushes", 68.4, 6.01}, {"Landscape", 63.1, 23.72}, {"Flowers", 62.1, 2.44},
      {"Rocks", 53.2, 1.21},       {"Logs", 52.0, 0.07},       {"Dry Bushes", 51.1, 1.10},
      {"Ground Clutter", 40.2, 4.23},
  };
  return rows;
}

const std::vector<PublishedConfusedPair>& published_confused_pairs() {
  static const std::vector<PublishedConfusedPair> pairs = {
      {"Ground Clutter", "Landscape", 15.67},
      {"Dry Grass", "Landscape", 12.17},
      {"Dry Grass", "Ground Clutter", 7.18},
  };
  return pairs;
}

ConfusionAccumulator accumulator_with_ious(const std::vector<double>& ious, std::uint64_t errors) {
  const int c = static_cast<int>(ious.size());
  ConfusionAccumulator acc(c);
  // IoU_k = d_k / (d_k + FN_k + FP_k) with FN_k = FP_k = errors.
  for (int k = 0; k < c; ++k) {
    const double iou = ious[k];
    const double diag = 2.0 * static_cast<double>(errors) * iou / (1.0 - iou);
    acc.set_count(k, k, static_cast<std::uint64_t>(std::llround(diag)));
    acc.set_count(k, (k + 1) % c, errors);
  }
  return acc;
}

}  // namespace terraseg::oracle
