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

// Brute-force reference implementations and published fixture tables. These
// favour obviousness over speed and are only linked by tests and the
// grad-check subcommand.

#include <string>
#include <vector>

#include "terraseg/class_schema.hpp"
#include "terraseg/costmap.hpp"
#include "terraseg/crf.hpp"
#include "terraseg/loss.hpp"
#include "terraseg/metrics.hpp"
#include "terraseg/types.hpp"

namespace terraseg::oracle {

/// Counts every (gt class, pred class) cell by scanning the whole image once
/// per cell.
ConfusionAccumulator oracle_confusion(const LabelMap& gt, const LabelMap& pred, int num_classes);

/// IoU of class c from explicit pixel-set intersection and union; -1 when the
/// union is empty.
double oracle_iou(const LabelMap& gt, const LabelMap& pred, int c);
double oracle_pixel_accuracy(const LabelMap& gt, const LabelMap& pred);

/// Mean-field inference with every pairwise message summed explicitly over
/// all ordered pixel pairs and a full Potts compatibility matrix.
RealTensor oracle_crf(const RealTensor& probs, const RgbImage& image, const CrfParams& params);

/// Dense O(V^2) Dijkstra without a priority queue.
PathPlan oracle_dijkstra(const Costmap& map, GridCell start, GridCell goal);

/// Central differences of combined_loss in double precision.
RealTensor oracle_fd_grad(const RealTensor& logits, const LabelMap& gt, const ClassSchema& schema,
                          double step, const LossOptions& options = {});

/// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|).
double max_relative_error(const RealTensor& analytic, const RealTensor& numeric);

struct PublishedClassScore {
  std::string name;
  double iou_percent;
  double pixel_percent;
};

/// Per-class validation IoU and pixel share, in the printed (IoU-descending)
/// order.
const std::vector<PublishedClassScore>& published_class_scores();
inline constexpr double kPublishedMiouAll = 64.4;
inline constexpr double kPublishedMiouExcludingSkyLandscape = 60.4;

struct PublishedConfusedPair {
  std::string class_a;
  std::string class_b;
  double million_pixels;
};

/// The three dominant confusion pathways, largest first.
const std::vector<PublishedConfusedPair>& published_confused_pairs();

/// Builds an accumulator whose per-class IoUs equal `ious` (to ~1e-7): class
/// c sends `errors` pixels to class c+1 (cyclically) and keeps just enough
/// diagonal mass to hit the target.
ConfusionAccumulator accumulator_with_ious(const std::vector<double>& ious,
                                           std::uint64_t errors = 1000000);

}  // namespace terraseg::oracle
