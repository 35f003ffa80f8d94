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

// Request-level operations shared by the command line and the HTTP service.
// Both front ends call these and serialise with canonical_dump, which is what
// keeps their outputs byte-identical.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "terraseg/class_schema.hpp"
#include "terraseg/costmap.hpp"
#include "terraseg/crf.hpp"
#include "terraseg/error.hpp"
#include "terraseg/loss.hpp"
#include "terraseg/metrics.hpp"
#include "terraseg/postprocess.hpp"

namespace terraseg::ops {

using ByteView = std::span<const std::uint8_t>;

/// Canonical JSON followed by a newline; the single serialisation point.
std::string render(const nlohmann::json& doc);

nlohmann::json error_json(ErrorCode code, const std::string& message);

/// Parses JSON text, reporting syntax errors as kInvalidArgument.
nlohmann::json parse_json(std::string_view text, const std::string& what);

// Metrics ---------------------------------------------------------------

struct FilePair {
  std::string first;
  std::string second;
};

/// PNG files in first_dir paired with the same filename in second_dir,
/// sorted by name.
std::vector<FilePair> match_pairs(const std::string& first_dir, const std::string& second_dir);

/// Splits the pairs into `workers` contiguous shards, accumulates each on
/// its own thread and merges the shards in order.
ConfusionAccumulator accumulate_files(const std::vector<FilePair>& pairs,
                                      const ClassSchema& schema, int workers);

ConfusionAccumulator accumulate_bytes(ByteView gt_png, ByteView pred_png,
                                      const ClassSchema& schema);

nlohmann::json metrics_json(const ConfusionAccumulator& acc, const ClassSchema& schema,
                            int top_k = 3);
std::string metrics_csv(const ConfusionAccumulator& acc, const ClassSchema& schema);
nlohmann::json confusions_json(const ConfusionAccumulator& acc, const ClassSchema& schema,
                               int top_k);

// Loss ------------------------------------------------------------------

/// Keys: lambda_ce, lambda_dice, epsilon, ce_normalisation (weighted_mean |
/// sum), dice_classes (present | all). Missing keys keep their defaults.
LossOptions loss_options_from_json(const nlohmann::json& doc);
nlohmann::json loss_json(ByteView logits_tst1, ByteView mask_png, const ClassSchema& schema,
                         const LossOptions& options);

// Post-processing -------------------------------------------------------

/// Keys: threshold, fraction_weight.
UncertaintyOptions uncertainty_options_from_json(const nlohmann::json& doc);

struct UncertaintyOutputs {
  nlohmann::json report;
  Bytes heatmap_png;
};
UncertaintyOutputs uncertainty_outputs(ByteView tensor_tst1, const UncertaintyOptions& options);

Bytes crf_tst1(ByteView probs_tst1, ByteView image_png, const CrfParams& params);

// Costmaps and planning -------------------------------------------------

struct CostmapRequest {
  TierCosts costs;
  std::optional<Homography> homography;
  int out_height = 0;  // 0: same as the mask
  int out_width = 0;
};

/// Keys: safe_cost, caution_cost, homography (9 numbers, row-major),
/// out_height, out_width.
CostmapRequest costmap_request_from_json(const nlohmann::json& doc);

struct CostmapOutputs {
  Bytes png;
  nlohmann::json sidecar;
};
CostmapOutputs costmap_outputs(ByteView mask_png, const ClassSchema& schema,
                               const CostmapRequest& request);

struct PlanRequest {
  GridCell start;
  GridCell goal;
  int clearance = 0;
  TierCosts costs;
};

/// Keys: start [row, col], goal [row, col], clearance, safe_cost,
/// caution_cost.
PlanRequest plan_request_from_json(const nlohmann::json& doc);
nlohmann::json plan_json(ByteView costmap_png, const PlanRequest& request);

}  // namespace terraseg::ops
