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

#include <span>
#include <vector>

#include <json.hpp>

#include "terraseg/class_schema.hpp"
#include "terraseg/types.hpp"

namespace terraseg {

RealTensor to_real(const ProbTensor& t);

/// How the per-pixel weighted CE terms are reduced.
enum class CeNormalisation {
  kWeightedMean,  // sum(w_y * l) / sum(w_y)
  kSum,           // sum(w_y * l)
};

/// Which classes the Dice coefficient is averaged over.
enum class DiceClassMode {
  kPresent,  // classes occurring in the ground truth
  kAll,
};

struct LossOptions {
  double lambda_ce = 0.7;
  double lambda_dice = 0.3;
  double epsilon = 1e-6;
  CeNormalisation ce_normalisation = CeNormalisation::kWeightedMean;
  DiceClassMode dice_class_mode = DiceClassMode::kPresent;
};

struct LossBreakdown {
  double ce = 0.0;
  double dice = 0.0;
  double combined = 0.0;
  double lambda_ce = 0.7;
  double lambda_dice = 0.3;
  double epsilon = 1e-6;
};

double weighted_ce(const RealTensor& logits, const LabelMap& gt,
                   std::span<const double> weights,
                   CeNormalisation norm = CeNormalisation::kWeightedMean);
double weighted_ce(const ProbTensor& logits, const LabelMap& gt,
                   std::span<const double> weights,
                   CeNormalisation norm = CeNormalisation::kWeightedMean);

/// `scores_are_logits` selects whether a softmax is applied first.
double soft_dice(const RealTensor& scores, bool scores_are_logits, const LabelMap& gt,
                 double epsilon = 1e-6, DiceClassMode mode = DiceClassMode::kPresent);
double soft_dice(const ProbTensor& scores, const LabelMap& gt, double epsilon = 1e-6,
                 DiceClassMode mode = DiceClassMode::kPresent);

LossBreakdown combined_loss(const RealTensor& logits, const LabelMap& gt,
                            const ClassSchema& schema, const LossOptions& options = {});
LossBreakdown combined_loss(const ProbTensor& logits, const LabelMap& gt,
                            const ClassSchema& schema, const LossOptions& options = {});

/// Mean of per-item breakdowns (Dice stays image-level).
LossBreakdown combined_loss_batch(std::span<const ProbTensor> logits,
                                  std::span<const LabelMap> gts, const ClassSchema& schema,
                                  const LossOptions& options = {});

/// d(combined) / d(logit) for every channel and pixel.
RealTensor combined_loss_grad(const RealTensor& logits, const LabelMap& gt,
                              const ClassSchema& schema, const LossOptions& options = {});
RealTensor combined_loss_grad(const ProbTensor& logits, const LabelMap& gt,
                              const ClassSchema& schema, const LossOptions& options = {});

nlohmann::json loss_to_json(const LossBreakdown& loss);

}  // namespace terraseg
