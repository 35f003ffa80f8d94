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

#include "terraseg/loss.hpp"

#include <algorithm>
#include <cmath>

#include "terraseg/error.hpp"

namespace terraseg {
namespace {

void check_shapes(const RealTensor& t, const LabelMap& gt) {
  if (t.height != gt.height || t.width != gt.width ||
      t.data.size() != static_cast<std::size_t>(t.channels) * t.height * t.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tensor " + std::to_string(t.width) + "x" + std::to_string(t.height) +
                    " vs mask " + std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
}

void check_label(std::uint8_t y, int channels, std::size_t pixel) {
  if (y >= channels) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "label " + std::to_string(y) + " at pixel " + std::to_string(pixel));
  }
}

/// Per-pixel softmax with max subtraction, class-major layout.
RealTensor softmax_planes(const RealTensor& logits) {
  RealTensor p(logits.channels, logits.height, logits.width);
  const std::size_t plane = logits.plane_size();
  const int c = logits.channels;
  for (std::size_t i = 0; i < plane; ++i) {
    double m = logits.data[i];
    for (int k = 1; k < c; ++k) m = std::max(m, logits.data[k * plane + i]);
    double z = 0.0;
    for (int k = 0; k < c; ++k) {
      const double e = std::exp(logits.data[k * plane + i] - m);
      p.data[k * plane + i] = e;
      z += e;
    }
    for (int k = 0; k < c; ++k) p.data[k * plane + i] /= z;
  }
  return p;
}

struct DiceTerms {
  std::vector<double> intersection;  // sum p*g
  std::vector<double> prob_mass;     // sum p
  std::vector<double> gt_mass;       // sum g
  std::vector<bool> averaged;
  int averaged_count = 0;
};

DiceTerms dice_terms(const RealTensor& probs, const LabelMap& gt, DiceClassMode mode) {
  const int c = probs.channels;
  const std::size_t plane = probs.plane_size();
  DiceTerms t{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0),
              std::vector<double>(c, 0.0), std::vector<bool>(c, false), 0};
  for (std::size_t i = 0; i < plane; ++i) {
    const auto y = gt.data[i];
    if (y == kIgnoreIndex) continue;
    check_label(y, c, i);
    t.gt_mass[y] += 1.0;
    t.intersection[y] += probs.data[y * plane + i];
    for (int k = 0; k < c; ++k) t.prob_mass[k] += probs.data[k * plane + i];
  }
  for (int k = 0; k < c; ++k) {
    t.averaged[k] = mode == DiceClassMode::kAll || t.gt_mass[k] > 0.0;
    if (t.averaged[k]) ++t.averaged_count;
  }
  if (t.averaged_count == 0) {
    throw Error(ErrorCode::kNoPresentClasses, "ground truth has no labelled pixels");
  }
  return t;
}

double dice_from_terms(const DiceTerms& t, double eps) {
  double sum = 0.0;
  for (std::size_t k = 0; k < t.averaged.size(); ++k) {
    if (!t.averaged[k]) continue;
    sum += (2.0 * t.intersection[k] + eps) / (t.prob_mass[k] + t.gt_mass[k] + eps);
  }
  return 1.0 - sum / t.averaged_count;
}

void check_weights(std::span<const double> weights, int channels) {
  if (static_cast<int>(weights.size()) != channels) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(weights.size()) + " weights for " + std::to_string(channels) +
                    " channels");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::kNonPositiveWeight, "loss weights must be positive");
  }
}

void require_logits(const ProbTensor& t) {
  if (t.kind != TensorKind::kLogits) {
    throw Error(ErrorCode::kInvalidArgument, "expected a logits tensor");
  }
}

}  // namespace

RealTensor to_real(const ProbTensor& t) {
  RealTensor r(t.channels, t.height, t.width);
  std::copy(t.data.begin(), t.data.end(), r.data.begin());
  return r;
}

double weighted_ce(const RealTensor& logits, const LabelMap& gt,
                   std::span<const double> weights, CeNormalisation norm) {
  check_shapes(logits, gt);
  check_weights(weights, logits.channels);
  const std::size_t plane = logits.plane_size();
  const int c = logits.channels;
  double loss = 0.0;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const auto y = gt.data[i];
    if (y == kIgnoreIndex) continue;
    check_label(y, c, i);
    double m = logits.data[i];
    for (int k = 1; k < c; ++k) m = std::max(m, logits.data[k * plane + i]);
    double z = 0.0;
    for (int k = 0; k < c; ++k) z += std::exp(logits.data[k * plane + i] - m);
    // -log softmax_y = log z + m - x_y
    const double nll = std::log(z) + m - logits.data[y * plane + i];
    loss += weights[y] * nll;
    weight_sum += weights[y];
  }
  if (weight_sum == 0.0) throw Error(ErrorCode::kAllPixelsIgnored, "every pixel is ignored");
  return norm == CeNormalisation::kWeightedMean ? loss / weight_sum : loss;
}

double weighted_ce(const ProbTensor& logits, const LabelMap& gt,
                   std::span<const double> weights, CeNormalisation norm) {
  require_logits(logits);
  return weighted_ce(to_real(logits), gt, weights, norm);
}

double soft_dice(const RealTensor& scores, bool scores_are_logits, const LabelMap& gt,
                 double epsilon, DiceClassMode mode) {
  check_shapes(scores, gt);
  if (scores_are_logits) {
    return dice_from_terms(dice_terms(softmax_planes(scores), gt, mode), epsilon);
  }
  return dice_from_terms(dice_terms(scores, gt, mode), epsilon);
}

double soft_dice(const ProbTensor& scores, const LabelMap& gt, double epsilon,
                 DiceClassMode mode) {
  return soft_dice(to_real(scores), scores.kind == TensorKind::kLogits, gt, epsilon, mode);
}

LossBreakdown combined_loss(const RealTensor& logits, const LabelMap& gt,
                            const ClassSchema& schema, const LossOptions& options) {
  const auto weights = schema.weights();
  LossBreakdown out;
  out.lambda_ce = options.lambda_ce;
  out.lambda_dice = options.lambda_dice;
  out.epsilon = options.epsilon;
  out.ce = weighted_ce(logits, gt, weights, options.ce_normalisation);
  out.dice = soft_dice(logits, true, gt, options.epsilon, options.dice_class_mode);
  out.combined = options.lambda_ce * out.ce + options.lambda_dice * out.dice;
  return out;
}

LossBreakdown combined_loss(const ProbTensor& logits, const LabelMap& gt,
                            const ClassSchema& schema, const LossOptions& options) {
  require_logits(logits);
  return combined_loss(to_real(logits), gt, schema, options);
}

LossBreakdown combined_loss_batch(std::span<const ProbTensor> logits,
                                  std::span<const LabelMap> gts, const ClassSchema& schema,
                                  const LossOptions& options) {
  if (logits.empty() || logits.size() != gts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "batch needs matching, non-empty logits and masks");
  }
  LossBreakdown out;
  out.lambda_ce = options.lambda_ce;
  out.lambda_dice = options.lambda_dice;
  out.epsilon = options.epsilon;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const auto item = combined_loss(logits[b], gts[b], schema, options);
    out.ce += item.ce;
    out.dice += item.dice;
  }
  const double n = static_cast<double>(logits.size());
  out.ce /= n;
  out.dice /= n;
  out.combined = options.lambda_ce * out.ce + options.lambda_dice * out.dice;
  return out;
}

RealTensor combined_loss_grad(const RealTensor& logits, const LabelMap& gt,
                              const ClassSchema& schema, const LossOptions& options) {
  check_shapes(logits, gt);
  const auto weights = schema.weights();
  check_weights(weights, logits.channels);
  const int c = logits.channels;
  const std::size_t plane = logits.plane_size();
  const RealTensor probs = softmax_planes(logits);

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const auto y = gt.data[i];
    if (y == kIgnoreIndex) continue;
    check_label(y, c, i);
    weight_sum += weights[y];
  }
  if (weight_sum == 0.0) throw Error(ErrorCode::kAllPixelsIgnored, "every pixel is ignored");
  const double ce_scale =
      options.ce_normalisation == CeNormalisation::kWeightedMean ? 1.0 / weight_sum : 1.0;

  const DiceTerms terms = dice_terms(probs, gt, options.dice_class_mode);
  // dL_dice/dp_{k,i} = -(1/n) * (2 g_{k,i} / D_k - (2 I_k + eps) / D_k^2)
  std::vector<double> denom(c), numer(c);
  for (int k = 0; k < c; ++k) {
    denom[k] = terms.prob_mass[k] + terms.gt_mass[k] + options.epsilon;
    numer[k] = 2.0 * terms.intersection[k] + options.epsilon;
  }
  const double inv_n = 1.0 / terms.averaged_count;

  RealTensor grad(c, logits.height, logits.width);
  std::vector<double> dp(c);
  for (std::size_t i = 0; i < plane; ++i) {
    const auto y = gt.data[i];
    if (y == kIgnoreIndex) continue;
    double dot = 0.0;
    for (int k = 0; k < c; ++k) {
      double d = 0.0;
      if (terms.averaged[k]) {
        const double g = (k == y) ? 1.0 : 0.0;
        d = -inv_n * (2.0 * g / denom[k] - numer[k] / (denom[k] * denom[k]));
      }
      dp[k] = d;
      dot += probs.data[k * plane + i] * d;
    }
    const double wy = weights[y] * ce_scale;
    for (int k = 0; k < c; ++k) {
      const double p = probs.data[k * plane + i];
      const double ce = wy * (p - (k == y ? 1.0 : 0.0));
      const double dice = p * (dp[k] - dot);
      grad.data[k * plane + i] = options.lambda_ce * ce + options.lambda_dice * dice;
    }
  }
  return grad;
}

RealTensor combined_loss_grad(const ProbTensor& logits, const LabelMap& gt,
                              const ClassSchema& schema, const LossOptions& options) {
  require_logits(logits);
  return combined_loss_grad(to_real(logits), gt, schema, options);
}

nlohmann::json loss_to_json(const LossBreakdown& loss) {
  return {{"ce", loss.ce},
          {"dice", loss.dice},
          {"combined", loss.combined},
          {"lambda_ce", loss.lambda_ce},
          {"lambda_dice", loss.lambda_dice},
          {"epsilon", loss.epsilon}};
}

}  // namespace terraseg
