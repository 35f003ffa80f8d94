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
#include <string>
#include <vector>

#include <json.hpp>

#include "terraseg/tensor_io.hpp"
#include "terraseg/types.hpp"

namespace terraseg {

/// Per-pixel softmax over channels (max-subtracted, computed in double).
ProbTensor softmax(const ProbTensor& logits);

/// Returns a probability tensor as-is after validation, or its softmax when
/// it holds logits.
ProbTensor as_probabilities(const ProbTensor& t);

/// Bilinear resize of every channel plane (half-pixel centres, edge clamp).
RealTensor resize_planes(const RealTensor& t, int out_height, int out_width);
ProbTensor hflip_planes(const ProbTensor& t);

// ---------------------------------------------------------------------------
// Test-time augmentation

struct ViewTransform {
  bool hflip = false;
  double scale = 1.0;
};

/// Size of the image fed to the model for a given view.
std::pair<int, int> view_size(int base_height, int base_width, double scale);

/// Forward transform applied to the input image: flip, then bilinear resize.
RgbImage apply_view(const RgbImage& image, const ViewTransform& view);

/// Maps a view's prediction (logits or probabilities, in view geometry) back
/// to base geometry as probabilities: softmax, resize, flip, renormalise.
RealTensor invert_view(const ProbTensor& prediction, const ViewTransform& view,
                       int base_height, int base_width);
/// Same, for a prediction already held as 64-bit probabilities.
RealTensor invert_view(const RealTensor& probabilities, const ViewTransform& view,
                       int base_height, int base_width);

struct TtaView {
  ViewTransform transform;
  ProbTensor prediction;
};

struct TtaRealView {
  ViewTransform transform;
  RealTensor probabilities;
};

/// The default view set: identity and h-flip at scales 0.75, 1.0 and 1.25.
std::vector<ViewTransform> default_tta_views();

/// Mean of the aligned probability maps, renormalised per pixel. The result
/// does not depend on the order of `views`.
ProbTensor tta_merge(std::span<const TtaView> views, int base_height, int base_width);
/// 64-bit variant; the float overload rounds this result once at the end.
RealTensor tta_merge(std::span<const TtaRealView> views, int base_height, int base_width);

// ---------------------------------------------------------------------------
// Uncertainty

struct UncertaintyOptions {
  double threshold = 0.5;        // on entropy / ln C
  double fraction_weight = 0.5;  // difficulty = w * uncertain + (1 - w) * (1 - confidence)
};

struct UncertaintyReport {
  double mean_confidence = 0.0;
  double uncertain_fraction = 0.0;
  double mean_entropy = 0.0;
  double difficulty = 0.0;
  double threshold = 0.5;
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<double> entropy_map;  // nats, row-major
};

UncertaintyReport uncertainty(const RealTensor& probs, const UncertaintyOptions& options = {});
UncertaintyReport uncertainty(const ProbTensor& probs, const UncertaintyOptions& options = {});

/// Grayscale PNG: 0 nats -> black, ln C -> white.
Bytes entropy_heatmap_png(const UncertaintyReport& report);

nlohmann::json uncertainty_to_json(const UncertaintyReport& report);

struct McAggregate {
  RealTensor mean_probs;
  UncertaintyReport predictive;
  std::vector<double> variance;  // per pixel: class-mean of across-sample variance
  double mean_variance = 0.0;
};

/// Streams the samples once with a running mean and variance (Welford).
McAggregate mc_aggregate(std::span<const ProbTensor> samples,
                         const UncertaintyOptions& options = {});

nlohmann::json mc_aggregate_to_json(const McAggregate& agg);

// ---------------------------------------------------------------------------
// Per-image difficulty ranking

struct DifficultyBands {
  double well_predicted_below = 0.15;
  double high_uncertainty_from = 0.30;
};

enum class DifficultyBand { kWellPredicted, kMiddle, kHighUncertainty };

struct RankedImage {
  std::string image_id;
  double difficulty = 0.0;
  double uncertain_fraction = 0.0;
  double mean_confidence = 0.0;
  DifficultyBand band = DifficultyBand::kMiddle;
};

struct DifficultyRanking {
  std::vector<RankedImage> images;  // hardest first, ties by image id
  std::size_t well_predicted = 0;
  std::size_t middle = 0;
  std::size_t high_uncertainty = 0;
  double global_mean_confidence = 0.0;
  double global_uncertain_fraction = 0.0;
};

DifficultyRanking rank_difficulty(
    const std::vector<std::pair<std::string, UncertaintyReport>>& reports,
    const DifficultyBands& bands = {});

nlohmann::json ranking_to_json(const DifficultyRanking& ranking);

}  // namespace terraseg
