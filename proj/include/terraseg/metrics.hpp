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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "terraseg/class_schema.hpp"
#include "terraseg/types.hpp"

namespace terraseg {

/// C x C pixel counts, row = ground truth, column = prediction. Accumulators
/// are single-writer; shard work by giving each worker its own accumulator and
/// merging at the end.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int num_classes);

  /// Single pass over the pixels. Ground-truth pixels equal to kIgnoreIndex
  /// are skipped.
  void accumulate(const LabelMap& gt, const LabelMap& pred);
  void merge(const ConfusionAccumulator& other);

  int num_classes() const noexcept { return classes_; }
  std::uint64_t pixels_seen() const noexcept { return pixels_seen_; }
  std::uint64_t count(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * classes_ + pred];
  }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  /// Overwrites one cell; keeps pixels_seen consistent. Meant for fixtures
  /// and for rebuilding accumulators from serialised counts.
  void set_count(int gt, int pred, std::uint64_t value);

  ConfusionAccumulator transposed() const;

  friend bool operator==(const ConfusionAccumulator&, const ConfusionAccumulator&) = default;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t pixels_seen_ = 0;
};

/// Free-function spelling of ConfusionAccumulator::accumulate.
ConfusionAccumulator accumulate(ConfusionAccumulator acc, const LabelMap& gt,
                                const LabelMap& pred);
ConfusionAccumulator merge(const ConfusionAccumulator& a, const ConfusionAccumulator& b);

struct ConfusedPair {
  int class_a = 0;  // smaller index
  int class_b = 0;
  std::uint64_t pixels = 0;  // counts[a][b] + counts[b][a]

  friend bool operator==(const ConfusedPair&, const ConfusedPair&) = default;
};

/// Unordered off-diagonal pairs ranked by symmetric confusion, ties broken by
/// (a, b) ascending.
std::vector<ConfusedPair> top_confusions(const ConfusionAccumulator& acc, int k);

/// A named set of classes left out of a mean IoU.
struct Exclusion {
  std::string name;
  std::vector<std::string> classes;
};

/// The {Sky, Landscape} exclusion reported alongside the all-class mean.
Exclusion dominant_class_exclusion();

struct MetricsReport {
  std::vector<std::optional<double>> per_class_iou;  // nullopt: zero union
  double miou_all = 0.0;
  std::map<std::string, double> miou_excluding;
  double pixel_accuracy = 0.0;
  std::vector<double> class_frequency;
  // nullopt rows belong to classes without ground-truth pixels.
  std::vector<std::optional<std::vector<double>>> confusion_row_normalised;
  std::vector<ConfusedPair> top_confusions;
};

/// Mean over present IoUs whose index is not in `excluded`. NaN when nothing
/// remains.
double mean_iou(std::span<const std::optional<double>> ious,
                std::span<const int> excluded = {});

MetricsReport finalize(const ConfusionAccumulator& acc, const ClassSchema& schema,
                       const std::vector<Exclusion>& exclusions = {dominant_class_exclusion()},
                       int top_k = 3);

nlohmann::json report_to_json(const MetricsReport& report, const ClassSchema& schema);
/// One row per class: index,name,iou,frequency,recall.
std::string report_to_csv(const MetricsReport& report, const ClassSchema& schema);

}  // namespace terraseg
