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

#include "terraseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "terraseg/error.hpp"

namespace terraseg {

ConfusionAccumulator::ConfusionAccumulator(int num_classes)
    : classes_(num_classes),
      counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes <= 0 || num_classes >= kIgnoreIndex) {
    throw Error(ErrorCode::kInvalidArgument, "class count must be in [1, 254]");
  }
}

void ConfusionAccumulator::accumulate(const LabelMap& gt, const LabelMap& pred) {
  if (gt.width != pred.width || gt.height != pred.height || gt.size() != pred.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "gt " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                    " vs pred " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height));
  }
  const std::size_t n = gt.size();
  const std::uint8_t* g = gt.data.data();
  const std::uint8_t* p = pred.data.data();
  const unsigned c = static_cast<unsigned>(classes_);
  std::uint64_t* counts = counts_.data();
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned gi = g[i];
    const unsigned pi = p[i];
    if (gi == kIgnoreIndex) continue;
    if (gi >= c || pi >= c) [[unlikely]] {
      // Leave the accumulator as it was before this call.
      for (std::size_t j = 0; j < i; ++j) {
        if (g[j] != kIgnoreIndex) --counts[g[j] * c + p[j]];
      }
      throw Error(ErrorCode::kIndexOutOfRange,
                  "label pair (" + std::to_string(gi) + ", " + std::to_string(pi) +
                      ") at pixel " + std::to_string(i));
    }
    ++counts[gi * c + pi];
    ++seen;
  }
  pixels_seen_ += seen;
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.classes_ != classes_) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot merge accumulators of different class counts");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  pixels_seen_ += other.pixels_seen_;
}

void ConfusionAccumulator::set_count(int gt, int pred, std::uint64_t value) {
  if (gt < 0 || gt >= classes_ || pred < 0 || pred >= classes_) {
    throw Error(ErrorCode::kIndexOutOfRange, "cell outside the confusion matrix");
  }
  auto& cell = counts_[static_cast<std::size_t>(gt) * classes_ + pred];
  pixels_seen_ = pixels_seen_ - cell + value;
  cell = value;
}

ConfusionAccumulator ConfusionAccumulator::transposed() const {
  ConfusionAccumulator t(classes_);
  for (int g = 0; g < classes_; ++g) {
    for (int p = 0; p < classes_; ++p) {
      t.counts_[static_cast<std::size_t>(p) * classes_ + g] = count(g, p);
    }
  }
  t.pixels_seen_ = pixels_seen_;
  return t;
}

ConfusionAccumulator accumulate(ConfusionAccumulator acc, const LabelMap& gt,
                                const LabelMap& pred) {
  acc.accumulate(gt, pred);
  return acc;
}

ConfusionAccumulator merge(const ConfusionAccumulator& a, const ConfusionAccumulator& b) {
  ConfusionAccumulator out = a;
  out.merge(b);
  return out;
}

std::vector<ConfusedPair> top_confusions(const ConfusionAccumulator& acc, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const int c = acc.num_classes();
  std::vector<ConfusedPair> pairs;
  pairs.reserve(static_cast<std::size_t>(c) * (c - 1) / 2);
  for (int a = 0; a < c; ++a) {
    for (int b = a + 1; b < c; ++b) {
      pairs.push_back({a, b, acc.count(a, b) + acc.count(b, a)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const ConfusedPair& x, const ConfusedPair& y) {
    return x.pixels > y.pixels;
  });
  if (pairs.size() > static_cast<std::size_t>(k)) pairs.resize(k);
  return pairs;
}

Exclusion dominant_class_exclusion() { return {"Sky+Landscape", {"Sky", "Landscape"}}; }

double mean_iou(std::span<const std::optional<double>> ious, std::span<const int> excluded) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t c = 0; c < ious.size(); ++c) {
    if (!ious[c]) continue;
    if (std::find(excluded.begin(), excluded.end(), static_cast<int>(c)) != excluded.end()) {
      continue;
    }
    sum += *ious[c];
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

MetricsReport finalize(const ConfusionAccumulator& acc, const ClassSchema& schema,
                       const std::vector<Exclusion>& exclusions, int top_k) {
  if (acc.pixels_seen() == 0) {
    throw Error(ErrorCode::kEmptyAccumulator, "no pixels accumulated");
  }
  const int c = acc.num_classes();
  if (c != schema.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "accumulator has " + std::to_string(c) + " classes, schema " +
                    std::to_string(schema.num_classes()));
  }
  std::vector<std::uint64_t> row(c, 0), col(c, 0);
  std::uint64_t trace = 0;
  for (int g = 0; g < c; ++g) {
    for (int p = 0; p < c; ++p) {
      row[g] += acc.count(g, p);
      col[p] += acc.count(g, p);
    }
    trace += acc.count(g, g);
  }
  const double total = static_cast<double>(acc.pixels_seen());

  MetricsReport report;
  report.per_class_iou.resize(c);
  report.class_frequency.resize(c);
  report.confusion_row_normalised.resize(c);
  for (int k = 0; k < c; ++k) {
    const std::uint64_t inter = acc.count(k, k);
    const std::uint64_t uni = row[k] + col[k] - inter;
    if (uni > 0) report.per_class_iou[k] = static_cast<double>(inter) / static_cast<double>(uni);
    report.class_frequency[k] = static_cast<double>(row[k]) / total;
    if (row[k] > 0) {
      std::vector<double> r(c);
      for (int p = 0; p < c; ++p) {
        r[p] = static_cast<double>(acc.count(k, p)) / static_cast<double>(row[k]);
      }
      report.confusion_row_normalised[k] = std::move(r);
    }
  }
  report.miou_all = mean_iou(report.per_class_iou);
  for (const auto& ex : exclusions) {
    std::vector<int> idx;
    for (const auto& name : ex.classes) {
      const auto i = schema.index_of(name);
      if (!i) throw Error(ErrorCode::kInvalidArgument, "unknown class '" + name + "' in exclusion");
      idx.push_back(*i);
    }
    report.miou_excluding[ex.name] = mean_iou(report.per_class_iou, idx);
  }
  report.pixel_accuracy = static_cast<double>(trace) / total;
  report.top_confusions = top_confusions(acc, top_k);
  return report;
}

nlohmann::json report_to_json(const MetricsReport& report, const ClassSchema& schema) {
  using nlohmann::json;
  auto real_or_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json ious = json::array();
  for (const auto& v : report.per_class_iou) ious.push_back(v ? json(*v) : json(nullptr));
  json excl = json::object();
  for (const auto& [name, v] : report.miou_excluding) excl[name] = real_or_null(v);
  json rows = json::array();
  for (const auto& r : report.confusion_row_normalised) rows.push_back(r ? json(*r) : json(nullptr));
  json top = json::array();
  for (const auto& p : report.top_confusions) {
    top.push_back({{"class_a", schema.at(p.class_a).name},
                   {"class_b", schema.at(p.class_b).name},
                   {"pixels", p.pixels}});
  }
  return {{"per_class_iou", ious},
          {"miou_all", real_or_null(report.miou_all)},
          {"miou_excluding", excl},
          {"pixel_accuracy", report.pixel_accuracy},
          {"class_frequency", report.class_frequency},
          {"confusion_row_normalised", rows},
          {"top_confusions", top}};
}

std::string report_to_csv(const MetricsReport& report, const ClassSchema& schema) {
  std::ostringstream out;
  out.precision(7);
  out << "index,name,iou,frequency,recall\n";
  for (int c = 0; c < schema.num_classes(); ++c) {
    out << c << ',' << schema.at(c).name << ',';
    if (report.per_class_iou[c]) out << *report.per_class_iou[c];
    out << ',' << report.class_frequency[c] << ',';
    if (report.confusion_row_normalised[c]) out << (*report.confusion_row_normalised[c])[c];
    out << '\n';
  }
  return out.str();
}

}  // namespace terraseg
