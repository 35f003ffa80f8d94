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

#include "cli/operations.hpp"

#include <algorithm>
#include <filesystem>
#include <thread>

#include "terraseg/canonical_json.hpp"
#include "terraseg/tensor_io.hpp"

namespace terraseg::ops {

namespace fs = std::filesystem;

std::string render(const nlohmann::json& doc) { return canonical_dump(doc) + "\n"; }

nlohmann::json error_json(ErrorCode code, const std::string& message) {
  const bool io = code == ErrorCode::kIo;
  return {{"error",
           {{"code", std::string(error_code_name(code))},
            {"category", io ? "io" : "validation"},
            {"message", message}}}};
}

nlohmann::json parse_json(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, what + ": " + e.what());
  }
}

namespace {

template <typename T>
T field(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

void require_object(const nlohmann::json& doc, const char* what) {
  if (!doc.is_null() && !doc.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a JSON object");
  }
}

GridCell cell_field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorCode::kMissingField, std::string("missing '") + key + "'");
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("'") + key + "' must be [row, col]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

std::vector<FilePair> match_pairs(const std::string& first_dir, const std::string& second_dir) {
  std::vector<FilePair> pairs;
  std::error_code ec;
  if (!fs::is_directory(first_dir, ec)) throw Error(ErrorCode::kIo, "not a directory: " + first_dir);
  if (!fs::is_directory(second_dir, ec)) throw Error(ErrorCode::kIo, "not a directory: " + second_dir);
  for (const auto& entry : fs::directory_iterator(first_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const fs::path other = fs::path(second_dir) / entry.path().filename();
    if (!fs::is_regular_file(other, ec)) {
      throw Error(ErrorCode::kIo,
                  "no counterpart in " + second_dir + " for " + entry.path().filename().string());
    }
    pairs.push_back({entry.path().string(), other.string()});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const FilePair& a, const FilePair& b) { return a.first < b.first; });
  if (pairs.empty()) throw Error(ErrorCode::kIo, "no PNG files in " + first_dir);
  return pairs;
}

ConfusionAccumulator accumulate_bytes(ByteView gt_png, ByteView pred_png,
                                      const ClassSchema& schema) {
  const LabelMap gt = decode_mask(gt_png, schema);
  const LabelMap pred = decode_mask(pred_png, schema);
  ConfusionAccumulator acc(schema.num_classes());
  acc.accumulate(gt, pred);
  return acc;
}

ConfusionAccumulator accumulate_files(const std::vector<FilePair>& pairs,
                                      const ClassSchema& schema, int workers) {
  if (workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  const std::size_t shards = std::min<std::size_t>(workers, std::max<std::size_t>(pairs.size(), 1));
  std::vector<ConfusionAccumulator> partial(shards, ConfusionAccumulator(schema.num_classes()));
  std::vector<std::exception_ptr> failures(shards);
  auto run = [&](std::size_t shard) {
    try {
      const std::size_t begin = pairs.size() * shard / shards;
      const std::size_t end = pairs.size() * (shard + 1) / shards;
      for (std::size_t i = begin; i < end; ++i) {
        partial[shard].merge(
            accumulate_bytes(read_file(pairs[i].first), read_file(pairs[i].second), schema));
      }
    } catch (...) {
      failures[shard] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t s = 1; s < shards; ++s) threads.emplace_back(run, s);
  run(0);
  for (auto& t : threads) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  ConfusionAccumulator total(schema.num_classes());
  for (const auto& p : partial) total.merge(p);
  return total;
}

nlohmann::json metrics_json(const ConfusionAccumulator& acc, const ClassSchema& schema,
                            int top_k) {
  return report_to_json(finalize(acc, schema, {dominant_class_exclusion()}, top_k), schema);
}

std::string metrics_csv(const ConfusionAccumulator& acc, const ClassSchema& schema) {
  return report_to_csv(finalize(acc, schema), schema);
}

nlohmann::json confusions_json(const ConfusionAccumulator& acc, const ClassSchema& schema,
                               int top_k) {
  const nlohmann::json report = metrics_json(acc, schema, top_k);
  nlohmann::json counts = nlohmann::json::array();
  for (int g = 0; g < acc.num_classes(); ++g) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < acc.num_classes(); ++p) row.push_back(acc.count(g, p));
    counts.push_back(std::move(row));
  }
  return {{"counts", std::move(counts)},
          {"row_normalised", report.at("confusion_row_normalised")},
          {"top_confusions", report.at("top_confusions")}};
}

LossOptions loss_options_from_json(const nlohmann::json& doc) {
  require_object(doc, "loss params");
  LossOptions o;
  if (doc.is_null()) return o;
  o.lambda_ce = field(doc, "lambda_ce", o.lambda_ce);
  o.lambda_dice = field(doc, "lambda_dice", o.lambda_dice);
  o.epsilon = field(doc, "epsilon", o.epsilon);
  const std::string norm = field<std::string>(doc, "ce_normalisation", "weighted_mean");
  if (norm == "weighted_mean") {
    o.ce_normalisation = CeNormalisation::kWeightedMean;
  } else if (norm == "sum") {
    o.ce_normalisation = CeNormalisation::kSum;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown ce_normalisation '" + norm + "'");
  }
  const std::string dice = field<std::string>(doc, "dice_classes", "present");
  if (dice == "present") {
    o.dice_class_mode = DiceClassMode::kPresent;
  } else if (dice == "all") {
    o.dice_class_mode = DiceClassMode::kAll;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown dice_classes '" + dice + "'");
  }
  return o;
}

nlohmann::json loss_json(ByteView logits_tst1, ByteView mask_png, const ClassSchema& schema,
                         const LossOptions& options) {
  const ProbTensor logits = read_tensor(logits_tst1);
  const LabelMap mask = decode_mask(mask_png, schema);
  return loss_to_json(combined_loss(logits, mask, schema, options));
}

UncertaintyOptions uncertainty_options_from_json(const nlohmann::json& doc) {
  require_object(doc, "uncertainty params");
  UncertaintyOptions o;
  if (doc.is_null()) return o;
  o.threshold = field(doc, "threshold", o.threshold);
  o.fraction_weight = field(doc, "fraction_weight", o.fraction_weight);
  return o;
}

UncertaintyOutputs uncertainty_outputs(ByteView tensor_tst1, const UncertaintyOptions& options) {
  const ProbTensor probs = as_probabilities(read_tensor(tensor_tst1));
  const UncertaintyReport report = uncertainty(probs, options);
  return {uncertainty_to_json(report), entropy_heatmap_png(report)};
}

Bytes crf_tst1(ByteView probs_tst1, ByteView image_png, const CrfParams& params) {
  const ProbTensor probs = as_probabilities(read_tensor(probs_tst1));
  const RgbImage image = decode_rgb(image_png);
  return write_tensor(crf_refine(probs, image, params));
}

CostmapRequest costmap_request_from_json(const nlohmann::json& doc) {
  require_object(doc, "costmap params");
  CostmapRequest r;
  if (doc.is_null()) return r;
  r.costs.safe = field(doc, "safe_cost", r.costs.safe);
  r.costs.caution = field(doc, "caution_cost", r.costs.caution);
  r.out_height = field(doc, "out_height", 0);
  r.out_width = field(doc, "out_width", 0);
  if (doc.contains("homography")) {
    const auto& h = doc.at("homography");
    if (!h.is_array() || h.size() != 9) {
      throw Error(ErrorCode::kInvalidArgument, "homography must hold 9 numbers");
    }
    Homography m{};
    for (std::size_t i = 0; i < 9; ++i) {
      if (!h[i].is_number()) throw Error(ErrorCode::kInvalidArgument, "homography must hold 9 numbers");
      m[i] = h[i].get<double>();
    }
    r.homography = m;
  }
  return r;
}

CostmapOutputs costmap_outputs(ByteView mask_png, const ClassSchema& schema,
                               const CostmapRequest& request) {
  validate_tier_costs(request.costs);
  const LabelMap mask = decode_mask(mask_png, schema);
  Costmap map = to_costmap(mask, schema, request.costs);
  if (request.homography || request.out_height > 0 || request.out_width > 0) {
    const int h = request.out_height > 0 ? request.out_height : map.height;
    const int w = request.out_width > 0 ? request.out_width : map.width;
    map = project_ground(map, request.homography.value_or(kIdentityHomography), h, w);
  }
  return {costmap_to_png(map), costmap_sidecar_json(map, schema, request.homography)};
}

PlanRequest plan_request_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "plan request must be an object");
  PlanRequest r;
  r.start = cell_field(doc, "start");
  r.goal = cell_field(doc, "goal");
  r.clearance = field(doc, "clearance", 0);
  r.costs.safe = field(doc, "safe_cost", r.costs.safe);
  r.costs.caution = field(doc, "caution_cost", r.costs.caution);
  if (r.clearance < 0) throw Error(ErrorCode::kInvalidArgument, "clearance must be >= 0");
  return r;
}

nlohmann::json plan_json(ByteView costmap_png, const PlanRequest& request) {
  validate_tier_costs(request.costs);
  const Costmap map = costmap_from_png(costmap_png, request.costs);
  PathPlan plan = plan_path(map, request.start, request.goal);
  if (request.clearance > 0) plan = suggest_waypoints(plan, map, request.clearance);
  return plan_to_json(plan);
}

}  // namespace terraseg::ops
