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

#include "terraseg/class_schema.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "terraseg/error.hpp"

namespace terraseg {

std::string_view tier_name(SafetyTier tier) {
  switch (tier) {
    case SafetyTier::kSafe: return "Safe";
    case SafetyTier::kCaution: return "Caution";
    case SafetyTier::kObstacle: return "Obstacle";
  }
  return "Safe";
}

SafetyTier parse_tier(std::string_view name) {
  if (name == "Safe") return SafetyTier::kSafe;
  if (name == "Caution") return SafetyTier::kCaution;
  if (name == "Obstacle") return SafetyTier::kObstacle;
  throw Error(ErrorCode::kInvalidSchema,
              "unknown safety tier '" + std::string(name) + "'");
}

ClassSchema::ClassSchema(std::vector<ClassDef> classes,
                         std::optional<std::uint8_t> ignore_value)
    : classes_(std::move(classes)), ignore_value_(ignore_value) {
  if (classes_.empty()) {
    throw Error(ErrorCode::kInvalidSchema, "schema has no classes");
  }
  if (classes_.size() > kIgnoreIndex) {
    throw Error(ErrorCode::kInvalidSchema, "at most 255 classes supported");
  }
  raw_to_index_.fill(-1);
  std::vector<bool> seen_index(classes_.size(), false);
  for (const auto& c : classes_) {
    if (c.index < 0 || c.index >= static_cast<int>(classes_.size())) {
      throw Error(ErrorCode::kDuplicateIndex,
                  "class '" + c.name + "' has index " + std::to_string(c.index) +
                      " outside [0, " + std::to_string(classes_.size()) + ")");
    }
    if (seen_index[c.index]) {
      throw Error(ErrorCode::kDuplicateIndex,
                  "class '" + c.name + "' reuses index " + std::to_string(c.index));
    }
    seen_index[c.index] = true;
    if (!(c.weight > 0.0)) {
      throw Error(ErrorCode::kNonPositiveWeight,
                  "class '" + c.name + "' has weight " + std::to_string(c.weight));
    }
    if (raw_to_index_[c.raw_value] >= 0) {
      throw Error(ErrorCode::kDuplicateRawValue,
                  "class '" + c.name + "' reuses raw value " +
                      std::to_string(c.raw_value));
    }
    raw_to_index_[c.raw_value] = c.index;
  }
  if (ignore_value_) {
    if (raw_to_index_[*ignore_value_] >= 0) {
      throw Error(ErrorCode::kDuplicateRawValue,
                  "ignore_value " + std::to_string(*ignore_value_) +
                      " collides with a class raw value");
    }
    raw_to_index_[*ignore_value_] = kIgnoreIndex;
  }
  std::sort(classes_.begin(), classes_.end(),
            [](const ClassDef& a, const ClassDef& b) { return a.index < b.index; });
}

const ClassSchema& ClassSchema::default_schema() {
  // Raw values step by 10 from 100 (Trees). Tiers follow the navigation
  // safety grouping; weights counter the pixel-frequency imbalance.
  static const ClassSchema schema({
      {0, "Trees", 100, {34, 139, 34}, 1.0, SafetyTier::kObstacle},
      {1, "Lush Bushes", 110, {0, 200, 0}, 3.5, SafetyTier::kCaution},
      {2, "Dry Grass", 120, {210, 180, 140}, 1.2, SafetyTier::kSafe},
      {3, "Dry Bushes", 130, {139, 90, 43}, 1.3, SafetyTier::kObstacle},
      {4, "Ground Clutter", 140, {128, 128, 0}, 2.5, SafetyTier::kCaution},
      {5, "Flowers", 150, {255, 105, 180}, 4.5, SafetyTier::kCaution},
      {6, "Logs", 160, {101, 67, 33}, 5.0, SafetyTier::kObstacle},
      {7, "Rocks", 170, {128, 128, 128}, 2.0, SafetyTier::kObstacle},
      {8, "Landscape", 180, {244, 164, 96}, 0.6, SafetyTier::kSafe},
      {9, "Sky", 190, {135, 206, 235}, 0.4, SafetyTier::kSafe},
  });
  return schema;
}

const ClassDef& ClassSchema::at(int index) const {
  if (index < 0 || index >= num_classes()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "class index " + std::to_string(index) + " not in schema");
  }
  return classes_[index];
}

std::optional<int> ClassSchema::index_of(std::string_view name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return c.index;
  }
  return std::nullopt;
}

std::vector<double> ClassSchema::weights() const {
  std::vector<double> w;
  w.reserve(classes_.size());
  for (const auto& c : classes_) w.push_back(c.weight);
  return w;
}

namespace {

const nlohmann::json& require(const nlohmann::json& entry, const char* key,
                              std::size_t position) {
  if (!entry.is_object() || !entry.contains(key)) {
    std::string who = "entry #" + std::to_string(position);
    if (entry.is_object() && entry.contains("name") && entry["name"].is_string()) {
      who += " ('" + entry["name"].get<std::string>() + "')";
    }
    throw Error(ErrorCode::kMissingField, who + " lacks field '" + key + "'");
  }
  return entry[key];
}

std::uint8_t to_byte(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 255) {
    throw Error(ErrorCode::kInvalidSchema, what + " must be an integer in [0, 255]");
  }
  return static_cast<std::uint8_t>(v.get<int>());
}

}  // namespace

ClassSchema load_schema(const nlohmann::json& document) {
  if (!document.is_object() || !document.contains("classes") ||
      !document["classes"].is_array()) {
    throw Error(ErrorCode::kMissingField, "document lacks a 'classes' list");
  }
  std::vector<ClassDef> classes;
  std::size_t position = 0;
  for (const auto& entry : document["classes"]) {
    ClassDef c;
    const auto& name = require(entry, "name", position);
    if (!name.is_string()) {
      throw Error(ErrorCode::kInvalidSchema,
                  "entry #" + std::to_string(position) + " name must be text");
    }
    c.name = name.get<std::string>();
    const std::string who = "class '" + c.name + "'";
    const auto& index = require(entry, "index", position);
    if (!index.is_number_integer()) {
      throw Error(ErrorCode::kInvalidSchema, who + " index must be an integer");
    }
    c.index = index.get<int>();
    c.raw_value = to_byte(require(entry, "raw_value", position), who + " raw_value");
    const auto& color = require(entry, "color", position);
    if (!color.is_array() || color.size() != 3) {
      throw Error(ErrorCode::kInvalidSchema, who + " color must be [r, g, b]");
    }
    c.color = {to_byte(color[0], who + " color"), to_byte(color[1], who + " color"),
               to_byte(color[2], who + " color")};
    const auto& weight = require(entry, "weight", position);
    if (!weight.is_number()) {
      throw Error(ErrorCode::kInvalidSchema, who + " weight must be a number");
    }
    c.weight = weight.get<double>();
    const auto& tier = require(entry, "tier", position);
    if (!tier.is_string()) {
      throw Error(ErrorCode::kInvalidSchema, who + " tier must be text");
    }
    c.tier = parse_tier(tier.get<std::string>());
    classes.push_back(std::move(c));
    ++position;
  }
  std::optional<std::uint8_t> ignore;
  if (document.contains("ignore_value") && !document["ignore_value"].is_null()) {
    ignore = to_byte(document["ignore_value"], "ignore_value");
  }
  return ClassSchema(std::move(classes), ignore);
}

ClassSchema load_schema_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("malformed JSON: ") + e.what());
  }
  return load_schema(doc);
}

ClassSchema load_schema_file(const std::string& path) {
  if (path.empty()) return ClassSchema::default_schema();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_schema_text(buffer.str());
}

nlohmann::json schema_to_json(const ClassSchema& schema) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : schema.classes()) {
    classes.push_back({{"index", c.index},
                       {"name", c.name},
                       {"raw_value", c.raw_value},
                       {"color", {c.color.r, c.color.g, c.color.b}},
                       {"weight", c.weight},
                       {"tier", tier_name(c.tier)}});
  }
  nlohmann::json doc = {{"classes", classes}};
  if (schema.ignore_value()) doc["ignore_value"] = *schema.ignore_value();
  return doc;
}

}  // namespace terraseg
