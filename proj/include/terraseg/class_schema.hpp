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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace terraseg {

enum class SafetyTier { kSafe, kCaution, kObstacle };

std::string_view tier_name(SafetyTier tier);
SafetyTier parse_tier(std::string_view name);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ClassDef {
  int index = 0;
  std::string name;
  std::uint8_t raw_value = 0;
  Rgb color;
  double weight = 1.0;
  SafetyTier tier = SafetyTier::kSafe;

  friend bool operator==(const ClassDef&, const ClassDef&) = default;
};

/// Label value used inside a LabelMap for pixels carrying the schema's
/// `ignore_value`. Schemas therefore hold at most 255 classes.
inline constexpr std::uint8_t kIgnoreIndex = 255;

/// Immutable class catalogue. Lookups by raw value and by name are O(1) /
/// O(C) respectively; instances are safe to share between threads.
class ClassSchema {
 public:
  /// Validates and takes ownership of `classes` (sorted by index).
  explicit ClassSchema(std::vector<ClassDef> classes,
                       std::optional<std::uint8_t> ignore_value = std::nullopt);

  /// The ten-class desert terrain catalogue.
  static const ClassSchema& default_schema();

  int num_classes() const noexcept { return static_cast<int>(classes_.size()); }
  const std::vector<ClassDef>& classes() const noexcept { return classes_; }
  const ClassDef& at(int index) const;
  std::optional<std::uint8_t> ignore_value() const noexcept { return ignore_value_; }

  /// Class index for a raw annotation value, kIgnoreIndex for the ignore
  /// value, nullopt when the value is unknown.
  std::optional<std::uint8_t> index_for_raw(std::uint8_t raw) const noexcept {
    const auto v = raw_to_index_[raw];
    if (v < 0) return std::nullopt;
    return static_cast<std::uint8_t>(v);
  }

  std::optional<int> index_of(std::string_view name) const;
  std::vector<double> weights() const;

  friend bool operator==(const ClassSchema& a, const ClassSchema& b) {
    return a.classes_ == b.classes_ && a.ignore_value_ == b.ignore_value_;
  }

 private:
  std::vector<ClassDef> classes_;
  std::optional<std::uint8_t> ignore_value_;
  std::array<int, 256> raw_to_index_{};
};

/// Parses `{"classes": [...], "ignore_value": n}`. Errors name the offending
/// entry.
ClassSchema load_schema(const nlohmann::json& document);
ClassSchema load_schema_text(std::string_view text);
/// Reads a schema file; an empty path yields the default schema.
ClassSchema load_schema_file(const std::string& path);

nlohmann::json schema_to_json(const ClassSchema& schema);

}  // namespace terraseg
