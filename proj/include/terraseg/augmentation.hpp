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
#include <random>
#include <set>
#include <vector>

#include <json.hpp>

#include "terraseg/types.hpp"

namespace terraseg {

/// Platform-independent random source: the mt19937_64 bit stream is fixed by
/// the standard, and the mappings to reals/integers below are our own rather
/// than the implementation-defined std distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi], rejection-sampled to avoid modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

struct Sample {
  RgbImage image;
  LabelMap mask;

  friend bool operator==(const Sample&, const Sample&) = default;
};

void check_sample(const Sample& s);

/// Mirrors image and mask about the vertical axis.
Sample hflip(const Sample& s);

struct CropWindow {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

struct ScaleRange {
  double low = 0.5;
  double high = 2.0;
};

/// Window covering scale * source area (source aspect kept), clamped to the
/// source, at a uniformly drawn position.
CropWindow sample_crop_window(int source_height, int source_width, ScaleRange range,
                              SeededRng& rng);

/// Resamples `window` to out_height x out_width: image bilinear, mask nearest.
Sample resample_window(const Sample& s, const CropWindow& window, int out_height,
                       int out_width);

Sample random_resized_crop(const Sample& s, ScaleRange range, int out_height, int out_width,
                           std::uint64_t seed);

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

/// (pixel / 255 - mean) / std per channel, as a 3 x H x W tensor.
RealTensor normalize(const RgbImage& image, const std::array<double, 3>& mean = kImageNetMean,
                     const std::array<double, 3>& std = kImageNetStd);

struct CopyPasteConfig {
  std::set<int> rare_classes;
  double probability = 0.5;
  int max_instances = 3;
  int min_instance_pixels = 20;
  std::uint64_t seed = 0;
};

/// Rare classes named by the default schema: Dry Bushes, Flowers, Logs.
CopyPasteConfig default_copy_paste_config();
CopyPasteConfig copy_paste_config_from_json(const nlohmann::json& doc);

struct Component {
  int class_index = 0;
  std::vector<std::pair<int, int>> pixels;  // (row, col), scan order
  int top = 0, left = 0, bottom = 0, right = 0;  // inclusive bounding box
};

/// 8-connected components of the listed classes, ordered by first pixel in
/// row-major scan order.
std::vector<Component> connected_components(const LabelMap& mask, const std::set<int>& classes);

/// Copies the component's image pixels and labels into `recipient`, shifted by
/// (row_offset, col_offset); pixels landing outside are dropped. Returns the
/// number of pixels written.
std::size_t paste_component(Sample& recipient, const Sample& donor, const Component& component,
                            int row_offset, int col_offset);

struct PasteRecord {
  int class_index = 0;
  std::size_t component_pixels = 0;
  std::size_t pasted_pixels = 0;
  int source_top = 0;
  int source_left = 0;
  int row_offset = 0;
  int col_offset = 0;
};

struct CopyPasteResult {
  Sample sample;
  bool triggered = false;          // the probability draw succeeded
  bool no_rare_instances = false;  // triggered, but the donor had nothing to give
  std::vector<PasteRecord> pastes;
};

CopyPasteResult copy_paste(const Sample& donor, const Sample& recipient,
                           const CopyPasteConfig& cfg);

nlohmann::json copy_paste_to_json(const CopyPasteResult& result);

}  // namespace terraseg
