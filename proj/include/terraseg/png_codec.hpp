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
#include <span>
#include <vector>

namespace terraseg {

/// Decoded PNG samples. Palette images are expanded to RGB and low bit-depth
/// grayscale to 8 bits; 16-bit samples are stored big-endian, two bytes each.
struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 0;    // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 8;   // 8 or 16
  bool was_palette = false;
  std::vector<std::uint8_t> data;

  std::size_t row_bytes() const noexcept {
    return static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  }
};

/// Throws Error(kCorruptPng) on malformed input.
PngPixels decode_png(std::span<const std::uint8_t> bytes);

/// `channels` in {1, 3, 4}; `bit_depth` in {8, 16}. Compression settings are
/// fixed so that output bytes are reproducible.
std::vector<std::uint8_t> encode_png(const PngPixels& pixels);

}  // namespace terraseg
