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
#include <string>
#include <vector>

#include "terraseg/class_schema.hpp"
#include "terraseg/types.hpp"

namespace terraseg {

using Bytes = std::vector<std::uint8_t>;

enum class MaskEncoding { kRawValues, kPaletteColor };

/// Maps an 8-bit grayscale annotation PNG to class indices. Pixels holding the
/// schema's ignore value become kIgnoreIndex.
LabelMap decode_mask(std::span<const std::uint8_t> png, const ClassSchema& schema);

Bytes encode_mask(const LabelMap& map, const ClassSchema& schema, MaskEncoding mode);

/// Accepts gray, gray+alpha, RGB, RGBA and palette PNGs (alpha discarded).
RgbImage decode_rgb(std::span<const std::uint8_t> png);
Bytes encode_rgb(const RgbImage& image);

/// Palette colours for every pixel; ignored pixels render black.
RgbImage colorize(const LabelMap& map, const ClassSchema& schema);

/// round((1 - alpha) * image + alpha * palette(map)), half away from zero.
RgbImage render_overlay(const RgbImage& image, const LabelMap& map,
                        const ClassSchema& schema, double alpha);

// TST1 tensor interchange: "TST1", u8 version, u8 kind, u16 reserved,
// u32 C, u32 H, u32 W, then C*H*W little-endian IEEE-754 binary32.
inline constexpr std::size_t kTensorHeaderBytes = 20;
inline constexpr std::uint8_t kTensorVersion = 1;

Bytes write_tensor(const ProbTensor& tensor);
ProbTensor read_tensor(std::span<const std::uint8_t> bytes);

/// Finite values everywhere; for probabilities also [0,1] entries and channel
/// sums within `tolerance` of 1 (NormalizationViolation otherwise).
void validate_tensor(const ProbTensor& tensor, double tolerance = 1e-4);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace terraseg
