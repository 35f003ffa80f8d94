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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace terraseg {

/// H x W grid of class indices, row-major, one byte per pixel.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::uint8_t& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // H x W x 3, interleaved

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* pixel(int row, int col) {
    return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  const std::uint8_t* pixel(int row, int col) const {
    return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

enum class TensorKind : std::uint8_t { kLogits = 0, kProbabilities = 1 };

/// C x H x W grid of 32-bit reals, class-major planes. `kind` tells whether
/// the values are raw logits or normalised probabilities.
struct ProbTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  TensorKind kind = TensorKind::kLogits;
  std::vector<float> data;

  ProbTensor() = default;
  ProbTensor(int c, int h, int w, TensorKind k, float fill = 0.0f)
      : channels(c), height(h), width(w), kind(k),
        data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height) * width;
  }
  std::span<float> plane(int c) {
    return {data.data() + c * plane_size(), plane_size()};
  }
  std::span<const float> plane(int c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }
  float& at(int c, int row, int col) {
    return data[c * plane_size() + static_cast<std::size_t>(row) * width + col];
  }
  float at(int c, int row, int col) const {
    return data[c * plane_size() + static_cast<std::size_t>(row) * width + col];
  }

  friend bool operator==(const ProbTensor&, const ProbTensor&) = default;
};

/// C x H x W grid of 64-bit reals. Loss evaluation and gradients run in this
/// precision regardless of the 32-bit interchange format.
struct RealTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  RealTensor() = default;
  RealTensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height) * width;
  }

  friend bool operator==(const RealTensor&, const RealTensor&) = default;
};

}  // namespace terraseg
