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

#include "terraseg/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "terraseg/error.hpp"
#include "terraseg/png_codec.hpp"

namespace terraseg {

LabelMap decode_mask(std::span<const std::uint8_t> png, const ClassSchema& schema) {
  const PngPixels px = decode_png(png);
  if (px.channels != 1 || px.bit_depth != 8 || px.was_palette) {
    throw Error(ErrorCode::kNotGrayscale,
                "expected 8-bit single-channel PNG, got " +
                    std::to_string(px.channels) + " channel(s) at " +
                    std::to_string(px.bit_depth) + " bits");
  }
  LabelMap map(px.width, px.height);
  for (std::size_t i = 0; i < px.data.size(); ++i) {
    const auto idx = schema.index_for_raw(px.data[i]);
    if (!idx) {
      const std::size_t row = i / px.width;
      const std::size_t col = i % px.width;
      throw Error(ErrorCode::kUnknownRawValue,
                  "raw value " + std::to_string(px.data[i]) + " at (" +
                      std::to_string(row) + ", " + std::to_string(col) + ")");
    }
    map.data[i] = *idx;
  }
  return map;
}

namespace {

void check_labels(const LabelMap& map, const ClassSchema& schema) {
  const int c = schema.num_classes();
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    const auto v = map.data[i];
    if (v == kIgnoreIndex && schema.ignore_value()) continue;
    if (v >= c) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "label " + std::to_string(v) + " at pixel " + std::to_string(i) +
                      " exceeds class count " + std::to_string(c));
    }
  }
}

}  // namespace

RgbImage colorize(const LabelMap& map, const ClassSchema& schema) {
  check_labels(map, schema);
  RgbImage out(map.width, map.height);
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    const auto v = map.data[i];
    if (v == kIgnoreIndex) continue;
    const Rgb c = schema.at(v).color;
    out.data[3 * i] = c.r;
    out.data[3 * i + 1] = c.g;
    out.data[3 * i + 2] = c.b;
  }
  return out;
}

Bytes encode_mask(const LabelMap& map, const ClassSchema& schema, MaskEncoding mode) {
  if (map.width <= 0 || map.height <= 0 || map.size() != static_cast<std::size_t>(map.width) * map.height) {
    throw Error(ErrorCode::kDimensionMismatch, "label map has inconsistent shape");
  }
  if (mode == MaskEncoding::kPaletteColor) return encode_rgb(colorize(map, schema));
  check_labels(map, schema);
  PngPixels px;
  px.width = map.width;
  px.height = map.height;
  px.channels = 1;
  px.data.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto v = map.data[i];
    px.data[i] = v == kIgnoreIndex ? *schema.ignore_value() : schema.at(v).raw_value;
  }
  return encode_png(px);
}

RgbImage decode_rgb(std::span<const std::uint8_t> png) {
  const PngPixels px = decode_png(png);
  RgbImage out(px.width, px.height);
  const int step = px.bit_depth / 8;
  const std::size_t n = static_cast<std::size_t>(px.width) * px.height;
  for (std::size_t i = 0; i < n; ++i) {
    // 16-bit samples keep their high byte.
    const std::uint8_t* s = px.data.data() + i * px.channels * step;
    if (px.channels <= 2) {
      out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = s[0];
    } else {
      out.data[3 * i] = s[0];
      out.data[3 * i + 1] = s[step];
      out.data[3 * i + 2] = s[2 * step];
    }
  }
  return out;
}

Bytes encode_rgb(const RgbImage& image) {
  PngPixels px;
  px.width = image.width;
  px.height = image.height;
  px.channels = 3;
  px.data = image.data;
  return encode_png(px);
}

RgbImage render_overlay(const RgbImage& image, const LabelMap& map,
                        const ClassSchema& schema, double alpha) {
  if (image.width != map.width || image.height != map.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                    " vs mask " + std::to_string(map.width) + "x" + std::to_string(map.height));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  const RgbImage palette = colorize(map, schema);
  RgbImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double v = (1.0 - alpha) * image.data[i] + alpha * palette.data[i];
    out.data[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
  return out;
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Bytes write_tensor(const ProbTensor& tensor) {
  const std::size_t expected =
      static_cast<std::size_t>(tensor.channels) * tensor.height * tensor.width;
  if (tensor.channels <= 0 || tensor.height <= 0 || tensor.width <= 0 ||
      tensor.data.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch, "tensor shape does not match payload");
  }
  Bytes out;
  out.reserve(kTensorHeaderBytes + 4 * expected);
  for (char ch : {'T', 'S', 'T', '1'}) out.push_back(static_cast<std::uint8_t>(ch));
  out.push_back(kTensorVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.kind));
  out.push_back(0);
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(tensor.channels));
  put_u32(out, static_cast<std::uint32_t>(tensor.height));
  put_u32(out, static_cast<std::uint32_t>(tensor.width));
  for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ProbTensor read_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "TST1", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a TST1 tensor");
  }
  if (bytes.size() < kTensorHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload, "header shorter than 20 bytes");
  }
  if (bytes[4] != kTensorVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "version " + std::to_string(bytes[4]));
  }
  if (bytes[5] > 1) {
    throw Error(ErrorCode::kInvalidArgument, "unknown tensor kind " + std::to_string(bytes[5]));
  }
  const std::uint64_t c = get_u32(bytes.data() + 8);
  const std::uint64_t h = get_u32(bytes.data() + 12);
  const std::uint64_t w = get_u32(bytes.data() + 16);
  if (c == 0 || h == 0 || w == 0 || c > 255 || h > (1u << 16) || w > (1u << 16)) {
    throw Error(ErrorCode::kShapeOverflow, "shape " + std::to_string(c) + "x" +
                                               std::to_string(h) + "x" + std::to_string(w));
  }
  const std::uint64_t count = c * h * w;
  if (count > (std::numeric_limits<std::size_t>::max() - kTensorHeaderBytes) / 4) {
    throw Error(ErrorCode::kShapeOverflow, "element count overflows");
  }
  if (bytes.size() != kTensorHeaderBytes + 4 * count) {
    throw Error(ErrorCode::kTruncatedPayload,
                "expected " + std::to_string(kTensorHeaderBytes + 4 * count) +
                    " bytes, got " + std::to_string(bytes.size()));
  }
  ProbTensor t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w),
               static_cast<TensorKind>(bytes[5]));
  const std::uint8_t* p = bytes.data() + kTensorHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    t.data[i] = std::bit_cast<float>(get_u32(p));
  }
  validate_tensor(t);
  return t;
}

void validate_tensor(const ProbTensor& tensor, double tolerance) {
  for (std::size_t i = 0; i < tensor.data.size(); ++i) {
    if (!std::isfinite(tensor.data[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "element " + std::to_string(i));
    }
  }
  if (tensor.kind != TensorKind::kProbabilities) return;
  const std::size_t plane = tensor.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int c = 0; c < tensor.channels; ++c) {
      const float v = tensor.data[c * plane + i];
      if (v < 0.0f || v > 1.0f) {
        throw Error(ErrorCode::kNormalizationViolation,
                    "probability " + std::to_string(v) + " at pixel " + std::to_string(i));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error(ErrorCode::kNormalizationViolation,
                  "channel sum " + std::to_string(sum) + " at pixel (" +
                      std::to_string(i / tensor.width) + ", " +
                      std::to_string(i % tensor.width) + ")");
    }
  }
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace terraseg
