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

#include "terraseg/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "terraseg/class_schema.hpp"
#include "terraseg/error.hpp"

namespace terraseg {

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "empty integer range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return lo + static_cast<std::int64_t>(v % span);
}

void check_sample(const Sample& s) {
  if (s.image.width != s.mask.width || s.image.height != s.mask.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image " + std::to_string(s.image.width) + "x" + std::to_string(s.image.height) +
                    " vs mask " + std::to_string(s.mask.width) + "x" +
                    std::to_string(s.mask.height));
  }
}

Sample hflip(const Sample& s) {
  check_sample(s);
  Sample out = s;
  const int w = s.mask.width;
  for (int r = 0; r < s.mask.height; ++r) {
    for (int c = 0; c < w; ++c) {
      out.mask.at(r, c) = s.mask.at(r, w - 1 - c);
      const std::uint8_t* src = s.image.pixel(r, w - 1 - c);
      std::copy(src, src + 3, out.image.pixel(r, c));
    }
  }
  return out;
}

CropWindow sample_crop_window(int source_height, int source_width, ScaleRange range,
                              SeededRng& rng) {
  if (!(range.low > 0.0) || range.low > range.high) {
    throw Error(ErrorCode::kInvalidArgument, "scale range must satisfy 0 < low <= high");
  }
  const double scale = range.low + (range.high - range.low) * rng.uniform01();
  const double side = std::sqrt(scale);
  CropWindow w;
  w.height = std::min(source_height, static_cast<int>(std::lround(source_height * side)));
  w.width = std::min(source_width, static_cast<int>(std::lround(source_width * side)));
  if (w.height < 1 || w.width < 1) {
    throw Error(ErrorCode::kDegenerateWindow,
                "window " + std::to_string(w.width) + "x" + std::to_string(w.height));
  }
  w.top = static_cast<int>(rng.uniform_int(0, source_height - w.height));
  w.left = static_cast<int>(rng.uniform_int(0, source_width - w.width));
  return w;
}

Sample resample_window(const Sample& s, const CropWindow& window, int out_height,
                       int out_width) {
  check_sample(s);
  if (out_height <= 0 || out_width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "output size must be positive");
  }
  if (window.height < 1 || window.width < 1 || window.top < 0 || window.left < 0 ||
      window.top + window.height > s.mask.height || window.left + window.width > s.mask.width) {
    throw Error(ErrorCode::kDegenerateWindow, "window outside the source");
  }
  Sample out{RgbImage(out_width, out_height), LabelMap(out_width, out_height)};
  const double sy = static_cast<double>(window.height) / out_height;
  const double sx = static_cast<double>(window.width) / out_width;
  for (int r = 0; r < out_height; ++r) {
    const int nr = window.top + std::min(static_cast<int>((r + 0.5) * sy), window.height - 1);
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, window.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, window.height - 1);
    fy -= y0;
    for (int c = 0; c < out_width; ++c) {
      const int nc = window.left + std::min(static_cast<int>((c + 0.5) * sx), window.width - 1);
      out.mask.at(r, c) = s.mask.at(nr, nc);

      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, window.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, window.width - 1);
      fx -= x0;
      const std::uint8_t* p00 = s.image.pixel(window.top + y0, window.left + x0);
      const std::uint8_t* p01 = s.image.pixel(window.top + y0, window.left + x1);
      const std::uint8_t* p10 = s.image.pixel(window.top + y1, window.left + x0);
      const std::uint8_t* p11 = s.image.pixel(window.top + y1, window.left + x1);
      std::uint8_t* dst = out.image.pixel(r, c);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] + (p01[ch] - p00[ch]) * fx;
        const double bottom = p10[ch] + (p11[ch] - p10[ch]) * fx;
        dst[ch] = static_cast<std::uint8_t>(std::clamp(std::round(top + (bottom - top) * fy), 0.0, 255.0));
      }
    }
  }
  return out;
}

Sample random_resized_crop(const Sample& s, ScaleRange range, int out_height, int out_width,
                           std::uint64_t seed) {
  check_sample(s);
  SeededRng rng(seed);
  const CropWindow w = sample_crop_window(s.mask.height, s.mask.width, range, rng);
  return resample_window(s, w, out_height, out_width);
}

RealTensor normalize(const RgbImage& image, const std::array<double, 3>& mean,
                     const std::array<double, 3>& std) {
  for (double v : std) {
    if (v == 0.0) throw Error(ErrorCode::kZeroStd, "standard deviation component is zero");
  }
  RealTensor out(3, image.height, image.width);
  const std::size_t plane = out.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      out.data[c * plane + i] = (image.data[3 * i + c] / 255.0 - mean[c]) / std[c];
    }
  }
  return out;
}

CopyPasteConfig default_copy_paste_config() {
  CopyPasteConfig cfg;
  const auto& schema = ClassSchema::default_schema();
  for (const char* name : {"Dry Bushes", "Flowers", "Logs"}) {
    cfg.rare_classes.insert(*schema.index_of(name));
  }
  return cfg;
}

CopyPasteConfig copy_paste_config_from_json(const nlohmann::json& doc) {
  CopyPasteConfig cfg = default_copy_paste_config();
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "copy-paste config must be an object");
  try {
    if (doc.contains("rare_classes")) {
      cfg.rare_classes.clear();
      for (const auto& v : doc["rare_classes"]) cfg.rare_classes.insert(v.get<int>());
    }
    cfg.probability = doc.value("probability", cfg.probability);
    cfg.max_instances = doc.value("max_instances", cfg.max_instances);
    cfg.min_instance_pixels = doc.value("min_instance_pixels", cfg.min_instance_pixels);
    cfg.seed = doc.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("copy-paste config: ") + e.what());
  }
  if (!(cfg.probability >= 0.0 && cfg.probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "probability must lie in [0, 1]");
  }
  if (cfg.max_instances < 1 || cfg.min_instance_pixels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_instances and min_instance_pixels must be positive");
  }
  return cfg;
}

std::vector<Component> connected_components(const LabelMap& mask, const std::set<int>& classes) {
  const int h = mask.height;
  const int w = mask.width;
  std::vector<std::uint8_t> visited(mask.size(), 0);
  std::vector<Component> out;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto label = mask.at(r, c);
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      if (visited[idx] || !classes.contains(label)) continue;
      Component comp;
      comp.class_index = label;
      comp.top = comp.bottom = r;
      comp.left = comp.right = c;
      visited[idx] = 1;
      stack.assign(1, {r, c});
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        comp.pixels.emplace_back(y, x);
        comp.top = std::min(comp.top, y);
        comp.bottom = std::max(comp.bottom, y);
        comp.left = std::min(comp.left, x);
        comp.right = std::max(comp.right, x);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (visited[n] || mask.data[n] != label) continue;
            visited[n] = 1;
            stack.emplace_back(ny, nx);
          }
        }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end());
      out.push_back(std::move(comp));
    }
  }
  return out;
}

std::size_t paste_component(Sample& recipient, const Sample& donor, const Component& component,
                            int row_offset, int col_offset) {
  std::size_t written = 0;
  for (const auto& [r, c] : component.pixels) {
    const int tr = r + row_offset;
    const int tc = c + col_offset;
    if (tr < 0 || tr >= recipient.mask.height || tc < 0 || tc >= recipient.mask.width) continue;
    recipient.mask.at(tr, tc) = donor.mask.at(r, c);
    const std::uint8_t* src = donor.image.pixel(r, c);
    std::copy(src, src + 3, recipient.image.pixel(tr, tc));
    ++written;
  }
  return written;
}

CopyPasteResult copy_paste(const Sample& donor, const Sample& recipient,
                           const CopyPasteConfig& cfg) {
  check_sample(donor);
  check_sample(recipient);
  if (!(cfg.probability >= 0.0 && cfg.probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "probability must lie in [0, 1]");
  }
  SeededRng rng(cfg.seed);
  CopyPasteResult result{recipient, false, false, {}};
  if (!(rng.uniform01() < cfg.probability)) return result;
  result.triggered = true;

  std::vector<Component> candidates;
  for (auto& comp : connected_components(donor.mask, cfg.rare_classes)) {
    if (static_cast<int>(comp.pixels.size()) >= cfg.min_instance_pixels) {
      candidates.push_back(std::move(comp));
    }
  }
  if (candidates.empty()) {
    result.no_rare_instances = true;
    return result;
  }
  // Partial Fisher-Yates: the first `take` slots become a uniform subset.
  const std::size_t take = std::min<std::size_t>(cfg.max_instances, candidates.size());
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(order.size() - 1)));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < take; ++i) {
    const Component& comp = candidates[order[i]];
    // Place the bounding-box centre on a uniformly chosen recipient pixel.
    const int centre_row = static_cast<int>(rng.uniform_int(0, recipient.mask.height - 1));
    const int centre_col = static_cast<int>(rng.uniform_int(0, recipient.mask.width - 1));
    const int row_offset = centre_row - (comp.top + comp.bottom) / 2;
    const int col_offset = centre_col - (comp.left + comp.right) / 2;
    PasteRecord rec;
    rec.class_index = comp.class_index;
    rec.component_pixels = comp.pixels.size();
    rec.source_top = comp.top;
    rec.source_left = comp.left;
    rec.row_offset = row_offset;
    rec.col_offset = col_offset;
    rec.pasted_pixels = paste_component(result.sample, donor, comp, row_offset, col_offset);
    result.pastes.push_back(rec);
  }
  return result;
}

nlohmann::json copy_paste_to_json(const CopyPasteResult& result) {
  nlohmann::json pastes = nlohmann::json::array();
  for (const auto& p : result.pastes) {
    pastes.push_back({{"class_index", p.class_index},
                      {"component_pixels", p.component_pixels},
                      {"pasted_pixels", p.pasted_pixels},
                      {"source_top", p.source_top},
                      {"source_left", p.source_left},
                      {"row_offset", p.row_offset},
                      {"col_offset", p.col_offset}});
  }
  return {{"triggered", result.triggered},
          {"no_rare_instances", result.no_rare_instances},
          {"pastes", pastes}};
}

}  // namespace terraseg
