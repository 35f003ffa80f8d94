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

#include "support/test_support.hpp"

#include <atomic>
#include <unistd.h>

#include "terraseg/png_codec.hpp"

namespace terraseg::testing {

LabelMap random_mask(SeededRng& rng, int h, int w, int classes) {
  LabelMap m(w, h);
  for (auto& v : m.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
  return m;
}

RgbImage random_image(SeededRng& rng, int h, int w) {
  RgbImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

ProbTensor random_logits(SeededRng& rng, int c, int h, int w, double scale) {
  ProbTensor t(c, h, w, TensorKind::kLogits);
  for (auto& v : t.data) v = static_cast<float>((rng.uniform01() * 2.0 - 1.0) * scale);
  return t;
}

ProbTensor random_probs(SeededRng& rng, int c, int h, int w) {
  const RealTensor r = random_real_probs(rng, c, h, w);
  ProbTensor t(c, h, w, TensorKind::kProbabilities);
  for (std::size_t i = 0; i < r.data.size(); ++i) t.data[i] = static_cast<float>(r.data[i]);
  return t;
}

RealTensor random_real_probs(SeededRng& rng, int c, int h, int w) {
  RealTensor t(c, h, w);
  const std::size_t n = t.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) {
      const double v = 0.05 + rng.uniform01();
      t.data[k * n + i] = v;
      sum += v;
    }
    for (int k = 0; k < c; ++k) t.data[k * n + i] /= sum;
  }
  return t;
}

LabelMap mask_from(int h, int w, const std::vector<int>& values) {
  LabelMap m(w, h);
  for (std::size_t i = 0; i < values.size(); ++i) m.data[i] = static_cast<std::uint8_t>(values[i]);
  return m;
}

Costmap random_costmap(SeededRng& rng, int h, int w) {
  Costmap map(w, h, TierCosts{1.0, 10.0});
  for (std::size_t i = 0; i < map.cell_costs.size(); ++i) {
    const double u = rng.uniform01();
    if (u < 0.2) {
      map.cell_costs[i] = kBlocked;
      map.tiers[i] = SafetyTier::kObstacle;
    } else if (u < 0.6) {
      map.cell_costs[i] = 1.0;
      map.tiers[i] = SafetyTier::kSafe;
    } else {
      map.cell_costs[i] = static_cast<double>(rng.uniform_int(1, 9));
      map.tiers[i] = SafetyTier::kCaution;
    }
  }
  return map;
}

LabelMap fixture_gt() { return mask_from(2, 2, {0, 0, 1, 1}); }
LabelMap fixture_pred() { return mask_from(2, 2, {0, 1, 1, 1}); }

Bytes gray_png(int h, int w, const std::vector<std::uint8_t>& values) {
  PngPixels px;
  px.width = w;
  px.height = h;
  px.channels = 1;
  px.bit_depth = 8;
  px.data = values;
  return encode_png(px);
}

std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }
Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("terraseg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace terraseg::testing
