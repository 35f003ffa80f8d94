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
#include <filesystem>
#include <string>
#include <vector>

#include "terraseg/augmentation.hpp"
#include "terraseg/class_schema.hpp"
#include "terraseg/costmap.hpp"
#include "terraseg/tensor_io.hpp"
#include "terraseg/types.hpp"

namespace terraseg::testing {

LabelMap random_mask(SeededRng& rng, int h, int w, int classes);
RgbImage random_image(SeededRng& rng, int h, int w);
ProbTensor random_logits(SeededRng& rng, int c, int h, int w, double scale = 3.0);
ProbTensor random_probs(SeededRng& rng, int c, int h, int w);
RealTensor random_real_probs(SeededRng& rng, int c, int h, int w);
LabelMap mask_from(int h, int w, const std::vector<int>& values);

/// Integer-cost random map: ~20% blocked, the rest safe (1) or caution (1..9).
Costmap random_costmap(SeededRng& rng, int h, int w);

/// The 2x2 metrics fixture: gt [0,0,1,1], pred [0,1,1,1].
LabelMap fixture_gt();
LabelMap fixture_pred();

/// Single-channel 8-bit PNG of raw values.
Bytes gray_png(int h, int w, const std::vector<std::uint8_t>& values);

std::string to_string(const Bytes& b);
Bytes to_bytes(const std::string& s);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace terraseg::testing
