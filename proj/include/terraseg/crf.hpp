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

#include <json.hpp>

#include "terraseg/types.hpp"

namespace terraseg {

/// Which bilateral filtering engine crf_refine uses.
enum class CrfFilter {
  kAuto,     // exact up to exact_pixel_limit pixels, lattice above
  kExact,    // all-pairs, O(N^2) per iteration
  kLattice,  // permutohedral lattice, O(N) per iteration, approximate
};

struct CrfParams {
  int iterations = 5;
  double w_smooth = 3.0;
  double theta_gamma = 3.0;   // pixels
  double w_bilateral = 10.0;
  double theta_alpha = 80.0;  // pixels
  double theta_beta = 13.0;   // intensity units
  CrfFilter filter = CrfFilter::kAuto;
  std::size_t exact_pixel_limit = 4096;
};

void validate_crf_params(const CrfParams& params);
CrfParams crf_params_from_json(const nlohmann::json& doc);

/// Mean-field inference for a fully connected CRF with Potts compatibility:
/// unary -log(max(p, 1e-8)), pairwise w_smooth * spatial Gaussian plus
/// w_bilateral * position/colour Gaussian. Output rows sum to one.
RealTensor crf_refine(const RealTensor& probs, const RgbImage& image, const CrfParams& params);
ProbTensor crf_refine(const ProbTensor& probs, const RgbImage& image, const CrfParams& params);

inline constexpr double kCrfProbabilityFloor = 1e-8;

}  // namespace terraseg
