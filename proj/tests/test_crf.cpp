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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles/oracles.hpp"
#include "support/test_support.hpp"
#include "terraseg/crf.hpp"
#include "terraseg/error.hpp"

namespace terraseg {
namespace {

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

int argmax(const RealTensor& t, std::size_t pixel) {
  const std::size_t n = t.plane_size();
  int best = 0;
  for (int c = 1; c < t.channels; ++c) {
    if (t.data[c * n + pixel] > t.data[best * n + pixel]) best = c;
  }
  return best;
}

// 3x3 uniform image; border pixels favour class 0 at 0.9, the centre at 0.4.
RealTensor centre_flip_probs() {
  RealTensor p(2, 3, 3);
  for (std::size_t i = 0; i < 9; ++i) {
    const double a = i == 4 ? 0.4 : 0.9;
    p.data[i] = a;
    p.data[9 + i] = 1.0 - a;
  }
  return p;
}

CrfParams strong_smoothing() {
  CrfParams params;
  params.w_smooth = 5.0;
  params.theta_gamma = 2.0;
  params.w_bilateral = 0.0;
  params.iterations = 5;
  return params;
}

TEST(Crf, ZeroPairwiseIsIdentity) {
  SeededRng rng(1);
  CrfParams params;
  params.w_smooth = 0.0;
  params.w_bilateral = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const RealTensor p = testing::random_real_probs(rng, 4, 7, 9);
    const RgbImage img = testing::random_image(rng, 7, 9);
    EXPECT_LE(max_abs_diff(crf_refine(p, img, params), p), 1e-6);
    EXPECT_LE(max_abs_diff(oracle::oracle_crf(p, img, params), p), 1e-6);
    params.filter = CrfFilter::kLattice;
    EXPECT_LE(max_abs_diff(crf_refine(p, img, params), p), 1e-6);
    params.filter = CrfFilter::kAuto;
  }
}

TEST(Crf, CentrePixelFlipsUnderStrongSmoothing) {
  const RealTensor p = centre_flip_probs();
  const RgbImage img(3, 3, 128);
  ASSERT_EQ(argmax(p, 4), 1);
  const RealTensor oracle_out = oracle::oracle_crf(p, img, strong_smoothing());
  const RealTensor production = crf_refine(p, img, strong_smoothing());
  EXPECT_EQ(argmax(oracle_out, 4), 0);
  EXPECT_EQ(argmax(production, 4), 0);
  EXPECT_LE(max_abs_diff(production, oracle_out), 1e-5);
}

TEST(Crf, MatchesOracleOnRandomInputs) {
  SeededRng rng(2);
  for (int trial = 0; trial < 6; ++trial) {
    const int h = static_cast<int>(rng.uniform_int(1, 12));
    const int w = static_cast<int>(rng.uniform_int(1, 12));
    const int c = static_cast<int>(rng.uniform_int(2, 5));
    const RealTensor p = testing::random_real_probs(rng, c, h, w);
    const RgbImage img = testing::random_image(rng, h, w);
    CrfParams params;
    params.theta_gamma = 1.0 + 3.0 * rng.uniform01();
    params.theta_alpha = 2.0 + 20.0 * rng.uniform01();
    params.theta_beta = 5.0 + 30.0 * rng.uniform01();
    ASSERT_LE(max_abs_diff(crf_refine(p, img, params), oracle::oracle_crf(p, img, params)), 1e-5)
        << "trial " << trial;
  }
}

TEST(Crf, MatchesOracleAtDefaultsOnFullSizeInput) {
  SeededRng rng(3);
  const RealTensor p = testing::random_real_probs(rng, 3, 32, 32);
  const RgbImage img = testing::random_image(rng, 32, 32);
  CrfParams params;
  params.iterations = 2;
  EXPECT_LE(max_abs_diff(crf_refine(p, img, params), oracle::oracle_crf(p, img, params)), 1e-5);
}

TEST(Crf, EveryIterationStaysNormalised) {
  SeededRng rng(4);
  const RealTensor p = testing::random_real_probs(rng, 5, 10, 10);
  const RgbImage img = testing::random_image(rng, 10, 10);
  for (CrfFilter filter : {CrfFilter::kExact, CrfFilter::kLattice}) {
    for (int it = 1; it <= 6; ++it) {
      CrfParams params;
      params.iterations = it;
      params.filter = filter;
      const RealTensor q = crf_refine(p, img, params);
      const std::size_t n = q.plane_size();
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int c = 0; c < 5; ++c) {
          ASSERT_GE(q.data[c * n + i], 0.0);
          sum += q.data[c * n + i];
        }
        ASSERT_NEAR(sum, 1.0, 1e-6);
      }
    }
  }
}

TEST(Crf, LatticeTracksExactOnLargerImages) {
  SeededRng rng(5);
  const int h = 40, w = 48, c = 4;
  // Piecewise-constant image with noisy unaries, the regime the CRF targets.
  RgbImage img(w, h);
  LabelMap truth(w, h);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      const int region = (r / 20) * 2 + col / 24;
      truth.at(r, col) = static_cast<std::uint8_t>(region);
      std::uint8_t* px = img.pixel(r, col);
      px[0] = static_cast<std::uint8_t>(40 + 50 * region);
      px[1] = static_cast<std::uint8_t>(200 - 40 * region);
      px[2] = 90;
    }
  }
  RealTensor p(c, h, w);
  const std::size_t n = p.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) {
      const double v = 0.2 + rng.uniform01() + (k == truth.data[i] ? 0.6 : 0.0);
      p.data[k * n + i] = v;
      sum += v;
    }
    for (int k = 0; k < c; ++k) p.data[k * n + i] /= sum;
  }
  CrfParams exact;
  exact.filter = CrfFilter::kExact;
  CrfParams lattice;
  lattice.filter = CrfFilter::kLattice;
  const RealTensor a = crf_refine(p, img, exact);
  const RealTensor b = crf_refine(p, img, lattice);
  std::size_t agree = 0;
  double mean_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) agree += argmax(a, i) == argmax(b, i);
  for (std::size_t i = 0; i < a.data.size(); ++i) mean_abs += std::abs(a.data[i] - b.data[i]);
  mean_abs /= static_cast<double>(a.data.size());
  EXPECT_GE(static_cast<double>(agree) / n, 0.98);
  EXPECT_LT(mean_abs, 0.02);
}

TEST(Crf, ParamsFromJsonAndValidation) {
  const CrfParams p = crf_params_from_json(nlohmann::json::parse(
      R"({"iterations": 3, "w_smooth": 1.5, "theta_gamma": 2, "w_bilateral": 4, "theta_alpha": 50, "theta_beta": 9, "filter": "lattice"})"));
  EXPECT_EQ(p.iterations, 3);
  EXPECT_DOUBLE_EQ(p.w_smooth, 1.5);
  EXPECT_DOUBLE_EQ(p.theta_beta, 9.0);
  EXPECT_EQ(p.filter, CrfFilter::kLattice);
  const CrfParams d = crf_params_from_json(nullptr);
  EXPECT_EQ(d.iterations, 5);
  EXPECT_DOUBLE_EQ(d.w_smooth, 3.0);
  EXPECT_DOUBLE_EQ(d.theta_gamma, 3.0);
  EXPECT_DOUBLE_EQ(d.w_bilateral, 10.0);
  EXPECT_DOUBLE_EQ(d.theta_alpha, 80.0);
  EXPECT_DOUBLE_EQ(d.theta_beta, 13.0);
  EXPECT_THROW(crf_params_from_json(nlohmann::json::parse(R"({"theta_gamma": 0})")), Error);
  EXPECT_THROW(crf_params_from_json(nlohmann::json::parse(R"({"w_smooth": -1})")), Error);
  EXPECT_THROW(crf_params_from_json(nlohmann::json::parse(R"({"filter": "fast"})")), Error);
}

TEST(Crf, InputErrors) {
  CrfParams params;
  try {
    crf_refine(RealTensor(2, 2, 2, 0.5), RgbImage(3, 2), params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    crf_refine(RealTensor(2, 2, 2, 0.7), RgbImage(2, 2), params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidProbabilities);
  }
  try {
    crf_refine(ProbTensor(2, 2, 2, TensorKind::kLogits), RgbImage(2, 2), params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidProbabilities);
  }
}

}  // namespace
}  // namespace terraseg
