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

#include "support/test_support.hpp"
#include "terraseg/error.hpp"
#include "terraseg/png_codec.hpp"
#include "terraseg/postprocess.hpp"

namespace terraseg {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

ProbTensor uniform_probs(int c, int h, int w) {
  return ProbTensor(c, h, w, TensorKind::kProbabilities, 1.0f / static_cast<float>(c));
}

TEST(Softmax, UniformAndShiftInvariant) {
  const ProbTensor p = softmax(ProbTensor(10, 2, 3, TensorKind::kLogits));
  EXPECT_EQ(p.kind, TensorKind::kProbabilities);
  for (float v : p.data) EXPECT_NEAR(v, 0.1, 1e-7);

  SeededRng rng(1);
  ProbTensor x = testing::random_logits(rng, 10, 3, 3);
  // Quantise so that adding the shift is exact in float.
  for (auto& v : x.data) v = std::round(v * 1024.0f) / 1024.0f;
  ProbTensor shifted = x;
  for (auto& v : shifted.data) v += 100.0f;
  const ProbTensor a = softmax(x), b = softmax(shifted);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-6);
  const std::size_t n = a.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < 10; ++c) sum += a.data[c * n + i];
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(Softmax, ClosedFormRatios) {
  ProbTensor x(10, 1, 1, TensorKind::kLogits, -60.0f);
  x.data[0] = static_cast<float>(std::log(1.0));
  x.data[1] = static_cast<float>(std::log(2.0));
  x.data[2] = static_cast<float>(std::log(3.0));
  const ProbTensor p = softmax(x);
  EXPECT_NEAR(p.data[0], 1.0 / 6.0, 1e-6);
  EXPECT_NEAR(p.data[1], 2.0 / 6.0, 1e-6);
  EXPECT_NEAR(p.data[2], 3.0 / 6.0, 1e-6);
  for (int c = 3; c < 10; ++c) EXPECT_LT(p.data[c], 1e-25);
}

TEST(Softmax, RejectsNonFinite) {
  ProbTensor x(2, 1, 1, TensorKind::kLogits);
  x.data[1] = std::nanf("");
  EXPECT_EQ(code_of([&] { softmax(x); }), ErrorCode::kNonFiniteInput);
}

TEST(Tta, SingleIdentityViewIsSoftmax) {
  SeededRng rng(2);
  const ProbTensor logits = testing::random_logits(rng, 10, 5, 6);
  const std::vector<TtaView> views{{{false, 1.0}, logits}};
  const ProbTensor merged = tta_merge(views, 5, 6);
  const ProbTensor expected = softmax(logits);
  for (std::size_t i = 0; i < merged.data.size(); ++i) {
    EXPECT_NEAR(merged.data[i], expected.data[i], 1e-7);
  }
}

TEST(Tta, FlipOfSymmetricMapIsUnchanged) {
  SeededRng rng(3);
  RealTensor p = testing::random_real_probs(rng, 4, 3, 6);
  const std::size_t n = p.plane_size();
  for (int c = 0; c < 4; ++c) {
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        p.data[c * n + r * 6 + (5 - col)] = p.data[c * n + r * 6 + col];
      }
    }
  }
  const std::vector<TtaRealView> views{{{false, 1.0}, p}, {{true, 1.0}, p}};
  const RealTensor merged = tta_merge(views, 3, 6);
  for (std::size_t i = 0; i < merged.data.size(); ++i) EXPECT_NEAR(merged.data[i], p.data[i], 1e-12);
}

TEST(Tta, TwoViewMean) {
  RealTensor a(2, 1, 1), b(2, 1, 1);
  a.data = {0.8, 0.2};
  b.data = {0.6, 0.4};
  const std::vector<TtaRealView> views{{{false, 1.0}, a}, {{false, 1.0}, b}};
  const RealTensor m = tta_merge(views, 1, 1);
  EXPECT_NEAR(m.data[0], 0.7, 1e-9);
  EXPECT_NEAR(m.data[1], 0.3, 1e-9);
}

TEST(Tta, PermutationInvariantAndIdempotent) {
  SeededRng rng(4);
  std::vector<TtaRealView> views;
  for (const auto& t : default_tta_views()) {
    const auto [h, w] = view_size(8, 10, t.scale);
    views.push_back({t, testing::random_real_probs(rng, 5, h, w)});
  }
  const RealTensor base = tta_merge(views, 8, 10);
  std::reverse(views.begin(), views.end());
  EXPECT_EQ(tta_merge(views, 8, 10), base);
  std::swap(views[1], views[4]);
  EXPECT_EQ(tta_merge(views, 8, 10), base);

  const std::vector<TtaRealView> same(3, views[0]);
  const std::vector<TtaRealView> one(1, views[0]);
  const RealTensor a = tta_merge(same, 8, 10), b = tta_merge(one, 8, 10);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-15);
}

TEST(Tta, DefaultViewsAndErrors) {
  const auto views = default_tta_views();
  ASSERT_EQ(views.size(), 6u);
  EXPECT_EQ(view_size(100, 80, 0.75), (std::pair<int, int>{75, 60}));
  EXPECT_EQ(code_of([] { tta_merge(std::vector<TtaView>{}, 2, 2); }), ErrorCode::kEmptyViewList);
  const std::vector<TtaView> mixed{{{false, 1.0}, uniform_probs(3, 2, 2)},
                                   {{false, 1.0}, uniform_probs(4, 2, 2)}};
  EXPECT_EQ(code_of([&] { tta_merge(mixed, 2, 2); }), ErrorCode::kDimensionMismatch);
}

TEST(Tta, ApplyAndInvertRoundTripGeometry) {
  SeededRng rng(5);
  const RgbImage img = testing::random_image(rng, 6, 8);
  const RgbImage flipped = apply_view(img, {true, 1.0});
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 8; ++c) {
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(flipped.pixel(r, c)[ch], img.pixel(r, 7 - c)[ch]);
    }
  }
  EXPECT_EQ(apply_view(img, {false, 1.25}).height, 8);  // round(7.5)
  RealTensor p = testing::random_real_probs(rng, 3, 6, 8);
  RealTensor as_view = p;
  const std::size_t n = p.plane_size();
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 6; ++r) {
      for (int col = 0; col < 8; ++col) as_view.data[c * n + r * 8 + col] = p.data[c * n + r * 8 + 7 - col];
    }
  }
  const RealTensor back = invert_view(as_view, {true, 1.0}, 6, 8);
  for (std::size_t i = 0; i < p.data.size(); ++i) EXPECT_NEAR(back.data[i], p.data[i], 1e-12);
}

TEST(Uncertainty, UniformClosedForm) {
  const UncertaintyReport r = uncertainty(uniform_probs(10, 4, 4));
  for (double h : r.entropy_map) EXPECT_NEAR(h, std::log(10.0), 1e-9);
  EXPECT_NEAR(r.mean_confidence, 0.1, 1e-9);
  EXPECT_DOUBLE_EQ(r.uncertain_fraction, 1.0);
  EXPECT_NEAR(r.difficulty, 0.5 * 1.0 + 0.5 * 0.9, 1e-9);
}

TEST(Uncertainty, OneHotIsZero) {
  ProbTensor p(10, 2, 2, TensorKind::kProbabilities);
  for (int i = 0; i < 4; ++i) p.data[(i * 3 % 10) * 4 + i] = 1.0f;
  const UncertaintyReport r = uncertainty(p);
  for (double h : r.entropy_map) EXPECT_EQ(h, 0.0);
  EXPECT_EQ(r.uncertain_fraction, 0.0);
  EXPECT_EQ(r.mean_confidence, 1.0);
  EXPECT_EQ(r.difficulty, 0.0);
}

TEST(Uncertainty, HalfHalfPixel) {
  ProbTensor p(10, 1, 1, TensorKind::kProbabilities);
  p.data[2] = 0.5f;
  p.data[7] = 0.5f;
  const UncertaintyReport r = uncertainty(p);
  EXPECT_NEAR(r.entropy_map[0], std::log(2.0), 1e-9);
  EXPECT_NEAR(r.entropy_map[0] / std::log(10.0), 0.3010, 1e-4);
  EXPECT_EQ(r.uncertain_fraction, 0.0);  // 0.301 <= 0.5
  UncertaintyOptions low;
  low.threshold = 0.3;
  EXPECT_EQ(uncertainty(p, low).uncertain_fraction, 1.0);
}

TEST(Uncertainty, EntropyBoundsOnRandomInputs) {
  SeededRng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = static_cast<int>(rng.uniform_int(2, 12));
    const UncertaintyReport r = uncertainty(testing::random_real_probs(rng, c, 5, 5));
    for (double h : r.entropy_map) {
      ASSERT_GE(h, 0.0);
      ASSERT_LE(h, std::log(static_cast<double>(c)) + 1e-12);
    }
    ASSERT_GE(r.difficulty, 0.0);
    ASSERT_LE(r.difficulty, 1.0);
  }
}

TEST(Uncertainty, ErrorsAndHeatmap) {
  ProbTensor logits(3, 1, 1, TensorKind::kLogits);
  EXPECT_EQ(code_of([&] { uncertainty(logits); }), ErrorCode::kInvalidProbabilities);
  RealTensor neg(2, 1, 1);
  neg.data = {1.5, -0.5};
  EXPECT_EQ(code_of([&] { uncertainty(neg); }), ErrorCode::kInvalidProbabilities);

  ProbTensor p = uniform_probs(4, 1, 2);
  p.data = {1.0f, 0.25f, 0.0f, 0.25f, 0.0f, 0.25f, 0.0f, 0.25f};
  const PngPixels px = decode_png(entropy_heatmap_png(uncertainty(p)));
  EXPECT_EQ(px.channels, 1);
  EXPECT_EQ(px.data, (std::vector<std::uint8_t>{0, 255}));
  const nlohmann::json doc = uncertainty_to_json(uncertainty(p));
  EXPECT_FALSE(doc.contains("entropy_map"));
  EXPECT_TRUE(doc.contains("mean_confidence"));
  EXPECT_TRUE(doc.contains("uncertain_fraction"));
}

TEST(McAggregate, IdenticalSamples) {
  SeededRng rng(7);
  const ProbTensor s = testing::random_probs(rng, 5, 3, 4);
  const std::vector<ProbTensor> samples(4, s);
  const McAggregate agg = mc_aggregate(samples);
  for (double v : agg.variance) EXPECT_NEAR(v, 0.0, 1e-15);
  const UncertaintyReport direct = uncertainty(s);
  EXPECT_NEAR(agg.predictive.mean_confidence, direct.mean_confidence, 1e-12);
  EXPECT_NEAR(agg.predictive.mean_entropy, direct.mean_entropy, 1e-12);
  EXPECT_EQ(agg.predictive.uncertain_fraction, direct.uncertain_fraction);

  const McAggregate single = mc_aggregate(std::vector<ProbTensor>{s});
  for (std::size_t i = 0; i < s.data.size(); ++i) EXPECT_EQ(single.mean_probs.data[i], s.data[i]);
}

TEST(McAggregate, OppositeSamples) {
  ProbTensor a(2, 1, 1, TensorKind::kProbabilities), b(2, 1, 1, TensorKind::kProbabilities);
  a.data = {1.0f, 0.0f};
  b.data = {0.0f, 1.0f};
  const McAggregate agg = mc_aggregate(std::vector<ProbTensor>{a, b});
  EXPECT_DOUBLE_EQ(agg.mean_probs.data[0], 0.5);
  EXPECT_NEAR(agg.predictive.entropy_map[0], std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(agg.variance[0], 0.25);
}

TEST(McAggregate, PredictiveEntropyDominatesMeanSampleEntropy) {
  SeededRng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ProbTensor> samples;
    double mean_sample_entropy = 0.0;
    for (int t = 0; t < 5; ++t) {
      samples.push_back(testing::random_probs(rng, 6, 3, 3));
      mean_sample_entropy += uncertainty(samples.back()).mean_entropy / 5.0;
    }
    ASSERT_GE(mc_aggregate(samples).predictive.mean_entropy, mean_sample_entropy - 1e-9);
  }
}

TEST(McAggregate, Errors) {
  EXPECT_EQ(code_of([] { mc_aggregate(std::vector<ProbTensor>{}); }), ErrorCode::kEmptySampleList);
  EXPECT_EQ(code_of([] {
              mc_aggregate(std::vector<ProbTensor>{uniform_probs(2, 2, 2), uniform_probs(2, 2, 3)});
            }),
            ErrorCode::kShapeMismatch);
}

UncertaintyReport with_difficulty(double d) {
  UncertaintyReport r;
  r.difficulty = d;
  r.height = 1;
  r.width = 1;
  return r;
}

TEST(RankDifficulty, BandsAndCounts) {
  const auto ranking = rank_difficulty({{"a", with_difficulty(0.05)},
                                        {"b", with_difficulty(0.20)},
                                        {"c", with_difficulty(0.40)}});
  ASSERT_EQ(ranking.images.size(), 3u);
  EXPECT_EQ(ranking.images[0].image_id, "c");
  EXPECT_EQ(ranking.images[0].band, DifficultyBand::kHighUncertainty);
  EXPECT_EQ(ranking.images[1].band, DifficultyBand::kMiddle);
  EXPECT_EQ(ranking.images[2].band, DifficultyBand::kWellPredicted);
  EXPECT_EQ(ranking.well_predicted, 1u);
  EXPECT_EQ(ranking.middle, 1u);
  EXPECT_EQ(ranking.high_uncertainty, 1u);

  const auto edges = rank_difficulty({{"x", with_difficulty(0.15)}, {"y", with_difficulty(0.30)}});
  EXPECT_EQ(edges.images[0].band, DifficultyBand::kHighUncertainty);
  EXPECT_EQ(edges.images[1].band, DifficultyBand::kMiddle);
}

TEST(RankDifficulty, TiesSortById) {
  const auto ranking = rank_difficulty({{"img3", with_difficulty(0.2)},
                                        {"img1", with_difficulty(0.2)},
                                        {"img2", with_difficulty(0.2)}});
  EXPECT_EQ(ranking.images[0].image_id, "img1");
  EXPECT_EQ(ranking.images[1].image_id, "img2");
  EXPECT_EQ(ranking.images[2].image_id, "img3");
  EXPECT_EQ(code_of([] { rank_difficulty({}); }), ErrorCode::kEmptyInput);
}

TEST(RankDifficulty, JsonHasCountsAndPercentages) {
  const auto doc = ranking_to_json(rank_difficulty({{"a", with_difficulty(0.05)},
                                                    {"b", with_difficulty(0.05)},
                                                    {"c", with_difficulty(0.40)},
                                                    {"d", with_difficulty(0.20)}}));
  EXPECT_EQ(doc["well_predicted"]["count"], 2);
  EXPECT_DOUBLE_EQ(doc["well_predicted"]["percent"].get<double>(), 50.0);
  EXPECT_DOUBLE_EQ(doc["high_uncertainty"]["percent"].get<double>(), 25.0);
  EXPECT_EQ(doc["total_images"], 4);
  EXPECT_TRUE(doc.contains("global_mean_confidence"));
}

}  // namespace
}  // namespace terraseg
