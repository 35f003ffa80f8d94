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

#include "terraseg/postprocess.hpp"

#include <algorithm>
#include <cmath>

#include "terraseg/error.hpp"
#include "terraseg/png_codec.hpp"

namespace terraseg {
namespace {

ProbTensor to_float(const RealTensor& t, TensorKind kind) {
  ProbTensor out(t.channels, t.height, t.width, kind);
  std::transform(t.data.begin(), t.data.end(), out.data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

void renormalise(RealTensor& t) {
  const std::size_t plane = t.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int c = 0; c < t.channels; ++c) sum += t.data[c * plane + i];
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::kInvalidProbabilities,
                  "zero probability mass at pixel " + std::to_string(i));
    }
    for (int c = 0; c < t.channels; ++c) t.data[c * plane + i] /= sum;
  }
}

RealTensor softmax_real(const ProbTensor& logits) {
  RealTensor p(logits.channels, logits.height, logits.width);
  const std::size_t plane = logits.plane_size();
  const int c = logits.channels;
  for (std::size_t i = 0; i < plane; ++i) {
    double m = logits.data[i];
    for (int k = 1; k < c; ++k) m = std::max(m, static_cast<double>(logits.data[k * plane + i]));
    double z = 0.0;
    for (int k = 0; k < c; ++k) {
      const double e = std::exp(static_cast<double>(logits.data[k * plane + i]) - m);
      p.data[k * plane + i] = e;
      z += e;
    }
    for (int k = 0; k < c; ++k) p.data[k * plane + i] /= z;
  }
  return p;
}

void check_finite(const ProbTensor& t) {
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!std::isfinite(t.data[i])) {
      throw Error(ErrorCode::kNonFiniteInput, "non-finite value at element " + std::to_string(i));
    }
  }
}

void check_probabilities(const ProbTensor& t) {
  if (t.kind != TensorKind::kProbabilities) {
    throw Error(ErrorCode::kInvalidProbabilities, "expected a probabilities tensor");
  }
  try {
    validate_tensor(t);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidProbabilities, e.what());
  }
}

RealTensor probabilities_real(const ProbTensor& t) {
  if (t.kind == TensorKind::kLogits) {
    check_finite(t);
    return softmax_real(t);
  }
  check_probabilities(t);
  RealTensor r(t.channels, t.height, t.width);
  std::copy(t.data.begin(), t.data.end(), r.data.begin());
  return r;
}

}  // namespace

ProbTensor softmax(const ProbTensor& logits) {
  if (logits.kind != TensorKind::kLogits) {
    throw Error(ErrorCode::kInvalidArgument, "softmax expects a logits tensor");
  }
  check_finite(logits);
  return to_float(softmax_real(logits), TensorKind::kProbabilities);
}

ProbTensor as_probabilities(const ProbTensor& t) {
  if (t.kind == TensorKind::kLogits) return softmax(t);
  check_probabilities(t);
  return t;
}

RealTensor resize_planes(const RealTensor& t, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize target must be positive");
  }
  if (out_height == t.height && out_width == t.width) return t;
  RealTensor out(t.channels, out_height, out_width);
  const double sy = static_cast<double>(t.height) / out_height;
  const double sx = static_cast<double>(t.width) / out_width;
  const std::size_t in_plane = t.plane_size();
  const std::size_t out_plane = out.plane_size();
  for (int r = 0; r < out_height; ++r) {
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, t.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, t.height - 1);
    fy -= y0;
    for (int c = 0; c < out_width; ++c) {
      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, t.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, t.width - 1);
      fx -= x0;
      for (int ch = 0; ch < t.channels; ++ch) {
        const double* p = t.data.data() + ch * in_plane;
        const double top = p[y0 * t.width + x0] * (1 - fx) + p[y0 * t.width + x1] * fx;
        const double bottom = p[y1 * t.width + x0] * (1 - fx) + p[y1 * t.width + x1] * fx;
        out.data[ch * out_plane + static_cast<std::size_t>(r) * out_width + c] =
            top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

ProbTensor hflip_planes(const ProbTensor& t) {
  ProbTensor out = t;
  for (int ch = 0; ch < t.channels; ++ch) {
    for (int r = 0; r < t.height; ++r) {
      for (int c = 0; c < t.width; ++c) out.at(ch, r, c) = t.at(ch, r, t.width - 1 - c);
    }
  }
  return out;
}

namespace {

void hflip_real(RealTensor& t) {
  const std::size_t plane = t.plane_size();
  for (int ch = 0; ch < t.channels; ++ch) {
    for (int r = 0; r < t.height; ++r) {
      double* row = t.data.data() + ch * plane + static_cast<std::size_t>(r) * t.width;
      std::reverse(row, row + t.width);
    }
  }
}

}  // namespace

std::pair<int, int> view_size(int base_height, int base_width, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "TTA scale must be positive");
  return {std::max(1, static_cast<int>(std::lround(base_height * scale))),
          std::max(1, static_cast<int>(std::lround(base_width * scale)))};
}

RgbImage apply_view(const RgbImage& image, const ViewTransform& view) {
  RealTensor planes(3, image.height, image.width);
  const std::size_t plane = planes.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) planes.data[c * plane + i] = image.data[3 * i + c];
  }
  if (view.hflip) hflip_real(planes);
  const auto [h, w] = view_size(image.height, image.width, view.scale);
  const RealTensor resized = resize_planes(planes, h, w);
  RgbImage out(w, h);
  const std::size_t out_plane = resized.plane_size();
  for (std::size_t i = 0; i < out_plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      out.data[3 * i + c] = static_cast<std::uint8_t>(
          std::clamp(std::round(resized.data[c * out_plane + i]), 0.0, 255.0));
    }
  }
  return out;
}

RealTensor invert_view(const RealTensor& probabilities, const ViewTransform& view,
                       int base_height, int base_width) {
  if (!(view.scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "TTA scale must be positive");
  for (double v : probabilities.data) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidProbabilities, "view holds a value outside [0, inf)");
    }
  }
  RealTensor p = resize_planes(probabilities, base_height, base_width);
  if (view.hflip) hflip_real(p);
  renormalise(p);
  return p;
}

RealTensor invert_view(const ProbTensor& prediction, const ViewTransform& view,
                       int base_height, int base_width) {
  return invert_view(probabilities_real(prediction), view, base_height, base_width);
}

std::vector<ViewTransform> default_tta_views() {
  std::vector<ViewTransform> views;
  for (double s : {0.75, 1.0, 1.25}) {
    views.push_back({false, s});
    views.push_back({true, s});
  }
  return views;
}

RealTensor tta_merge(std::span<const TtaRealView> views, int base_height, int base_width) {
  if (views.empty()) throw Error(ErrorCode::kEmptyViewList, "no TTA views supplied");
  std::vector<RealTensor> aligned;
  aligned.reserve(views.size());
  for (const auto& v : views) {
    aligned.push_back(invert_view(v.probabilities, v.transform, base_height, base_width));
    if (aligned.back().channels != aligned.front().channels) {
      throw Error(ErrorCode::kDimensionMismatch, "views disagree on channel count");
    }
  }
  RealTensor mean(aligned.front().channels, base_height, base_width);
  std::vector<double> values(aligned.size());
  for (std::size_t i = 0; i < mean.data.size(); ++i) {
    for (std::size_t v = 0; v < aligned.size(); ++v) values[v] = aligned[v].data[i];
    // Summing in sorted order makes the result independent of view order.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double x : values) sum += x;
    mean.data[i] = sum / static_cast<double>(aligned.size());
  }
  renormalise(mean);
  return mean;
}

ProbTensor tta_merge(std::span<const TtaView> views, int base_height, int base_width) {
  std::vector<TtaRealView> real;
  real.reserve(views.size());
  for (const auto& v : views) real.push_back({v.transform, probabilities_real(v.prediction)});
  return to_float(tta_merge(real, base_height, base_width), TensorKind::kProbabilities);
}

UncertaintyReport uncertainty(const RealTensor& probs, const UncertaintyOptions& options) {
  if (!(options.threshold >= 0.0 && options.threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "entropy threshold must lie in [0, 1]");
  }
  if (probs.channels < 2) {
    throw Error(ErrorCode::kInvalidProbabilities, "entropy needs at least two classes");
  }
  const std::size_t plane = probs.plane_size();
  const int c = probs.channels;
  const double log_c = std::log(static_cast<double>(c));
  UncertaintyReport rep;
  rep.threshold = options.threshold;
  rep.num_classes = c;
  rep.height = probs.height;
  rep.width = probs.width;
  rep.entropy_map.resize(plane);
  double confidence_sum = 0.0;
  double entropy_sum = 0.0;
  std::size_t uncertain = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) {
      const double p = probs.data[k * plane + i];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::kInvalidProbabilities, "invalid probability at pixel " + std::to_string(i));
      }
      sum += p;
    }
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::kInvalidProbabilities, "zero mass at pixel " + std::to_string(i));
    }
    // Renormalising in double removes 32-bit storage drift before the logs.
    double h = 0.0;
    double best = 0.0;
    for (int k = 0; k < c; ++k) {
      const double p = probs.data[k * plane + i] / sum;
      if (p > 0.0) h -= p * std::log(p);
      best = std::max(best, p);
    }
    h = std::clamp(h, 0.0, log_c);
    rep.entropy_map[i] = h;
    entropy_sum += h;
    confidence_sum += best;
    if (h / log_c > options.threshold) ++uncertain;
  }
  const double n = static_cast<double>(plane);
  rep.mean_confidence = confidence_sum / n;
  rep.mean_entropy = entropy_sum / n;
  rep.uncertain_fraction = static_cast<double>(uncertain) / n;
  rep.difficulty = options.fraction_weight * rep.uncertain_fraction +
                   (1.0 - options.fraction_weight) * (1.0 - rep.mean_confidence);
  return rep;
}

UncertaintyReport uncertainty(const ProbTensor& probs, const UncertaintyOptions& options) {
  check_probabilities(probs);
  RealTensor r(probs.channels, probs.height, probs.width);
  std::copy(probs.data.begin(), probs.data.end(), r.data.begin());
  return uncertainty(r, options);
}

Bytes entropy_heatmap_png(const UncertaintyReport& report) {
  PngPixels px;
  px.width = report.width;
  px.height = report.height;
  px.channels = 1;
  px.data.resize(report.entropy_map.size());
  const double log_c = std::log(static_cast<double>(report.num_classes));
  for (std::size_t i = 0; i < px.data.size(); ++i) {
    px.data[i] = static_cast<std::uint8_t>(
        std::clamp(std::round(255.0 * report.entropy_map[i] / log_c), 0.0, 255.0));
  }
  return encode_png(px);
}

nlohmann::json uncertainty_to_json(const UncertaintyReport& report) {
  return {{"mean_confidence", report.mean_confidence},
          {"uncertain_fraction", report.uncertain_fraction},
          {"mean_entropy", report.mean_entropy},
          {"difficulty", report.difficulty},
          {"threshold", report.threshold},
          {"num_classes", report.num_classes},
          {"height", report.height},
          {"width", report.width}};
}

McAggregate mc_aggregate(std::span<const ProbTensor> samples, const UncertaintyOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySampleList, "no MC samples supplied");
  const ProbTensor& first = samples.front();
  RealTensor mean(first.channels, first.height, first.width);
  RealTensor m2(first.channels, first.height, first.width);
  std::size_t k = 0;
  for (const auto& s : samples) {
    if (s.channels != first.channels || s.height != first.height || s.width != first.width) {
      throw Error(ErrorCode::kShapeMismatch, "sample " + std::to_string(k) + " has a different shape");
    }
    check_probabilities(s);
    ++k;
    for (std::size_t i = 0; i < mean.data.size(); ++i) {
      const double x = s.data[i];
      const double delta = x - mean.data[i];
      mean.data[i] += delta / static_cast<double>(k);
      m2.data[i] += delta * (x - mean.data[i]);
    }
  }
  McAggregate out;
  const std::size_t plane = mean.plane_size();
  out.variance.assign(plane, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    double v = 0.0;
    for (int c = 0; c < mean.channels; ++c) v += m2.data[c * plane + i] / static_cast<double>(k);
    out.variance[i] = v / mean.channels;
    total += out.variance[i];
  }
  out.mean_variance = total / static_cast<double>(plane);
  out.predictive = uncertainty(mean, options);
  out.mean_probs = std::move(mean);
  return out;
}

nlohmann::json mc_aggregate_to_json(const McAggregate& agg) {
  return {{"predictive", uncertainty_to_json(agg.predictive)},
          {"mean_variance", agg.mean_variance}};
}

DifficultyRanking rank_difficulty(
    const std::vector<std::pair<std::string, UncertaintyReport>>& reports,
    const DifficultyBands& bands) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to rank");
  if (bands.well_predicted_below > bands.high_uncertainty_from) {
    throw Error(ErrorCode::kInvalidArgument, "band thresholds out of order");
  }
  DifficultyRanking out;
  double pixels = 0.0;
  for (const auto& [id, rep] : reports) {
    RankedImage img{id, rep.difficulty, rep.uncertain_fraction, rep.mean_confidence,
                    DifficultyBand::kMiddle};
    if (rep.difficulty < bands.well_predicted_below) {
      img.band = DifficultyBand::kWellPredicted;
      ++out.well_predicted;
    } else if (rep.difficulty >= bands.high_uncertainty_from) {
      img.band = DifficultyBand::kHighUncertainty;
      ++out.high_uncertainty;
    } else {
      ++out.middle;
    }
    const double n = static_cast<double>(rep.height) * rep.width;
    pixels += n;
    out.global_mean_confidence += rep.mean_confidence * n;
    out.global_uncertain_fraction += rep.uncertain_fraction * n;
    out.images.push_back(std::move(img));
  }
  if (pixels > 0.0) {
    out.global_mean_confidence /= pixels;
    out.global_uncertain_fraction /= pixels;
  }
  std::sort(out.images.begin(), out.images.end(), [](const RankedImage& a, const RankedImage& b) {
    if (a.difficulty != b.difficulty) return a.difficulty > b.difficulty;
    return a.image_id < b.image_id;
  });
  return out;
}

nlohmann::json ranking_to_json(const DifficultyRanking& ranking) {
  auto band_name = [](DifficultyBand b) {
    switch (b) {
      case DifficultyBand::kWellPredicted: return "well_predicted";
      case DifficultyBand::kHighUncertainty: return "high_uncertainty";
      default: return "middle";
    }
  };
  const double total = static_cast<double>(ranking.images.size());
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : ranking.images) {
    images.push_back({{"image_id", img.image_id},
                      {"difficulty", img.difficulty},
                      {"uncertain_fraction", img.uncertain_fraction},
                      {"mean_confidence", img.mean_confidence},
                      {"band", band_name(img.band)}});
  }
  return {{"images", images},
          {"total_images", ranking.images.size()},
          {"well_predicted", {{"count", ranking.well_predicted},
                              {"percent", 100.0 * ranking.well_predicted / total}}},
          {"middle", {{"count", ranking.middle}, {"percent", 100.0 * ranking.middle / total}}},
          {"high_uncertainty", {{"count", ranking.high_uncertainty},
                                {"percent", 100.0 * ranking.high_uncertainty / total}}},
          {"global_mean_confidence", ranking.global_mean_confidence},
          {"global_uncertain_fraction", ranking.global_uncertain_fraction}};
}

}  // namespace terraseg
