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

#include "terraseg/crf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "terraseg/error.hpp"
#include "terraseg/tensor_io.hpp"

namespace terraseg {

void validate_crf_params(const CrfParams& p) {
  if (p.iterations < 1) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  if (!(p.theta_gamma > 0.0) || !(p.theta_alpha > 0.0) || !(p.theta_beta > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "CRF kernel widths must be positive");
  }
  if (!(p.w_smooth >= 0.0) || !(p.w_bilateral >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "CRF kernel weights must be non-negative");
  }
}

CrfParams crf_params_from_json(const nlohmann::json& doc) {
  CrfParams p;
  if (doc.is_null()) return p;
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "CRF params must be an object");
  try {
    p.iterations = doc.value("iterations", p.iterations);
    p.w_smooth = doc.value("w_smooth", p.w_smooth);
    p.theta_gamma = doc.value("theta_gamma", p.theta_gamma);
    p.w_bilateral = doc.value("w_bilateral", p.w_bilateral);
    p.theta_alpha = doc.value("theta_alpha", p.theta_alpha);
    p.theta_beta = doc.value("theta_beta", p.theta_beta);
    const std::string filter = doc.value("filter", std::string("auto"));
    if (filter == "auto") {
      p.filter = CrfFilter::kAuto;
    } else if (filter == "exact") {
      p.filter = CrfFilter::kExact;
    } else if (filter == "lattice") {
      p.filter = CrfFilter::kLattice;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown CRF filter '" + filter + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("CRF params: ") + e.what());
  }
  validate_crf_params(p);
  return p;
}

namespace {

constexpr int kFeatureDims = 5;  // x, y, r, g, b
using Feature = std::array<double, kFeatureDims>;

/// Sparse permutohedral lattice over 5-D features (Adams et al. construction,
/// following the layout popularised by the dense CRF reference code).
class PermutohedralLattice {
 public:
  static constexpr int kD = kFeatureDims;

  explicit PermutohedralLattice(const std::vector<Feature>& features)
      : points_(features.size()),
        offsets_(features.size() * (kD + 1)),
        weights_(features.size() * (kD + 1)) {
    std::array<double, kD> scale{};
    const double inv_std = std::sqrt(2.0 / 3.0) * (kD + 1);
    for (int i = 0; i < kD; ++i) scale[i] = inv_std / std::sqrt((i + 1.0) * (i + 2.0));

    std::array<double, kD + 1> elevated{};
    std::array<int, kD + 1> rem0{};
    std::array<int, kD + 1> rank{};
    std::array<double, kD + 2> bary{};
    const double down = 1.0 / (kD + 1);
    std::unordered_map<Key, int, KeyHash> index;
    index.reserve(features.size() * 2);

    for (std::size_t n = 0; n < points_; ++n) {
      const Feature& f = features[n];
      double sm = 0.0;
      for (int j = kD; j > 0; --j) {
        const double cf = f[j - 1] * scale[j - 1];
        elevated[j] = sm - j * cf;
        sm += cf;
      }
      elevated[0] = sm;

      int sum = 0;
      for (int i = 0; i <= kD; ++i) {
        const int rounded = static_cast<int>(std::lround(down * elevated[i]));
        rem0[i] = rounded * (kD + 1);
        sum += rounded;
      }
      rank.fill(0);
      for (int i = 0; i < kD; ++i) {
        const double di = elevated[i] - rem0[i];
        for (int j = i + 1; j <= kD; ++j) {
          if (di < elevated[j] - rem0[j]) {
            ++rank[i];
          } else {
            ++rank[j];
          }
        }
      }
      // Bring points off the hyperplane back onto it.
      for (int i = 0; i <= kD; ++i) {
        rank[i] += sum;
        if (rank[i] < 0) {
          rank[i] += kD + 1;
          rem0[i] += kD + 1;
        } else if (rank[i] > kD) {
          rank[i] -= kD + 1;
          rem0[i] -= kD + 1;
        }
      }
      bary.fill(0.0);
      for (int i = 0; i <= kD; ++i) {
        const double v = (elevated[i] - rem0[i]) * down;
        bary[kD - rank[i]] += v;
        bary[kD + 1 - rank[i]] -= v;
      }
      bary[0] += 1.0 + bary[kD + 1];

      for (int r = 0; r <= kD; ++r) {
        Key key{};
        for (int i = 0; i < kD; ++i) {
          key[i] = rem0[i] + (rank[i] <= kD - r ? r : r - (kD + 1));
        }
        auto [it, inserted] = index.try_emplace(key, static_cast<int>(keys_.size()));
        if (inserted) keys_.push_back(key);
        offsets_[n * (kD + 1) + r] = it->second;
        weights_[n * (kD + 1) + r] = bary[r];
      }
    }

    // Neighbour table for the blur along each lattice direction.
    const std::size_t m = keys_.size();
    neighbours_.assign(m * (kD + 1) * 2, -1);
    for (std::size_t v = 0; v < m; ++v) {
      for (int j = 0; j <= kD; ++j) {
        Key n1{}, n2{};
        for (int k = 0; k < kD; ++k) {
          n1[k] = keys_[v][k] - 1;
          n2[k] = keys_[v][k] + 1;
        }
        if (j < kD) {
          n1[j] = keys_[v][j] + kD;
          n2[j] = keys_[v][j] - kD;
        }
        const auto a = index.find(n1);
        const auto b = index.find(n2);
        neighbours_[(v * (kD + 1) + j) * 2] = a == index.end() ? -1 : a->second;
        neighbours_[(v * (kD + 1) + j) * 2 + 1] = b == index.end() ? -1 : b->second;
      }
    }
  }

  /// Gaussian-weighted sums of `values` (points x channels), up to a global
  /// scale factor.
  std::vector<double> filter(const std::vector<double>& values, int channels) const {
    const std::size_t m = keys_.size();
    std::vector<double> lattice(m * channels, 0.0), scratch(m * channels, 0.0);
    for (std::size_t n = 0; n < points_; ++n) {
      for (int r = 0; r <= kD; ++r) {
        const double w = weights_[n * (kD + 1) + r];
        double* dst = lattice.data() + static_cast<std::size_t>(offsets_[n * (kD + 1) + r]) * channels;
        for (int c = 0; c < channels; ++c) dst[c] += w * values[n * channels + c];
      }
    }
    for (int j = 0; j <= kD; ++j) {
      for (std::size_t v = 0; v < m; ++v) {
        const int a = neighbours_[(v * (kD + 1) + j) * 2];
        const int b = neighbours_[(v * (kD + 1) + j) * 2 + 1];
        for (int c = 0; c < channels; ++c) {
          const double va = a < 0 ? 0.0 : lattice[static_cast<std::size_t>(a) * channels + c];
          const double vb = b < 0 ? 0.0 : lattice[static_cast<std::size_t>(b) * channels + c];
          scratch[v * channels + c] = 0.5 * lattice[v * channels + c] + 0.25 * (va + vb);
        }
      }
      std::swap(lattice, scratch);
    }
    std::vector<double> out(points_ * channels, 0.0);
    for (std::size_t n = 0; n < points_; ++n) {
      for (int r = 0; r <= kD; ++r) {
        const double w = weights_[n * (kD + 1) + r];
        const double* src = lattice.data() + static_cast<std::size_t>(offsets_[n * (kD + 1) + r]) * channels;
        for (int c = 0; c < channels; ++c) out[n * channels + c] += w * src[c];
      }
    }
    return out;
  }

 private:
  using Key = std::array<int, kD>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = 0;
      for (int v : k) h = h * 2531011u + static_cast<std::size_t>(static_cast<unsigned>(v));
      return h;
    }
  };

  std::size_t points_;
  std::vector<int> offsets_;
  std::vector<double> weights_;
  std::vector<Key> keys_;
  std::vector<int> neighbours_;
};

std::vector<Feature> bilateral_features(const RgbImage& image, const CrfParams& p) {
  std::vector<Feature> f(static_cast<std::size_t>(image.width) * image.height);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const std::uint8_t* px = image.pixel(r, c);
      f[static_cast<std::size_t>(r) * image.width + c] = {
          c / p.theta_alpha, r / p.theta_alpha, px[0] / p.theta_beta,
          px[1] / p.theta_beta, px[2] / p.theta_beta};
    }
  }
  return f;
}

/// Adds w * sum_{j != i} exp(-|p_i - p_j|^2 / (2 theta^2)) Q_j to `msg`
/// using two 1-D passes. Taps beyond 6 theta are dropped (< 2e-8 each).
void add_spatial_message(const std::vector<double>& q, int channels, int height, int width,
                         double theta, double weight, std::vector<double>& msg) {
  const int radius_x = std::min(width - 1, static_cast<int>(std::ceil(6.0 * theta)));
  const int radius_y = std::min(height - 1, static_cast<int>(std::ceil(6.0 * theta)));
  const int radius = std::max(radius_x, radius_y);
  std::vector<double> taps(radius + 1);
  for (int d = 0; d <= radius; ++d) taps[d] = std::exp(-0.5 * d * d / (theta * theta));

  std::vector<double> rows(q.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double* dst = rows.data() + (static_cast<std::size_t>(r) * width + c) * channels;
      const int lo = std::max(0, c - radius_x);
      const int hi = std::min(width - 1, c + radius_x);
      for (int x = lo; x <= hi; ++x) {
        const double t = taps[std::abs(x - c)];
        const double* src = q.data() + (static_cast<std::size_t>(r) * width + x) * channels;
        for (int k = 0; k < channels; ++k) dst[k] += t * src[k];
      }
    }
  }
  for (int r = 0; r < height; ++r) {
    const int lo = std::max(0, r - radius_y);
    const int hi = std::min(height - 1, r + radius_y);
    for (int c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      double* dst = msg.data() + i * channels;
      for (int y = lo; y <= hi; ++y) {
        const double t = taps[std::abs(y - r)];
        const double* src = rows.data() + (static_cast<std::size_t>(y) * width + c) * channels;
        for (int k = 0; k < channels; ++k) dst[k] += weight * t * src[k];
      }
      // The blur includes the pixel itself with kernel value 1.
      for (int k = 0; k < channels; ++k) dst[k] -= weight * q[i * channels + k];
    }
  }
}

/// Exact bilateral message, visiting each unordered pair once.
void add_bilateral_exact(const std::vector<double>& q, int channels,
                         const std::vector<Feature>& features, double weight,
                         std::vector<double>& msg) {
  const std::size_t n = features.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Feature& fi = features[i];
    const double* qi = q.data() + i * channels;
    double* mi = msg.data() + i * channels;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Feature& fj = features[j];
      double d2 = 0.0;
      for (int k = 0; k < kFeatureDims; ++k) {
        const double d = fi[k] - fj[k];
        d2 += d * d;
      }
      const double kij = weight * std::exp(-0.5 * d2);
      const double* qj = q.data() + j * channels;
      double* mj = msg.data() + j * channels;
      for (int k = 0; k < channels; ++k) {
        mi[k] += kij * qj[k];
        mj[k] += kij * qi[k];
      }
    }
  }
}

class LatticeBilateral {
 public:
  LatticeBilateral(const std::vector<Feature>& features)
      : lattice_(features) {
    // Calibrate the lattice's arbitrary output scale against exact kernel
    // sums at a deterministic subset of pixels.
    const std::size_t n = features.size();
    const std::vector<double> ones(n, 1.0);
    const std::vector<double> approx = lattice_.filter(ones, 1);
    const std::size_t probes = std::min<std::size_t>(n, 64);
    double exact_sum = 0.0;
    double approx_sum = 0.0;
    for (std::size_t s = 0; s < probes; ++s) {
      const std::size_t i = s * n / probes;
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0.0;
        for (int k = 0; k < kFeatureDims; ++k) {
          const double d = features[i][k] - features[j][k];
          d2 += d * d;
        }
        total += std::exp(-0.5 * d2);
      }
      exact_sum += total;
      approx_sum += approx[i];
    }
    scale_ = approx_sum > 0.0 ? exact_sum / approx_sum : 0.0;
  }

  void add_message(const std::vector<double>& q, int channels, double weight,
                   std::vector<double>& msg) const {
    const std::vector<double> blurred = lattice_.filter(q, channels);
    for (std::size_t i = 0; i < q.size(); ++i) {
      msg[i] += weight * (scale_ * blurred[i] - q[i]);
    }
  }

 private:
  PermutohedralLattice lattice_;
  double scale_ = 1.0;
};

}  // namespace

RealTensor crf_refine(const RealTensor& probs, const RgbImage& image, const CrfParams& params) {
  validate_crf_params(params);
  if (probs.height != image.height || probs.width != image.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                "probabilities " + std::to_string(probs.width) + "x" + std::to_string(probs.height) +
                    " vs image " + std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  const int channels = probs.channels;
  const std::size_t n = probs.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double v = probs.data[c * n + i];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kInvalidProbabilities, "value outside [0, 1] at pixel " + std::to_string(i));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-4) {
      throw Error(ErrorCode::kInvalidProbabilities, "channel sum " + std::to_string(sum) +
                                                        " at pixel " + std::to_string(i));
    }
  }

  std::vector<double> unary(n * channels);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      unary[i * channels + c] = -std::log(std::max(probs.data[c * n + i], kCrfProbabilityFloor));
    }
  }

  std::vector<double> q(n * channels);
  auto normalise_from = [&](const std::vector<double>& msg) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < channels; ++c) {
        best = std::max(best, msg[i * channels + c] - unary[i * channels + c]);
      }
      double z = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double e = std::exp(msg[i * channels + c] - unary[i * channels + c] - best);
        q[i * channels + c] = e;
        z += e;
      }
      for (int c = 0; c < channels; ++c) q[i * channels + c] /= z;
    }
  };
  std::vector<double> msg(n * channels, 0.0);
  normalise_from(msg);

  const bool use_bilateral = params.w_bilateral > 0.0;
  const bool exact = params.filter == CrfFilter::kExact ||
                     (params.filter == CrfFilter::kAuto && n <= params.exact_pixel_limit);
  std::vector<Feature> features;
  std::optional<LatticeBilateral> lattice;
  if (use_bilateral) {
    features = bilateral_features(image, params);
    if (!exact) lattice.emplace(features);
  }

  for (int it = 0; it < params.iterations; ++it) {
    std::fill(msg.begin(), msg.end(), 0.0);
    if (params.w_smooth > 0.0) {
      add_spatial_message(q, channels, probs.height, probs.width, params.theta_gamma,
                          params.w_smooth, msg);
    }
    if (use_bilateral) {
      if (exact) {
        add_bilateral_exact(q, channels, features, params.w_bilateral, msg);
      } else {
        lattice->add_message(q, channels, params.w_bilateral, msg);
      }
    }
    normalise_from(msg);
  }

  RealTensor out(channels, probs.height, probs.width);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) out.data[c * n + i] = q[i * channels + c];
  }
  return out;
}

ProbTensor crf_refine(const ProbTensor& probs, const RgbImage& image, const CrfParams& params) {
  if (probs.kind != TensorKind::kProbabilities) {
    throw Error(ErrorCode::kInvalidProbabilities, "CRF expects a probabilities tensor");
  }
  RealTensor p(probs.channels, probs.height, probs.width);
  std::copy(probs.data.begin(), probs.data.end(), p.data.begin());
  const RealTensor refined = crf_refine(p, image, params);
  ProbTensor out(probs.channels, probs.height, probs.width, TensorKind::kProbabilities);
  std::transform(refined.data.begin(), refined.data.end(), out.data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

}  // namespace terraseg
