// Copyright 2026 The kpn-burst Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kpn/noise_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kpn {

void NoiseParams::validate() const {
  if (!(sigma_r >= 0.0) || !(sigma_s >= 0.0)) {
    throw std::invalid_argument("noise: sigma_r and sigma_s must be >= 0, got (" +
                                std::to_string(sigma_r) + ", " +
                                std::to_string(sigma_s) + ")");
  }
}

Image sample_noise(const Image& clean, const NoiseParams& params,
                   const CounterStream& stream) {
  params.validate();
  Image out(clean.height, clean.width);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double y = clean.pixels[i];
    if (y < 0.0) {
      throw std::invalid_argument("sample_noise: negative clean value " +
                                  std::to_string(y) + " at pixel " +
                                  std::to_string(i));
    }
    const double var = params.variance(y);
    out.pixels[i] = var > 0.0
                        ? static_cast<float>(y + std::sqrt(var) * stream.normal(i))
                        : clean.pixels[i];
  }
  return out;
}

SigmaMap estimate_sigma_map(const Image& reference, const NoiseParams& params) {
  params.validate();
  SigmaMap map{Image(reference.height, reference.width)};
  const double read_var = params.sigma_r * params.sigma_r;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double x = std::max(0.0, static_cast<double>(reference.pixels[i]));
    map.values.pixels[i] = static_cast<float>(std::sqrt(read_var + params.sigma_s * x));
  }
  return map;
}

NoiseParams params_from_gains(const GainSetting& g) {
  if (!(g.analog_gain > 0.0) || !(g.digital_gain > 0.0) || g.read_std < 0.0) {
    throw std::invalid_argument(
        "params_from_gains: gains must be positive and readout std non-negative");
  }
  return NoiseParams{g.digital_gain * g.read_std, g.digital_gain * g.analog_gain};
}

void NoiseSampling::validate() const {
  if (!(shot_min > 0.0) || !(read_min > 0.0) || shot_max < shot_min ||
      read_max < read_min) {
    throw std::invalid_argument(
        "noise sampling: ranges must be positive with min <= max (shot [" +
        std::to_string(shot_min) + ", " + std::to_string(shot_max) +
        "], read [" + std::to_string(read_min) + ", " +
        std::to_string(read_max) + "])");
  }
}

namespace {

double log_uniform(double lo, double hi, Rng& rng) {
  const double u = rng.uniform();
  if (lo == hi) return lo;
  return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

}  // namespace

NoiseParams sample_params(const NoiseSampling& ranges, Rng& rng) {
  ranges.validate();
  const double shot = log_uniform(ranges.shot_min, ranges.shot_max, rng);
  const double read = log_uniform(ranges.read_min, ranges.read_max, rng);
  return NoiseParams{read, shot};
}

NoiseParams gain_level_params(double gain, const GainAnchor& anchor) {
  if (!(gain > 0.0)) {
    throw std::invalid_argument("gain_level_params: gain must be positive");
  }
  return NoiseParams{gain * anchor.sigma_r, gain * anchor.sigma_s};
}

double sigma_rms(const SigmaMap& map, SigmaRmsMode mode) {
  if (map.values.empty()) throw std::invalid_argument("sigma_rms: empty map");
  double sum = 0.0;
  for (float s : map.values.pixels) sum += static_cast<double>(s) * s;
  if (mode == SigmaRmsMode::kMean) sum /= static_cast<double>(map.values.size());
  return std::sqrt(sum);
}

GrayBurstFrame bayer_to_gray(const Image& raw, const NoiseParams& params) {
  params.validate();
  if (raw.height % 2 != 0 || raw.width % 2 != 0) {
    throw ImageError("bayer_to_gray: extents must be even, got " +
                     std::to_string(raw.height) + "x" + std::to_string(raw.width));
  }
  Image out(raw.height / 2, raw.width / 2);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      const double sum = static_cast<double>(raw.at(2 * y, 2 * x)) + raw.at(2 * y, 2 * x + 1) +
                         raw.at(2 * y + 1, 2 * x) + raw.at(2 * y + 1, 2 * x + 1);
      out.at(y, x) = static_cast<float>(0.25 * sum);
    }
  }
  return {std::move(out), NoiseParams{params.sigma_r / 2.0, params.sigma_s / 4.0}};
}

}  // namespace kpn
