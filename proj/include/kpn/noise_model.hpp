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

#ifndef KPN_NOISE_MODEL_HPP_
#define KPN_NOISE_MODEL_HPP_

#include <cstdint>

#include "kpn/image.hpp"
#include "kpn/rng.hpp"

namespace kpn {

/// Read-noise std and shot-noise factor of the signal-dependent Gaussian
/// model: x ~ N(y, sigma_r^2 + sigma_s * y), signal normalized to [0, 1].
struct NoiseParams {
  double sigma_r = 0.0;
  double sigma_s = 0.0;

  void validate() const;
  double variance(double signal) const { return sigma_r * sigma_r + sigma_s * signal; }
  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Per-pixel noise standard deviation estimated from the reference frame.
struct SigmaMap {
  Image values;
};

/// Sensor gain chain: analog gain, digital gain, readout std (photoelectrons).
struct GainSetting {
  double analog_gain = 1.0;
  double digital_gain = 1.0;
  double read_std = 0.0;
};

/// Noise on clean; the value at pixel p depends only on (stream key, p).
/// Outputs are not clipped and may be negative.
Image sample_noise(const Image& clean, const NoiseParams& params,
                   const CounterStream& stream);

/// sigma_p = sqrt(sigma_r^2 + sigma_s * max(x_p, 0)).
SigmaMap estimate_sigma_map(const Image& reference, const NoiseParams& params);

/// sigma_s = g_d * g_a, sigma_r = g_d * r.
NoiseParams params_from_gains(const GainSetting& gains);

/// Log-uniform training rectangle for (sigma_s, sigma_r).
struct NoiseSampling {
  double shot_min = 1e-4;
  double shot_max = 1e-2;
  double read_min = 1e-3;
  double read_max = 3e-2;

  void validate() const;
};

NoiseParams sample_params(const NoiseSampling& ranges, Rng& rng);

/// Anchor noise level at gain 1; each doubling of gain doubles both values.
struct GainAnchor {
  double sigma_s = 1e-3;
  double sigma_r = 3e-3;
};

NoiseParams gain_level_params(double gain, const GainAnchor& anchor = {});

enum class SigmaRmsMode {
  kSum,   // sqrt(sum_p sigma_p^2), as the burst-level estimate is written
  kMean,  // sqrt(mean_p sigma_p^2)
};

double sigma_rms(const SigmaMap& map, SigmaRmsMode mode = SigmaRmsMode::kSum);

struct GrayBurstFrame {
  Image image;
  NoiseParams params;
};

/// Averages each 2x2 quad; noise of the mean is (sigma_r / 2, sigma_s / 4).
GrayBurstFrame bayer_to_gray(const Image& raw, const NoiseParams& params);

}  // namespace kpn

#endif  // KPN_NOISE_MODEL_HPP_
