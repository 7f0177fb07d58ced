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

#ifndef KPN_METRICS_HPP_
#define KPN_METRICS_HPP_

#include <string>

#include "kpn/image.hpp"

namespace kpn {

inline constexpr double kPsnrCeiling = 99.0;

struct MetricsRow {
  std::string method;
  std::string gain;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// 10 log10(peak^2 / MSE), reporting kPsnrCeiling when the images match.
/// Callers pass gamma-corrected, white-level-restored images.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean single-scale SSIM over all valid 11x11 Gaussian windows (sigma 1.5),
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
double ssim(const Image& a, const Image& b, double peak = 1.0);

/// Gamma(x / white_level) per pixel: the display image metrics compare.
Image display_image(const Image& linear, double white_level);

}  // namespace kpn

#endif  // KPN_METRICS_HPP_
