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

#include <doctest.h>

#include <cmath>

#include "kpn/metrics.hpp"
#include "kpn/noise_model.hpp"
#include "test_support.hpp"

using namespace kpn;

TEST_CASE("psnr values") {
  Rng rng(1);
  const Image a = kpn::testing::random_image(16, 16, rng);
  CHECK(psnr(a, a) == kPsnrCeiling);
  Image b(10, 10, 0.0f), c(10, 10, 0.1f);
  CHECK(psnr(b, c) == doctest::Approx(20.0).epsilon(1e-6));
  Image d(1, 2, std::vector<float>{0.0f, 0.0f}), e(1, 2, std::vector<float>{0.0f, std::sqrt(0.02f)});
  CHECK(psnr(d, e) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(Image(2, 2), Image(2, 3)), ImageError);
}

TEST_CASE("psnr is symmetric and falls with noise") {
  Rng rng(2);
  const Image a = kpn::testing::random_image(32, 32, rng);
  double prev = kPsnrCeiling;
  for (double s : {0.001, 0.01, 0.03, 0.1}) {
    const Image n = sample_noise(a, {s, 0.0}, CounterStream(7));
    CHECK(psnr(a, n) == psnr(n, a));
    CHECK(psnr(a, n) < prev);
    prev = psnr(a, n);
  }
}

TEST_CASE("ssim values") {
  Rng rng(3);
  const Image a = kpn::testing::random_image(20, 24, rng);
  CHECK(ssim(a, a) == 1.0);
  Image bin(32, 32), inv(32, 32);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    bin.pixels[i] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    inv.pixels[i] = 1.0f - bin.pixels[i];
  }
  CHECK(ssim(bin, inv) < 0.1);
  const double m1 = 0.4, m2 = 0.5, c1 = 1e-4;
  const double want = (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
  CHECK(ssim(Image(16, 16, 0.4f), Image(16, 16, 0.5f)) == doctest::Approx(want).epsilon(1e-6));
  const Image b = kpn::testing::random_image(20, 24, rng);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  CHECK(ssim(a, b) <= 1.0);
  CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), ImageError);
}

TEST_CASE("display image restores the white level before the curve") {
  const Image lin(2, 2, 0.25f);
  const Image shown = display_image(lin, 0.5);
  CHECK(shown.pixels[0] == doctest::Approx(kpn::testing::srgb_oracle(0.5)));
  CHECK_THROWS(display_image(lin, 0.0));
}
