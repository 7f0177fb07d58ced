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

#include <algorithm>
#include <cmath>
#include <set>

#include "kpn/noise_model.hpp"
#include "kpn/rng.hpp"
#include "test_support.hpp"

using namespace kpn;

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(const std::vector<float>& v) {
  double s = 0.0, sq = 0.0;
  for (float x : v) s += x;
  const double mean = s / static_cast<double>(v.size());
  for (float x : v) sq += (x - mean) * (x - mean);
  return {mean, sq / static_cast<double>(v.size() - 1)};
}

// Kolmogorov-Smirnov distance of samples against U(lo, hi).
double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("rng streams are counter addressable and reproducible") {
  CounterStream s(derive_key({1, 2, 3}));
  CHECK(s.bits(10) == CounterStream(derive_key({1, 2, 3})).bits(10));
  CHECK(s.bits(10) != s.bits(11));
  CHECK(derive_key({1, 2, 3}) != derive_key({3, 2, 1}));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_bits() == b.next_bits());
  Rng r(6);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.uniform_int(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK_THROWS(r.poisson(-1.0));
  CHECK(r.poisson(0.0) == 0);
}

TEST_CASE("poisson draws have matching mean and variance") {
  Rng r(7);
  const int n = 200000;
  double s = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(r.poisson(3.5));
    s += k;
    sq += k * k;
  }
  const double mean = s / n, var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(3.5).epsilon(0.01));
  CHECK(var == doctest::Approx(3.5).epsilon(0.02));
}

TEST_CASE("read-noise-only variance") {
  const Image clean(1000, 1000, 0.0f);
  const Image noisy = sample_noise(clean, {0.01, 0.37}, CounterStream(11));
  const Moments m = moments(noisy.pixels);
  CHECK(m.variance == doctest::Approx(1e-4).epsilon(0.02));
  CHECK(std::abs(m.mean) < 3.0 * 0.01 / 1000.0);
}

TEST_CASE("zero noise leaves the signal exact") {
  kpn::Rng rng(1);
  const Image clean = kpn::testing::random_image(17, 13, rng);
  CHECK(sample_noise(clean, {0.0, 0.0}, CounterStream(3)) == clean);
}

TEST_CASE("signal-dependent variance at y=0.5") {
  const Image clean(1000, 1000, 0.5f);
  const Image noisy = sample_noise(clean, {0.01, 0.001}, CounterStream(12));
  const Moments m = moments(noisy.pixels);
  CHECK(m.variance == doctest::Approx(6.0e-4).epsilon(0.02));
  CHECK(std::abs(m.mean - 0.5) < 3.0 * std::sqrt(6.0e-4 / 1e6));
}

TEST_CASE("noise statistics hold across signal levels") {
  for (double y : {0.05, 0.3, 0.9}) {
    for (NoiseParams p : {NoiseParams{0.02, 0.004}, NoiseParams{0.001, 0.01}}) {
      const Image clean(400, 400, static_cast<float>(y));
      const Image noisy = sample_noise(clean, p, CounterStream(derive_key({13, 1})));
      const Moments m = moments(noisy.pixels);
      const double want = p.sigma_r * p.sigma_r + p.sigma_s * static_cast<float>(y);
      CHECK(m.variance == doctest::Approx(want).epsilon(0.02));
      CHECK(std::abs(m.mean - static_cast<float>(y)) < 3.0 * std::sqrt(want / 160000.0));
    }
  }
}

TEST_CASE("noise is a pure function of key and pixel") {
  const Image clean(8, 8, 0.4f);
  const Image a = sample_noise(clean, {0.01, 0.01}, CounterStream(42));
  const Image b = sample_noise(clean, {0.01, 0.01}, CounterStream(42));
  const Image c = sample_noise(clean, {0.01, 0.01}, CounterStream(43));
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK_THROWS(sample_noise(Image(1, 1, -0.1f), {0.01, 0.0}, CounterStream(1)));
}

TEST_CASE("sigma map") {
  CHECK(estimate_sigma_map(Image(1, 1, -0.01f), {0.1, 0.5}).values.pixels[0] ==
        doctest::Approx(0.1));
  CHECK(estimate_sigma_map(Image(1, 1, 0.25f), {0.02, 0.004}).values.pixels[0] ==
        doctest::Approx(std::sqrt(1.4e-3)).epsilon(1e-6));
  CHECK(std::sqrt(1.4e-3) == doctest::Approx(0.0374166).epsilon(1e-6));
  kpn::Rng rng(2);
  const Image ref = kpn::testing::random_image(5, 5, rng, -0.5, 1.0);
  for (float v : estimate_sigma_map(ref, {0.03, 0.0}).values.pixels) {
    CHECK(v == doctest::Approx(0.03));
  }
  Image ramp(1, 50);
  for (std::size_t i = 0; i < 50; ++i) ramp.pixels[i] = -0.2f + 0.03f * static_cast<float>(i);
  const SigmaMap m = estimate_sigma_map(ramp, {0.02, 0.01});
  for (std::size_t i = 1; i < 50; ++i) {
    CHECK(m.values.pixels[i] >= m.values.pixels[i - 1]);
    CHECK(m.values.pixels[i] >= 0.02f);
  }
}

TEST_CASE("gain chain") {
  NoiseParams p = params_from_gains({1.0, 1.0, 0.0});
  CHECK(p.sigma_r == 0.0);
  CHECK(p.sigma_s == 1.0);
  p = params_from_gains({2.0, 3.0, 1.0});
  CHECK(p.sigma_s == 6.0);
  CHECK(p.sigma_r == 3.0);
  const NoiseParams q = params_from_gains({2.0, 6.0, 1.0});
  CHECK(q.sigma_s == 2.0 * p.sigma_s);
  CHECK(q.sigma_r == 2.0 * p.sigma_r);
  CHECK_THROWS(params_from_gains({0.0, 1.0, 1.0}));
  CHECK_THROWS(params_from_gains({1.0, -1.0, 1.0}));

  // Recorded signal y = g_d g_a q gives variance g_d^2 g_a^2 q + g_d^2 r^2.
  const double ga = 2.0, gd = 3.0, r = 0.5, quanta = 0.7;
  const NoiseParams v = params_from_gains({ga, gd, r});
  CHECK(v.variance(gd * ga * quanta) ==
        doctest::Approx(gd * gd * ga * ga * quanta + gd * gd * r * r));
}

TEST_CASE("sample_params degenerate and invalid ranges") {
  Rng rng(3);
  const NoiseSampling fixed{0.002, 0.002, 0.05, 0.05};
  for (int i = 0; i < 10; ++i) {
    const NoiseParams p = sample_params(fixed, rng);
    CHECK(p.sigma_r == 0.05);
    CHECK(p.sigma_s == 0.002);
  }
  CHECK_THROWS(sample_params(NoiseSampling{0.0, 1e-2, 1e-3, 1e-2}, rng));
  CHECK_THROWS(sample_params(NoiseSampling{1e-2, 1e-3, 1e-3, 1e-2}, rng));
}

TEST_CASE("sample_params is log-uniform") {
  Rng rng(4);
  const NoiseSampling ranges;
  const std::size_t n = 100000;
  std::vector<double> shot(n), read(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NoiseParams p = sample_params(ranges, rng);
    shot[i] = std::log10(p.sigma_s);
    read[i] = std::log10(p.sigma_r);
  }
  const double critical = 1.628 / std::sqrt(static_cast<double>(n));
  CHECK(ks_uniform(shot, std::log10(ranges.shot_min), std::log10(ranges.shot_max)) < critical);
  CHECK(ks_uniform(read, std::log10(ranges.read_min), std::log10(ranges.read_max)) < critical);
}

TEST_CASE("gain levels scale the anchor") {
  const NoiseParams p = gain_level_params(8.0, GainAnchor{1e-3, 3e-3});
  CHECK(p.sigma_s == doctest::Approx(8e-3));
  CHECK(p.sigma_r == doctest::Approx(2.4e-2));
  CHECK_THROWS(gain_level_params(0.0));
}

TEST_CASE("sigma_rms") {
  CHECK(sigma_rms({Image(2, 2, 0.1f)}) == doctest::Approx(0.2));
  CHECK(sigma_rms({Image(1, 1, 0.37f)}) == doctest::Approx(0.37));
  CHECK(sigma_rms({Image(3, 3, 0.0f)}) == 0.0);
  CHECK(sigma_rms({Image(2, 2, 0.1f)}, SigmaRmsMode::kMean) == doctest::Approx(0.1));
  CHECK_THROWS(sigma_rms({Image()}));
}

TEST_CASE("bayer_to_gray") {
  const GrayBurstFrame one = bayer_to_gray(Image(2, 2, 1.0f), {0.02, 0.004});
  CHECK(one.image.size() == 1);
  CHECK(one.image.pixels[0] == 1.0f);
  CHECK(one.params.sigma_r == doctest::Approx(0.01));
  CHECK(one.params.sigma_s == doctest::Approx(0.001));
  CHECK_THROWS_AS(bayer_to_gray(Image(3, 2), {}), ImageError);

  Image quad(2, 2, std::vector<float>{0.1f, 0.2f, 0.3f, 0.6f});
  CHECK(bayer_to_gray(quad, {}).image.pixels[0] == doctest::Approx(0.3));

  const NoiseParams p{0.02, 0.004};
  const Image clean(1000, 1000, 0.4f);
  const Image raw = sample_noise(clean, p, CounterStream(21));
  const GrayBurstFrame gray = bayer_to_gray(raw, p);
  const double in_var = moments(raw.pixels).variance;
  const double out_var = moments(gray.image.pixels).variance;
  CHECK(out_var / in_var == doctest::Approx(0.25).epsilon(0.03));
  CHECK(out_var == doctest::Approx(gray.params.variance(0.4)).epsilon(0.03));
}
