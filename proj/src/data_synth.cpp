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

#include "kpn/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kpn {

namespace {

constexpr double kSrgbA = 0.055;
constexpr double kSrgbLinearLimit = 0.0031308;

// Stream tags keep independent draws of one burst apart.
constexpr std::uint64_t kLayoutTag = 0x4c41594fULL;
constexpr std::uint64_t kNoiseTag = 0x4e4f4953ULL;

}  // namespace

SynthConfig SynthConfig::mini() {
  SynthConfig cfg;
  cfg.frames = 4;
  cfg.patch = 32;
  return cfg;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("synth config: " + what);
  };
  if (frames < 1) fail("frames must be >= 1");
  if (downsample < 1) fail("downsample must be >= 1");
  if (patch < 1) fail("patch must be >= 1");
  if (max_shift >= fail_shift) fail("max_shift must be < fail_shift");
  if (!(failure_rate >= 0.0)) fail("failure_rate must be >= 0");
  if (!(scale_min > 0.0) || scale_min > scale_max || scale_max > 1.0) {
    fail("scale range must satisfy 0 < min <= max <= 1");
  }
  noise.validate();
}

std::size_t SynthConfig::min_source_extent() const {
  return patch * downsample + 2 * downsample * fail_shift;
}

void Burst::validate() const {
  if (frames.empty()) throw std::invalid_argument("burst: no frames");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    require_same_extent(frames[0], frames[i], "burst frame " + std::to_string(i));
  }
  if (truth) require_same_extent(frames[0], *truth, "burst truth");
  if (!offsets.empty() && !(offsets[0] == FrameOffset{})) {
    throw std::invalid_argument("burst: reference offset must be (0, 0)");
  }
  params.validate();
}

double invert_gamma(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("invert_gamma: value " + std::to_string(x) +
                                " outside [0, 1]");
  }
  if (x <= 12.92 * kSrgbLinearLimit) return x / 12.92;
  return std::pow((x + kSrgbA) / (1.0 + kSrgbA), 2.4);
}

Image invert_gamma(const Image& img) {
  Image out(img.height, img.width);
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.pixels[i] = static_cast<float>(invert_gamma(static_cast<double>(img.pixels[i])));
  }
  return out;
}

Image box_downsample(const Image& img, std::size_t factor) {
  if (factor == 0 || img.height % factor != 0 || img.width % factor != 0) {
    throw ImageError("box_downsample: extent " + std::to_string(img.height) +
                     "x" + std::to_string(img.width) +
                     " not divisible by factor " + std::to_string(factor));
  }
  if (factor == 1) return img;
  Image out(img.height / factor, img.width / factor);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      double sum = 0.0;
      for (std::size_t dy = 0; dy < factor; ++dy) {
        const float* row = img.pixels.data() + (y * factor + dy) * img.width + x * factor;
        for (std::size_t dx = 0; dx < factor; ++dx) sum += row[dx];
      }
      out.at(y, x) = static_cast<float>(sum * inv);
    }
  }
  return out;
}

Misalignment sample_misalignments(const SynthConfig& cfg, Rng& rng) {
  Misalignment m;
  m.offsets.resize(cfg.frames);
  m.failed.assign(cfg.frames, false);
  m.misaligned_count = rng.poisson(cfg.failure_rate);
  const double p_fail = std::min(
      1.0, static_cast<double>(m.misaligned_count) / static_cast<double>(cfg.frames));
  const auto small = static_cast<std::int64_t>(cfg.downsample * cfg.max_shift);
  const auto large = static_cast<std::int64_t>(cfg.downsample * cfg.fail_shift);
  for (std::size_t i = 1; i < cfg.frames; ++i) {
    FrameOffset base{rng.uniform_int(-small, small), rng.uniform_int(-small, small)};
    const bool failed = rng.uniform() < p_fail;
    if (failed) {
      base = {rng.uniform_int(-large, large), rng.uniform_int(-large, large)};
    }
    m.offsets[i] = base;
    m.failed[i] = failed;
  }
  return m;
}

Burst make_burst(const Image& source, const SynthConfig& cfg, std::uint64_t seed,
                 std::uint64_t burst_id, const BurstOverrides& overrides) {
  cfg.validate();
  Rng rng = Rng::derived({seed, burst_id, kLayoutTag});

  Misalignment layout;
  if (overrides.offsets) {
    if (overrides.offsets->size() != cfg.frames) {
      throw std::invalid_argument("make_burst: offset override has " +
                                  std::to_string(overrides.offsets->size()) +
                                  " entries for " + std::to_string(cfg.frames) +
                                  " frames");
    }
    layout.offsets = *overrides.offsets;
    layout.offsets[0] = {};
    layout.failed.assign(cfg.frames, false);
  }

  std::int64_t margin = static_cast<std::int64_t>(cfg.downsample * cfg.fail_shift);
  if (overrides.offsets) {
    margin = 0;
    for (const auto& o : layout.offsets) {
      margin = std::max({margin, std::abs(o.dy), std::abs(o.dx)});
    }
  }
  const auto extent = static_cast<std::int64_t>(cfg.patch * cfg.downsample);
  const std::int64_t need = extent + 2 * margin;
  if (static_cast<std::int64_t>(source.height) < need ||
      static_cast<std::int64_t>(source.width) < need) {
    throw ImageError("make_burst: source " + std::to_string(source.height) + "x" +
                     std::to_string(source.width) + " smaller than required " +
                     std::to_string(need) + "x" + std::to_string(need));
  }
  const std::int64_t top = rng.uniform_int(
      margin, static_cast<std::int64_t>(source.height) - extent - margin);
  const std::int64_t left = rng.uniform_int(
      margin, static_cast<std::int64_t>(source.width) - extent - margin);
  if (!overrides.offsets) layout = sample_misalignments(cfg, rng);

  const double s = overrides.scale ? *overrides.scale
                                   : rng.uniform(cfg.scale_min, cfg.scale_max);
  const NoiseParams params =
      overrides.noise ? *overrides.noise : sample_params(cfg.noise, rng);
  params.validate();

  Burst burst;
  burst.params = params;
  burst.scale = static_cast<float>(s);
  burst.offsets = layout.offsets;
  burst.failed = layout.failed;
  burst.downsample = cfg.downsample;
  burst.frames.reserve(cfg.frames);
  for (std::size_t i = 0; i < cfg.frames; ++i) {
    const auto& o = layout.offsets[i];
    Image clean = invert_gamma(box_downsample(
        crop(source, top + o.dy, left + o.dx, static_cast<std::size_t>(extent),
             static_cast<std::size_t>(extent)),
        cfg.downsample));
    for (auto& v : clean.pixels) v = static_cast<float>(v * s);
    const CounterStream noise(derive_key({seed, burst_id, i, kNoiseTag}));
    burst.frames.push_back(sample_noise(clean, params, noise));
    if (i == 0) burst.truth = std::move(clean);
  }
  return burst;
}

Image procedural_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng = Rng::derived({seed, 0x5343454eULL});
  Image img(height, width);
  const double h = static_cast<double>(height), w = static_cast<double>(width);

  const double g0 = rng.uniform(0.1, 0.9), gy = rng.uniform(-0.4, 0.4),
               gx = rng.uniform(-0.4, 0.4);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      img.at(y, x) = static_cast<float>(g0 + gy * (y / h - 0.5) + gx * (x / w - 0.5));
    }
  }

  const double extent = std::min(h, w);
  const int shapes = 60 + static_cast<int>(rng.uniform_int(0, 40));
  for (int n = 0; n < shapes; ++n) {
    const int kind = static_cast<int>(rng.uniform_int(0, 2));
    const double cy = rng.uniform(0.0, h), cx = rng.uniform(0.0, w);
    // Sizes are log-uniform so both large regions and fine detail appear.
    const double ry = extent * std::exp(rng.uniform(std::log(0.01), std::log(0.2)));
    const double rx = extent * std::exp(rng.uniform(std::log(0.01), std::log(0.2)));
    const double level = rng.uniform(0.0, 1.0);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(0.15, 0.8);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const auto y0 = static_cast<std::size_t>(std::max(0.0, cy - std::max(ry, rx) * 1.5));
    const auto y1 = static_cast<std::size_t>(std::min(h, cy + std::max(ry, rx) * 1.5));
    const auto x0 = static_cast<std::size_t>(std::max(0.0, cx - std::max(ry, rx) * 1.5));
    const auto x1 = static_cast<std::size_t>(std::min(w, cx + std::max(ry, rx) * 1.5));
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) {
        const double py = y + 0.5 - cy, px = x + 0.5 - cx;
        const double u = (ca * px + sa * py) / rx, v = (-sa * px + ca * py) / ry;
        bool inside = false;
        double value = level;
        switch (kind) {
          case 0:
            inside = std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
            break;
          case 1:
            inside = u * u + v * v <= 1.0;
            break;
          default:
            inside = u * u + v * v <= 1.0;
            value = 0.5 + 0.5 * (2.0 * level - 1.0) * std::sin(freq * (ca * px + sa * py));
            break;
        }
        if (inside) img.at(y, x) = static_cast<float>(value);
      }
    }
  }
  for (auto& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

}  // namespace kpn
