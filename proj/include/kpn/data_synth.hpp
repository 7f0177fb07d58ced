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

#ifndef KPN_DATA_SYNTH_HPP_
#define KPN_DATA_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "kpn/image.hpp"
#include "kpn/noise_model.hpp"
#include "kpn/rng.hpp"

namespace kpn {

/// Synthetic burst generation settings. Shift bounds are in pixels after
/// downsampling; crops are displaced by whole pixels before downsampling.
struct SynthConfig {
  std::size_t frames = 8;
  std::size_t downsample = 4;
  std::size_t max_shift = 2;
  std::size_t fail_shift = 16;
  double failure_rate = 1.5;  // Poisson rate for the misaligned-frame count
  double scale_min = 0.1;
  double scale_max = 1.0;
  std::size_t patch = 128;
  NoiseSampling noise;

  /// N=4, 32x32 patches; everything else at the defaults.
  static SynthConfig mini();

  void validate() const;
  /// Smallest square source extent make_burst accepts.
  std::size_t min_source_extent() const;
};

/// Pre-downsample crop displacement of a frame relative to the reference.
struct FrameOffset {
  std::int64_t dy = 0;
  std::int64_t dx = 0;
  friend bool operator==(const FrameOffset&, const FrameOffset&) = default;
};

struct Misalignment {
  std::vector<FrameOffset> offsets;
  std::vector<bool> failed;
  std::int64_t misaligned_count = 0;  // n ~ Poisson(rate)
};

/// N linear frames; frame 0 is the reference.
struct Burst {
  std::vector<Image> frames;
  NoiseParams params;
  std::optional<float> scale;  // exposure scale s; absent means white level 1
  std::optional<Image> truth;  // clean reference, same exposure as frames
  std::vector<FrameOffset> offsets;  // diagnostic, pre-downsample pixels
  std::vector<bool> failed;
  std::size_t downsample = 1;

  std::size_t size() const { return frames.size(); }
  std::size_t height() const { return frames.empty() ? 0 : frames[0].height; }
  std::size_t width() const { return frames.empty() ? 0 : frames[0].width; }
  float white_level() const { return scale.value_or(1.0f); }

  /// Checks the shared-extent and reference-offset invariants.
  void validate() const;
};

/// Inverse of the sRGB transfer curve on [0, 1].
double invert_gamma(double x);
Image invert_gamma(const Image& img);

/// Mean of each factor x factor block.
Image box_downsample(const Image& img, std::size_t factor);

Misalignment sample_misalignments(const SynthConfig& cfg, Rng& rng);

/// Test and evaluation hooks that pin parts of the random pipeline.
struct BurstOverrides {
  std::optional<NoiseParams> noise;
  std::optional<std::vector<FrameOffset>> offsets;
  std::optional<double> scale;
};

/// Jittered crops, box downsample, gamma inversion, exposure scaling and
/// noise, in that order. Deterministic in (source, cfg, seed, burst_id).
Burst make_burst(const Image& source, const SynthConfig& cfg, std::uint64_t seed,
                 std::uint64_t burst_id, const BurstOverrides& overrides = {});

/// Clean display-space test pattern in [0, 1]: gradients, shapes, and
/// oriented gratings at several scales.
Image procedural_scene(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace kpn

#endif  // KPN_DATA_SYNTH_HPP_
