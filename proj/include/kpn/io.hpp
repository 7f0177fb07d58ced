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

#ifndef KPN_IO_HPP_
#define KPN_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpn/data_synth.hpp"
#include "kpn/image.hpp"
#include "kpn/kpn_net.hpp"
#include "kpn/trainer.hpp"

namespace kpn {

/// Malformed or truncated file; offset is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Binary (P5) or ASCII (P2) PGM with maxval up to 65535, normalized to
/// [0, 1]; binary PPM (P6) is reduced to gray by the channel mean.
Image decode_pnm(std::span<const std::uint8_t> bytes);
Image read_pgm(const std::filesystem::path& path);

/// Binary PGM of values clamped to [0, 1], 8 or 16 bits per sample.
std::vector<std::uint8_t> encode_pgm(const Image& img, int bits);
void write_pgm(const std::filesystem::path& path, const Image& img, int bits);

// Burst container, little-endian:
//   "KPNB" | u32 version=1 | u16 N | u32 H | u32 W | u16 flags
//   | f32 sigma_r | f32 sigma_s | f32 scale | N planes | [truth plane]
// flags bit0: truth plane present, bit1: scale recorded.
inline constexpr std::uint32_t kBurstVersion = 1;
std::vector<std::uint8_t> encode_burst(const Burst& burst);
Burst decode_burst(std::span<const std::uint8_t> bytes);
void save_burst(const std::filesystem::path& path, const Burst& burst);
Burst load_burst(const std::filesystem::path& path);

// Checkpoint archive, little-endian:
//   "KPNC" | u32 version=1 | u32 config bytes | config block | u32 tensor count
//   | per tensor: u32 name length, UTF-8 name, u32 ndim, u32 dims[ndim], f32 data
// Config block: u32 levels | u32 K | u32 N | u8 noise_aware | u8 head
//   | u16 reserved | u32 widths[levels] | i64 training step.
// Optimizer moments are stored as tensors named "adam.m:<param>", "adam.v:<param>".
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetConfig config;
  std::int64_t step = 0;
  ModelParams<float> params;
  std::optional<AdamState<float>> adam;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint checkpoint_from_state(const NetConfig& config, const TrainState& state);
TrainState state_from_checkpoint(const Checkpoint& ckpt);

}  // namespace kpn

#endif  // KPN_IO_HPP_
