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

#include "kpn/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace kpn {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  template <typename U>
  void le(U value) {
    using Bits = std::make_unsigned_t<U>;
    auto v = static_cast<Bits>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(v & 0xff));
      v = static_cast<Bits>(v >> 8);
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(what_ + ": truncated, need " + std::to_string(n) + " bytes, " +
                            std::to_string(bytes_.size() - pos_) + " remain",
                        pos_);
    }
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    using Bits = std::make_unsigned_t<U>;
    Bits v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v = static_cast<Bits>(v | (static_cast<Bits>(bytes_[pos_ + i]) << (8 * i)));
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void floats(std::size_t n, float* out) {
    if (n > (bytes_.size() - pos_) / 4) need(n * 4);
    for (std::size_t i = 0; i < n; ++i) out[i] = f32();
  }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError(what_ + ": " + msg, at);
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

// PNM header tokens; '#' comments run to end of line.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    if (start == pos_) throw FormatError("pnm: truncated header", pos_);
    return std::string(reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start);
  }
  std::size_t number() {
    const std::size_t at = pos_;
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw FormatError("pnm: expected a number, got '" + t + "'", at);
    }
    return std::stoul(t);
  }
  // Exactly one whitespace byte separates the header from binary data.
  std::size_t data_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("pnm: missing separator before raster", pos_);
    }
    return pos_ + 1;
  }
  std::size_t pos() const { return pos_; }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  PnmHeader header(bytes);
  const std::string magic = header.token();
  if (magic != "P5" && magic != "P2" && magic != "P6") {
    throw FormatError("pnm: unsupported magic '" + magic + "'", 0);
  }
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (width == 0 || height == 0) throw FormatError("pnm: zero extent", header.pos());
  if (maxval == 0 || maxval > 65535) {
    throw FormatError("pnm: maxval " + std::to_string(maxval) + " outside 1..65535", header.pos());
  }
  Image img(height, width);
  const double inv = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const std::size_t at = header.pos();
      const std::size_t v = header.number();
      if (v > maxval) throw FormatError("pnm: sample exceeds maxval", at);
      img.pixels[i] = static_cast<float>(v * inv);
    }
    return img;
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t start = header.data_start();
  const std::size_t need = img.size() * channels * sample_bytes;
  if (bytes.size() - start < need) {
    throw FormatError("pnm: raster truncated, need " + std::to_string(need) + " bytes, " +
                          std::to_string(bytes.size() - start) + " remain",
                      start);
  }
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t i = 0; i < img.size(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      std::size_t v = *p++;
      if (sample_bytes == 2) v = (v << 8) | *p++;  // big-endian samples
      sum += static_cast<double>(v);
    }
    img.pixels[i] = static_cast<float>(sum / static_cast<double>(channels) * inv);
  }
  return img;
}

Image read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pgm(const Image& img, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("pgm: bits must be 8 or 16");
  const std::size_t maxval = bits == 8 ? 255 : 65535;
  const std::string header = "P5\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size() * (bits / 8));
  for (float v : img.pixels) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    const auto q = static_cast<std::uint32_t>(std::lround(c * static_cast<double>(maxval)));
    if (bits == 16) out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img, int bits) {
  write_file(path, encode_pgm(img, bits));
}

std::vector<std::uint8_t> encode_burst(const Burst& burst) {
  burst.validate();
  if (burst.size() > 0xffff) throw std::invalid_argument("burst: too many frames for u16");
  ByteWriter w;
  w.raw("KPNB", 4);
  w.le<std::uint32_t>(kBurstVersion);
  w.le<std::uint16_t>(static_cast<std::uint16_t>(burst.size()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(burst.height()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(burst.width()));
  std::uint16_t flags = 0;
  if (burst.truth) flags |= 1u;
  if (burst.scale) flags |= 2u;
  w.le<std::uint16_t>(flags);
  w.f32(static_cast<float>(burst.params.sigma_r));
  w.f32(static_cast<float>(burst.params.sigma_s));
  w.f32(burst.scale.value_or(1.0f));
  for (const auto& f : burst.frames) {
    for (float v : f.pixels) w.f32(v);
  }
  if (burst.truth) {
    for (float v : burst.truth->pixels) w.f32(v);
  }
  return w.take();
}

Burst decode_burst(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "burst");
  if (r.str(4) != "KPNB") r.fail("bad magic", 0);
  const std::size_t version_at = r.pos();
  const auto version = r.le<std::uint32_t>();
  if (version != kBurstVersion) {
    r.fail("unsupported version " + std::to_string(version), version_at);
  }
  const std::size_t n_at = r.pos();
  const auto n = r.le<std::uint16_t>();
  const auto h = r.le<std::uint32_t>();
  const auto w = r.le<std::uint32_t>();
  if (n == 0 || h == 0 || w == 0) r.fail("zero frame count or extent", n_at);
  const std::size_t flags_at = r.pos();
  const auto flags = r.le<std::uint16_t>();
  if (flags & ~std::uint16_t{3}) r.fail("unknown flag bits", flags_at);
  Burst burst;
  burst.params.sigma_r = r.f32();
  burst.params.sigma_s = r.f32();
  const float scale = r.f32();
  if (flags & 2u) burst.scale = scale;
  if (!(burst.params.sigma_r >= 0.0) || !(burst.params.sigma_s >= 0.0)) {
    r.fail("negative noise parameter", r.pos() - 12);
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t planes = n + ((flags & 1u) ? 1u : 0u);
  for (std::size_t i = 0; i < planes; ++i) {
    Image img(h, w);
    r.floats(plane, img.pixels.data());
    if (i < n) {
      burst.frames.push_back(std::move(img));
    } else {
      burst.truth = std::move(img);
    }
  }
  if (!r.done()) r.fail("trailing bytes after last plane", r.pos());
  return burst;
}

void save_burst(const std::filesystem::path& path, const Burst& burst) {
  write_file(path, encode_burst(burst));
}

Burst load_burst(const std::filesystem::path& path) {
  try {
    return decode_burst(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

namespace {

constexpr const char* kFirstMoment = "adam.m:";
constexpr const char* kSecondMoment = "adam.v:";

void write_tensor(ByteWriter& w, const std::string& name, const Shape& shape,
                  std::span<const float> data) {
  w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.raw(name.data(), name.size());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (float v : data) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.config.validate();
  ByteWriter w;
  w.raw("KPNC", 4);
  w.le<std::uint32_t>(kCheckpointVersion);
  ByteWriter block;
  block.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.config.levels));
  block.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.config.kernel_size));
  block.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.config.frames));
  block.le<std::uint8_t>(ckpt.config.noise_aware ? 1 : 0);
  block.le<std::uint8_t>(static_cast<std::uint8_t>(ckpt.config.head));
  block.le<std::uint16_t>(0);
  for (std::size_t width : ckpt.config.widths) {
    block.le<std::uint32_t>(static_cast<std::uint32_t>(width));
  }
  block.le<std::int64_t>(ckpt.step);
  const auto block_bytes = block.take();
  w.le<std::uint32_t>(static_cast<std::uint32_t>(block_bytes.size()));
  w.raw(block_bytes.data(), block_bytes.size());

  const std::size_t count = ckpt.params.size() * (ckpt.adam ? 3 : 1);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(count));
  for (const auto& [name, t] : ckpt.params) write_tensor(w, name, t.shape(), t.values());
  if (ckpt.adam) {
    if (ckpt.adam->first.size() != ckpt.params.size() ||
        ckpt.adam->second.size() != ckpt.params.size()) {
      throw std::invalid_argument("checkpoint: optimizer state does not match params");
    }
    std::size_t i = 0;
    for (const auto& [name, t] : ckpt.params) {
      write_tensor(w, kFirstMoment + name, t.shape(), ckpt.adam->first[i++]);
    }
    i = 0;
    for (const auto& [name, t] : ckpt.params) {
      write_tensor(w, kSecondMoment + name, t.shape(), ckpt.adam->second[i++]);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.str(4) != "KPNC") r.fail("bad magic", 0);
  const std::size_t version_at = r.pos();
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version), version_at);
  }
  const std::size_t block_at = r.pos();
  const auto block_len = r.le<std::uint32_t>();
  r.need(block_len);
  const std::size_t block_start = r.pos();

  Checkpoint ckpt;
  ckpt.config.levels = r.le<std::uint32_t>();
  ckpt.config.kernel_size = r.le<std::uint32_t>();
  ckpt.config.frames = r.le<std::uint32_t>();
  const std::size_t flag_at = r.pos();
  const auto noise_aware = r.le<std::uint8_t>();
  const auto head = r.le<std::uint8_t>();
  if (noise_aware > 1) r.fail("noise_aware flag must be 0 or 1", flag_at);
  if (head > 1) r.fail("unknown head kind " + std::to_string(head), flag_at + 1);
  ckpt.config.noise_aware = noise_aware == 1;
  ckpt.config.head = static_cast<NetHead>(head);
  if (r.le<std::uint16_t>() != 0) r.fail("reserved field must be zero", r.pos() - 2);
  if (ckpt.config.levels > 64) r.fail("implausible level count", block_start);
  ckpt.config.widths.clear();
  for (std::size_t l = 0; l < ckpt.config.levels; ++l) {
    ckpt.config.widths.push_back(r.le<std::uint32_t>());
  }
  ckpt.step = r.le<std::int64_t>();
  if (r.pos() - block_start != block_len) {
    r.fail("config block length " + std::to_string(block_len) + " disagrees with contents",
           block_at);
  }
  try {
    ckpt.config.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what(), block_start);
  }

  // Expected layout comes from the config; names and shapes must match it.
  const ModelParams<float> layout = init_params<float>(ckpt.config, 0, InitMode::kZero);
  const std::size_t count_at = r.pos();
  const auto count = r.le<std::uint32_t>();
  if (count != layout.size() && count != 3 * layout.size()) {
    r.fail("tensor count " + std::to_string(count) + " does not match config (" +
               std::to_string(layout.size()) + " params)",
           count_at);
  }
  AdamState<float> adam;
  auto layout_it = layout.begin();
  for (std::uint32_t i = 0; i < count; ++i) {
    if (layout_it == layout.end()) layout_it = layout.begin();
    const auto& [expected_name, expected] = *layout_it++;
    const std::size_t name_at = r.pos();
    const auto name_len = r.le<std::uint32_t>();
    const std::string name = r.str(name_len);
    const std::size_t section = i / layout.size();
    const std::string want = (section == 0   ? std::string()
                              : section == 1 ? std::string(kFirstMoment)
                                             : std::string(kSecondMoment)) +
                             expected_name;
    if (name != want) r.fail("tensor '" + name + "' where '" + want + "' expected", name_at);
    const std::size_t dims_at = r.pos();
    const auto ndim = r.le<std::uint32_t>();
    Shape shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(r.le<std::uint32_t>());
    if (shape != expected.shape()) {
      r.fail("tensor '" + name + "' has shape " + shape_string(shape) + ", config implies " +
                 shape_string(expected.shape()),
             dims_at);
    }
    std::vector<float> data(expected.size());
    r.floats(data.size(), data.data());
    if (section == 0) {
      ckpt.params.add(name, Tensor<float>::parameter(shape, std::move(data)));
    } else if (section == 1) {
      adam.first.push_back(std::move(data));
    } else {
      adam.second.push_back(std::move(data));
    }
  }
  if (!r.done()) r.fail("trailing bytes after last tensor", r.pos());
  if (count == 3 * layout.size()) {
    adam.step = ckpt.step;
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

Checkpoint checkpoint_from_state(const NetConfig& config, const TrainState& state) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.step = state.step;
  ckpt.params = convert_params<float, float>(state.params);
  ckpt.adam = state.adam;
  ckpt.adam->step = state.step;
  return ckpt;
}

TrainState state_from_checkpoint(const Checkpoint& ckpt) {
  TrainState state;
  state.params = convert_params<float, float>(ckpt.params);
  state.adam = ckpt.adam ? *ckpt.adam : AdamState<float>::zeros_like(state.params);
  state.step = ckpt.step;
  state.adam.step = ckpt.step;
  return state;
}

}  // namespace kpn
