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

#include "kpn/kpn_net.hpp"

#include <cmath>
#include <stdexcept>

#include "kpn/ops.hpp"
#include "kpn/rng.hpp"

namespace kpn {

NetConfig NetConfig::full() { return NetConfig{}; }

NetConfig NetConfig::mini() {
  NetConfig cfg;
  cfg.levels = 2;
  cfg.widths = {32, 64};
  cfg.kernel_size = 3;
  cfg.frames = 4;
  return cfg;
}

void NetConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("net config: " + what);
  };
  if (levels < 1) fail("levels must be >= 1");
  if (widths.size() != levels) {
    fail("widths has " + std::to_string(widths.size()) + " entries for " +
         std::to_string(levels) + " levels");
  }
  for (std::size_t w : widths) {
    if (w == 0) fail("widths must be positive");
  }
  if (kernel_size % 2 == 0) fail("kernel_size must be odd");
  if (frames < 1) fail("frames must be >= 1");
}

void NetConfig::validate_extent(std::size_t height, std::size_t width) const {
  const std::size_t m = std::size_t{1} << levels;
  if (height % m != 0 || width % m != 0) {
    throw ShapeError("net: input extent " + std::to_string(height) + "x" +
                     std::to_string(width) + " is not divisible by 2^levels = " +
                     std::to_string(m));
  }
}

std::size_t NetConfig::output_channels() const {
  return head == NetHead::kKernelPrediction ? kernel_size * kernel_size * frames : 1;
}

template <typename T>
void ModelParams<T>::add(std::string name, Tensor<T> tensor) {
  if (contains(name)) throw std::invalid_argument("params: duplicate name " + name);
  entries_.emplace_back(std::move(name), std::move(tensor));
}

template <typename T>
bool ModelParams<T>::contains(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return true;
  }
  return false;
}

template <typename T>
const Tensor<T>& ModelParams<T>::at(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("params: no tensor named " + name);
}

template <typename T>
Tensor<T>& ModelParams<T>::at(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("params: no tensor named " + name);
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

namespace {

struct LayerSpec {
  std::string name;
  std::size_t in, out, k;
};

// Parameter layout shared by init_params and forward.
std::vector<LayerSpec> layer_specs(const NetConfig& cfg) {
  std::vector<LayerSpec> specs;
  std::size_t in = cfg.input_channels();
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::string p = "enc" + std::to_string(l);
    specs.push_back({p + ".conv0", in, cfg.widths[l], 3});
    specs.push_back({p + ".conv1", cfg.widths[l], cfg.widths[l], 3});
    in = cfg.widths[l];
  }
  specs.push_back({"mid.conv0", in, in, 3});
  specs.push_back({"mid.conv1", in, in, 3});
  for (std::size_t l = cfg.levels; l-- > 0;) {
    const std::string p = "dec" + std::to_string(l);
    specs.push_back({p + ".conv0", in + cfg.widths[l], cfg.widths[l], 3});
    specs.push_back({p + ".conv1", cfg.widths[l], cfg.widths[l], 3});
    in = cfg.widths[l];
  }
  if (cfg.head == NetHead::kDirectSynthesis) {
    for (int i = 0; i < 3; ++i) {
      specs.push_back({"direct.conv" + std::to_string(i), in, in, 3});
    }
  }
  specs.push_back({"head", in, cfg.output_channels(), 1});
  return specs;
}

template <typename T>
Tensor<T> conv_relu(const Tensor<T>& x, const ModelParams<T>& params, const std::string& name) {
  return relu(conv2d(x, params.at(name + ".weight"), params.at(name + ".bias")));
}

template <typename T>
Tensor<T> trunk(const NetInput<T>& input, const ModelParams<T>& params, const NetConfig& cfg) {
  cfg.validate();
  if (input.frames.rank() != 3 || input.frames.dim(0) != cfg.frames) {
    throw ShapeError("net: frames must be [" + std::to_string(cfg.frames) +
                     ",H,W], got " + shape_string(input.frames.shape()));
  }
  const std::size_t h = input.frames.dim(1), w = input.frames.dim(2);
  cfg.validate_extent(h, w);
  if (cfg.noise_aware != input.sigma.has_value()) {
    throw std::invalid_argument(cfg.noise_aware
                                    ? "net: noise-aware config requires a sigma map"
                                    : "net: blind config must not receive a sigma map");
  }
  Tensor<T> x = input.frames;
  if (input.sigma) {
    if (input.sigma->shape() != Shape{h, w}) {
      throw ShapeError("net: sigma map " + shape_string(input.sigma->shape()) +
                       " does not match frames " + shape_string(input.frames.shape()));
    }
    x = concat_channels(x, reshape(*input.sigma, {1, h, w}));
  }
  std::vector<Tensor<T>> skips;
  for (std::size_t l = 0; l < cfg.levels; ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = conv_relu(conv_relu(x, params, p + ".conv0"), params, p + ".conv1");
    skips.push_back(x);
    x = avg_pool2(x);
  }
  x = conv_relu(conv_relu(x, params, "mid.conv0"), params, "mid.conv1");
  for (std::size_t l = cfg.levels; l-- > 0;) {
    const std::string p = "dec" + std::to_string(l);
    x = concat_channels(upsample_bilinear2(x), skips[l]);
    x = conv_relu(conv_relu(x, params, p + ".conv0"), params, p + ".conv1");
  }
  return x;
}

}  // namespace

template <typename T>
ModelParams<T> init_params(const NetConfig& cfg, std::uint64_t seed, InitMode mode) {
  cfg.validate();
  ModelParams<T> params;
  std::uint64_t layer = 0;
  for (const auto& spec : layer_specs(cfg)) {
    const std::size_t fan_in = spec.in * spec.k * spec.k;
    std::vector<T> w(spec.out * fan_in, T(0));
    if (mode == InitMode::kHeGaussian) {
      const CounterStream stream(derive_key({seed, layer, 0x57454947ULL}));
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<T>(stddev * stream.normal(i));
      }
    }
    params.add(spec.name + ".weight",
               Tensor<T>::parameter({spec.out, spec.in, spec.k, spec.k}, std::move(w)));
    params.add(spec.name + ".bias",
               Tensor<T>::parameter({spec.out}, std::vector<T>(spec.out, T(0))));
    ++layer;
  }
  return params;
}

template <typename T>
KernelStack<T> forward(const NetInput<T>& input, const ModelParams<T>& params,
                       const NetConfig& cfg) {
  if (cfg.head != NetHead::kKernelPrediction) {
    throw std::invalid_argument("net: forward() needs the kernel-prediction head");
  }
  Tensor<T> features = trunk(input, params, cfg);
  const std::size_t h = features.dim(1), w = features.dim(2);
  const std::size_t n = cfg.frames, kk = cfg.kernel_size * cfg.kernel_size;
  // Channel c = i * K^2 + tap; move taps innermost: [N, K^2, HW] -> [N, HW, K^2].
  Tensor<T> out = conv2d(features, params.at("head.weight"), params.at("head.bias"));
  out = swap_last_axes(reshape(out, {n, kk, h * w}));
  return KernelStack<T>(reshape(out, {n, h, w, kk}));
}

template <typename T>
Tensor<T> forward_direct(const NetInput<T>& input, const ModelParams<T>& params,
                         const NetConfig& cfg) {
  if (cfg.head != NetHead::kDirectSynthesis) {
    throw std::invalid_argument("net: forward_direct() needs the direct-synthesis head");
  }
  Tensor<T> x = trunk(input, params, cfg);
  for (int i = 0; i < 3; ++i) x = conv_relu(x, params, "direct.conv" + std::to_string(i));
  x = conv2d(x, params.at("head.weight"), params.at("head.bias"));
  return reshape(x, {x.dim(1), x.dim(2)});
}

template <typename T>
NetInput<T> make_net_input(const Burst& burst, const NetConfig& cfg, double sigma_scale) {
  NetInput<T> input{burst_tensor<T>(burst), std::nullopt};
  if (cfg.noise_aware) {
    const SigmaMap map = estimate_sigma_map(burst.frames[0], burst.params);
    std::vector<T> values(map.values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<T>(sigma_scale * map.values.pixels[i]);
    }
    input.sigma = Tensor<T>::constant({burst.height(), burst.width()}, std::move(values));
  }
  return input;
}

KernelStack<float> forward(const Burst& burst, const std::optional<SigmaMap>& sigma,
                           const ModelParams<float>& params, const NetConfig& cfg) {
  NetInput<float> input{burst_tensor<float>(burst), std::nullopt};
  if (sigma) {
    input.sigma = Tensor<float>::constant({sigma->values.height, sigma->values.width},
                                          sigma->values.pixels);
  }
  return forward(input, params, cfg);
}

template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params) {
  ModelParams<To> out;
  for (const auto& [name, t] : params) {
    std::vector<To> values(t.values().begin(), t.values().end());
    out.add(name, Tensor<To>::parameter(t.shape(), std::move(values)));
  }
  return out;
}

template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<float> init_params<float>(const NetConfig&, std::uint64_t, InitMode);
template ModelParams<double> init_params<double>(const NetConfig&, std::uint64_t, InitMode);
template KernelStack<float> forward(const NetInput<float>&, const ModelParams<float>&,
                                    const NetConfig&);
template KernelStack<double> forward(const NetInput<double>&, const ModelParams<double>&,
                                     const NetConfig&);
template Tensor<float> forward_direct(const NetInput<float>&, const ModelParams<float>&,
                                      const NetConfig&);
template Tensor<double> forward_direct(const NetInput<double>&, const ModelParams<double>&,
                                       const NetConfig&);
template NetInput<float> make_net_input<float>(const Burst&, const NetConfig&, double);
template NetInput<double> make_net_input<double>(const Burst&, const NetConfig&, double);
template ModelParams<double> convert_params<double, float>(const ModelParams<float>&);
template ModelParams<float> convert_params<float, double>(const ModelParams<double>&);
template ModelParams<float> convert_params<float, float>(const ModelParams<float>&);

}  // namespace kpn
