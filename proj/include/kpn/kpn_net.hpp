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

#ifndef KPN_KPN_NET_HPP_
#define KPN_KPN_NET_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kpn/data_synth.hpp"
#include "kpn/kernel_engine.hpp"
#include "kpn/noise_model.hpp"
#include "kpn/tensor.hpp"

namespace kpn {

enum class NetHead : std::uint8_t {
  kKernelPrediction = 0,
  kDirectSynthesis = 1,
};

/// U-shaped encoder-decoder. Each encoder level is two 3x3 conv+ReLU layers
/// followed by 2x average pooling; a two-layer bottleneck runs at the coarsest
/// scale; each decoder level upsamples 2x, concatenates the matching encoder
/// features and applies two 3x3 conv+ReLU layers.
struct NetConfig {
  std::size_t levels = 4;
  std::vector<std::size_t> widths = {64, 128, 256, 512};
  std::size_t kernel_size = 5;
  std::size_t frames = 8;
  bool noise_aware = true;
  NetHead head = NetHead::kKernelPrediction;

  static NetConfig full();
  /// levels=2, widths {32, 64}, K=3, N=4.
  static NetConfig mini();

  void validate() const;
  /// Throws when an input of this extent cannot pass the pooling stages.
  void validate_extent(std::size_t height, std::size_t width) const;
  std::size_t input_channels() const { return frames + (noise_aware ? 1 : 0); }
  /// K^2 N for the kernel head, 1 for direct synthesis.
  std::size_t output_channels() const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Named parameter tensors in a fixed creation order.
template <typename T>
class ModelParams {
 public:
  void add(std::string name, Tensor<T> tensor);
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

enum class InitMode {
  kHeGaussian,  // N(0, 2 / fan_in) weights, zero biases
  kZero,
};

template <typename T>
ModelParams<T> init_params(const NetConfig& cfg, std::uint64_t seed,
                           InitMode mode = InitMode::kHeGaussian);

/// Network inputs: [N, H, W] frames and, for noise-aware configs, the
/// [H, W] per-pixel sigma map.
template <typename T>
struct NetInput {
  Tensor<T> frames;
  std::optional<Tensor<T>> sigma;
};

/// Kernel-prediction head: 1x1 conv to K^2 N channels reshaped into a stack,
/// with no normalization of the filters.
template <typename T>
KernelStack<T> forward(const NetInput<T>& input, const ModelParams<T>& params,
                       const NetConfig& cfg);

/// Direct-synthesis head: three 3x3 conv+ReLU layers then a 1x1 conv to a
/// single [H, W] image.
template <typename T>
Tensor<T> forward_direct(const NetInput<T>& input, const ModelParams<T>& params,
                         const NetConfig& cfg);

/// Builds network input from a burst; sigma_scale multiplies the sigma map.
template <typename T>
NetInput<T> make_net_input(const Burst& burst, const NetConfig& cfg,
                           double sigma_scale = 1.0);

KernelStack<float> forward(const Burst& burst, const std::optional<SigmaMap>& sigma,
                           const ModelParams<float>& params, const NetConfig& cfg);

/// Copy into another precision (used by gradient checks).
template <typename To, typename From>
ModelParams<To> convert_params(const ModelParams<From>& params);

}  // namespace kpn

#endif  // KPN_KPN_NET_HPP_
