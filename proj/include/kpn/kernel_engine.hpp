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

#ifndef KPN_KERNEL_ENGINE_HPP_
#define KPN_KERNEL_ENGINE_HPP_

#include <array>
#include <vector>

#include "kpn/data_synth.hpp"
#include "kpn/image.hpp"
#include "kpn/tensor.hpp"

namespace kpn {

/// Per-pixel filter stack f_i^p for N frames of extent H x W.
///
/// Storage is [N, H, W, K*K] so that each pixel's K x K taps are contiguous;
/// tap (ky, kx) sits at index ky * K + kx. Values are unconstrained in sign.
template <typename T>
class KernelStack {
 public:
  KernelStack() = default;
  /// Wraps a [N, H, W, K*K] tensor; K*K must be the square of an odd K.
  explicit KernelStack(Tensor<T> weights);

  const Tensor<T>& weights() const { return weights_; }
  std::size_t frames() const { return weights_.dim(0); }
  std::size_t height() const { return weights_.dim(1); }
  std::size_t width() const { return weights_.dim(2); }
  std::size_t kernel_size() const { return kernel_size_; }
  /// Logical extents (N, K, K, H, W).
  std::array<std::size_t, 5> extents() const {
    return {frames(), kernel_size_, kernel_size_, height(), width()};
  }
  T tap(std::size_t frame, std::size_t y, std::size_t x, std::size_t ky,
        std::size_t kx) const;

 private:
  Tensor<T> weights_;
  std::size_t kernel_size_ = 0;
};

template <typename T>
struct KernelOutput {
  Tensor<T> per_frame;  // [N, H, W], f_i(X_i)
  Tensor<T> output;     // [H, W], mean over frames
};

/// Constant [N, H, W] tensor of the burst frames.
template <typename T>
Tensor<T> burst_tensor(const Burst& burst);

/// Spatially varying filtering with edge-replicated neighborhoods followed by
/// the mean over frames. Differentiable in both frames and kernels.
template <typename T>
KernelOutput<T> apply_kernels(const Tensor<T>& frames, const KernelStack<T>& kernels);

struct AppliedBurst {
  std::vector<Image> per_frame;
  Image output;
};

AppliedBurst apply_kernels(const Burst& burst, const KernelStack<float>& kernels);

/// Stack whose frame i holds weight[i] at the center tap and zeros elsewhere.
template <typename T>
KernelStack<T> delta_stack(std::size_t height, std::size_t width, std::size_t kernel_size,
                           const std::vector<double>& frame_weights);

/// Per-frame map of sum |f_i^p| over the taps.
template <typename T>
std::vector<Image> frame_weight_map(const KernelStack<T>& kernels);

/// Share of total weight-map mass held by the alternate frames; 0 for all-zero maps.
double alternate_mass(const std::vector<Image>& maps);

/// Per-frame K x K kernel averaged over all pixels.
template <typename T>
std::vector<Image> mean_kernels(const KernelStack<T>& kernels);

Image baseline_reference(const Burst& burst);
Image baseline_average(const Burst& burst);

Image tensor_to_image(const Tensor<float>& t);

}  // namespace kpn

#endif  // KPN_KERNEL_ENGINE_HPP_
