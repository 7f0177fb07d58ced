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

#ifndef KPN_OPS_HPP_
#define KPN_OPS_HPP_

#include "kpn/tensor.hpp"

namespace kpn {

// Differentiable tensor ops. Image-shaped operands are [C, H, W]; all
// spatial padding is edge replication.

/// Cross-correlation of [C_in,H,W] with [C_out,C_in,k,k] plus bias [C_out].
/// k must be odd; output is [C_out,H,W].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights,
                 const Tensor<T>& bias);

/// 2x2 mean pooling. Odd spatial extents are rejected.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& input);

/// 2x bilinear upsampling, align-corners-false sampling positions.
template <typename T>
Tensor<T> upsample_bilinear2(const Tensor<T>& input);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// |x|, with subgradient 0 at exactly 0.
template <typename T>
Tensor<T> abs(const Tensor<T>& input);

/// Concatenates along the leading axis; trailing extents must agree.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise binary ops. Operands share a shape, or one side holds a single
// value and is broadcast.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// Multiplies by a constant (non-differentiable) factor.
template <typename T>
Tensor<T> scale(const Tensor<T>& input, double factor);

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& input);
template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& input);

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

/// [A,B,C] -> [A,C,B].
template <typename T>
Tensor<T> swap_last_axes(const Tensor<T>& input);

/// Sub-tensor at index along the leading axis: [A,...] -> [...].
template <typename T>
Tensor<T> select(const Tensor<T>& input, std::size_t index);

/// Mean over the leading axis: [A,...] -> [...].
template <typename T>
Tensor<T> mean_leading(const Tensor<T>& input);

}  // namespace kpn

#endif  // KPN_OPS_HPP_
