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

#ifndef KPN_LOSS_HPP_
#define KPN_LOSS_HPP_

#include <cstdint>
#include <utility>

#include "kpn/tensor.hpp"

namespace kpn {

/// Weight beta * alpha^t on the per-frame term of the annealed loss.
struct AnnealSchedule {
  double beta = 100.0;
  double alpha = 0.9998;
  std::int64_t step = 0;

  void validate() const;
};

double anneal_weight(const AnnealSchedule& sched);

/// intensity = lambda_2 (squared error), gradient = lambda_1 (absolute error
/// on finite differences).
struct LossWeights {
  double intensity = 1.0;
  double gradient = 1.0;
};

/// sRGB transfer curve; inputs at or below the knee use the linear branch,
/// which also covers negative values.
double srgb(double x);
double srgb_derivative(double x);

template <typename T>
Tensor<T> srgb(const Tensor<T>& x);

/// Valid-region differences along the last axis (horizontal) and the
/// second-to-last axis (vertical). Both spatial extents must be >= 2.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> grad_op(const Tensor<T>& img);

/// lambda_2 * mean (G(a) - G(b))^2 + lambda_1 * mean |grad G(a) - grad G(b)|
/// with both images first divided by the white level. The gradient mean runs
/// over the horizontal and vertical differences together.
template <typename T>
Tensor<T> basic_loss(const Tensor<T>& estimate, const Tensor<T>& target,
                     const LossWeights& weights = {}, double white_level = 1.0);

template <typename T>
struct AnnealedLoss {
  Tensor<T> total;
  Tensor<T> basic;      // loss of the frame-averaged output
  Tensor<T> per_frame;  // sum over frames of each filtered frame's loss
  double weight = 0.0;  // beta * alpha^t
};

/// basic(output) + beta * alpha^t * sum_i basic(per_frame[i]).
template <typename T>
AnnealedLoss<T> annealed_loss(const Tensor<T>& per_frame, const Tensor<T>& output,
                              const Tensor<T>& target, const AnnealSchedule& sched,
                              const LossWeights& weights = {}, double white_level = 1.0);

}  // namespace kpn

#endif  // KPN_LOSS_HPP_
