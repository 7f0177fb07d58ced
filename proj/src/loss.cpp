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

#include "kpn/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "kpn/ops.hpp"

namespace kpn {

namespace {

constexpr double kKnee = 0.0031308;
constexpr double kA = 0.055;

}  // namespace

void AnnealSchedule::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("anneal: beta must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("anneal: alpha must lie in (0, 1)");
  }
  if (step < 0) throw std::invalid_argument("anneal: step must be >= 0");
}

double anneal_weight(const AnnealSchedule& sched) {
  sched.validate();
  return sched.beta * std::pow(sched.alpha, static_cast<double>(sched.step));
}

double srgb(double x) {
  if (x <= kKnee) return 12.92 * x;
  return (1.0 + kA) * std::pow(x, 1.0 / 2.4) - kA;
}

double srgb_derivative(double x) {
  if (x <= kKnee) return 12.92;
  return (1.0 + kA) / 2.4 * std::pow(x, 1.0 / 2.4 - 1.0);
}

template <typename T>
Tensor<T> srgb(const Tensor<T>& x) {
  const auto in = x.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<T>(srgb(static_cast<double>(in[i])));
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [](detail::Node<T>& self) {
    auto& src = *self.inputs[0];
    auto& g = src.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * static_cast<T>(srgb_derivative(static_cast<double>(src.value[i])));
    }
  });
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> grad_op(const Tensor<T>& img) {
  if (img.rank() < 2) {
    throw ShapeError("grad_op: need rank >= 2, got " + shape_string(img.shape()));
  }
  const Shape& s = img.shape();
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  if (h < 2 || w < 2) {
    throw ShapeError("grad_op: spatial extent " + std::to_string(h) + "x" +
                     std::to_string(w) + " too small (need >= 2 in each dimension)");
  }
  const std::size_t planes = img.size() / (h * w);
  const auto v = img.values();

  Shape sx = s, sy = s;
  sx.back() = w - 1;
  sy[s.size() - 2] = h - 1;
  std::vector<T> dx(planes * h * (w - 1)), dy(planes * (h - 1) * w);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = v.data() + p * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x + 1 < w; ++x) {
        dx[(p * h + y) * (w - 1) + x] = src[y * w + x + 1] - src[y * w + x];
      }
    }
    for (std::size_t y = 0; y + 1 < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        dy[(p * (h - 1) + y) * w + x] = src[(y + 1) * w + x] - src[y * w + x];
      }
    }
  }
  Tensor<T> tx = make_result<T>(std::move(sx), std::move(dx), {img},
                                [=](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t p = 0; p < planes; ++p) {
                                    for (std::size_t y = 0; y < h; ++y) {
                                      for (std::size_t x = 0; x + 1 < w; ++x) {
                                        const T d = self.grad[(p * h + y) * (w - 1) + x];
                                        g[(p * h + y) * w + x + 1] += d;
                                        g[(p * h + y) * w + x] -= d;
                                      }
                                    }
                                  }
                                });
  Tensor<T> ty = make_result<T>(std::move(sy), std::move(dy), {img},
                                [=](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t p = 0; p < planes; ++p) {
                                    for (std::size_t y = 0; y + 1 < h; ++y) {
                                      for (std::size_t x = 0; x < w; ++x) {
                                        const T d = self.grad[(p * (h - 1) + y) * w + x];
                                        g[(p * h + y + 1) * w + x] += d;
                                        g[(p * h + y) * w + x] -= d;
                                      }
                                    }
                                  }
                                });
  return {std::move(tx), std::move(ty)};
}

template <typename T>
Tensor<T> basic_loss(const Tensor<T>& estimate, const Tensor<T>& target,
                     const LossWeights& weights, double white_level) {
  if (estimate.shape() != target.shape()) {
    throw ShapeError("basic_loss: estimate " + shape_string(estimate.shape()) +
                     " and target " + shape_string(target.shape()) + " differ");
  }
  if (!(white_level > 0.0)) throw std::invalid_argument("basic_loss: white level must be > 0");
  const double inv_white = 1.0 / white_level;
  const Tensor<T> diff =
      sub(srgb(scale(estimate, inv_white)), srgb(scale(target, inv_white)));
  const Tensor<T> intensity = reduce_mean(mul(diff, diff));
  const auto [gx, gy] = grad_op(diff);
  const double count = static_cast<double>(gx.size() + gy.size());
  const Tensor<T> gradient =
      scale(add(reduce_sum(abs(gx)), reduce_sum(abs(gy))), 1.0 / count);
  return add(scale(intensity, weights.intensity), scale(gradient, weights.gradient));
}

template <typename T>
AnnealedLoss<T> annealed_loss(const Tensor<T>& per_frame, const Tensor<T>& output,
                              const Tensor<T>& target, const AnnealSchedule& sched,
                              const LossWeights& weights, double white_level) {
  if (per_frame.rank() != output.rank() + 1) {
    throw ShapeError("annealed_loss: per-frame stack " + shape_string(per_frame.shape()) +
                     " does not match output " + shape_string(output.shape()));
  }
  AnnealedLoss<T> loss;
  loss.weight = anneal_weight(sched);
  loss.basic = basic_loss(output, target, weights, white_level);
  Tensor<T> frames;
  for (std::size_t i = 0; i < per_frame.dim(0); ++i) {
    Tensor<T> term = basic_loss(select(per_frame, i), target, weights, white_level);
    frames = frames.defined() ? add(frames, term) : term;
  }
  loss.per_frame = frames;
  loss.total = add(loss.basic, scale(frames, loss.weight));
  return loss;
}

template Tensor<float> srgb(const Tensor<float>&);
template Tensor<double> srgb(const Tensor<double>&);
template std::pair<Tensor<float>, Tensor<float>> grad_op(const Tensor<float>&);
template std::pair<Tensor<double>, Tensor<double>> grad_op(const Tensor<double>&);
template Tensor<float> basic_loss(const Tensor<float>&, const Tensor<float>&,
                                  const LossWeights&, double);
template Tensor<double> basic_loss(const Tensor<double>&, const Tensor<double>&,
                                   const LossWeights&, double);
template AnnealedLoss<float> annealed_loss(const Tensor<float>&, const Tensor<float>&,
                                           const Tensor<float>&, const AnnealSchedule&,
                                           const LossWeights&, double);
template AnnealedLoss<double> annealed_loss(const Tensor<double>&, const Tensor<double>&,
                                            const Tensor<double>&, const AnnealSchedule&,
                                            const LossWeights&, double);

}  // namespace kpn
