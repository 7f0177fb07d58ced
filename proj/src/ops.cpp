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

#include "kpn/ops.hpp"

#include <Eigen/Core>
#include <numeric>

#include <algorithm>
#include <cmath>

namespace kpn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

void require_rank(const Shape& shape, std::size_t rank, const char* op,
                  const char* operand) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(op) + ": " + operand + " must have rank " +
                     std::to_string(rank) + ", got " + shape_string(shape));
  }
}

template <typename T>
std::vector<T>* grad_of(detail::Node<T>& self, std::size_t input) {
  auto& in = *self.inputs[input];
  return in.requires_grad ? &in.ensure_grad() : nullptr;
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<std::ptrdiff_t>(n)) return n - 1;
  return static_cast<std::size_t>(i);
}

// Column matrix [C*k*k, H*W] of replicate-padded neighborhoods.
template <typename T>
void im2col(const T* in, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t k, T* col) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = in + c * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = col + ((c * k + ky) * k + kx) * plane;
        const auto dy = static_cast<std::ptrdiff_t>(ky) - r;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - r;
        for (std::size_t y = 0; y < height; ++y) {
          const T* row = src + clamp_index(static_cast<std::ptrdiff_t>(y) + dy, height) * width;
          T* out = dst + y * width;
          for (std::size_t x = 0; x < width; ++x) {
            out[x] = row[clamp_index(static_cast<std::ptrdiff_t>(x) + dx, width)];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t channels, std::size_t height,
                std::size_t width, std::size_t k, T* in_grad) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < channels; ++c) {
    T* dst_plane = in_grad + c * plane;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = col + ((c * k + ky) * k + kx) * plane;
        const auto dy = static_cast<std::ptrdiff_t>(ky) - r;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - r;
        for (std::size_t y = 0; y < height; ++y) {
          T* row = dst_plane + clamp_index(static_cast<std::ptrdiff_t>(y) + dy, height) * width;
          const T* g = src + y * width;
          for (std::size_t x = 0; x < width; ++x) {
            row[clamp_index(static_cast<std::ptrdiff_t>(x) + dx, width)] += g[x];
          }
        }
      }
    }
  }
}

enum class BinaryKind { kSame, kBroadcastA, kBroadcastB };

template <typename T>
BinaryKind binary_kind(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return BinaryKind::kSame;
  if (b.size() == 1) return BinaryKind::kBroadcastB;
  if (a.size() == 1) return BinaryKind::kBroadcastA;
  throw ShapeError(std::string(op) + ": operand shapes " +
                   shape_string(a.shape()) + " and " +
                   shape_string(b.shape()) + " are incompatible");
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights,
                 const Tensor<T>& bias) {
  require_rank(input.shape(), 3, "conv2d", "input");
  require_rank(weights.shape(), 4, "conv2d", "weights");
  require_rank(bias.shape(), 1, "conv2d", "bias");
  const std::size_t c_in = input.dim(0), height = input.dim(1),
                    width = input.dim(2);
  const std::size_t c_out = weights.dim(0), k = weights.dim(2);
  if (weights.dim(1) != c_in) {
    throw ShapeError("conv2d: weights dimension 1 (input channels) is " +
                     std::to_string(weights.dim(1)) + " but input has " +
                     std::to_string(c_in) + " channels");
  }
  if (weights.dim(3) != k) {
    throw ShapeError("conv2d: weights dimensions 2 and 3 differ (" +
                     std::to_string(k) + " vs " +
                     std::to_string(weights.dim(3)) + ")");
  }
  if (k % 2 == 0) {
    throw ShapeError("conv2d: kernel extent (weights dimension 2) must be odd, got " +
                     std::to_string(k));
  }
  if (bias.dim(0) != c_out) {
    throw ShapeError("conv2d: bias dimension 0 is " +
                     std::to_string(bias.dim(0)) + " but weights have " +
                     std::to_string(c_out) + " output channels");
  }

  const std::size_t plane = height * width;
  const std::size_t taps = c_in * k * k;
  std::vector<T> out(c_out * plane);
  std::vector<T> col;
  const T* col_ptr = input.values().data();
  if (k != 1) {
    col.resize(taps * plane);
    im2col(input.values().data(), c_in, height, width, k, col.data());
    col_ptr = col.data();
  }
  {
    ConstMatrixMap<T> w(weights.values().data(), c_out, taps);
    ConstMatrixMap<T> x(col_ptr, taps, plane);
    MatrixMap<T> y(out.data(), c_out, plane);
    y.noalias() = w * x;
    const auto b = bias.values();
    for (std::size_t o = 0; o < c_out; ++o) y.row(o).array() += b[o];
  }

  return make_result<T>(
      {c_out, height, width}, std::move(out), {input, weights, bias},
      [=](detail::Node<T>& self) {
        const auto& in_node = *self.inputs[0];
        const auto& w_node = *self.inputs[1];
        ConstMatrixMap<T> dy(self.grad.data(), c_out, plane);
        if (auto* gb = grad_of(self, 2)) {
          for (std::size_t o = 0; o < c_out; ++o) {
            const T* row = self.grad.data() + o * plane;
            (*gb)[o] += std::accumulate(row, row + plane, T(0));
          }
        }
        auto* gw = grad_of(self, 1);
        auto* gx = grad_of(self, 0);
        if (!gw && !gx) return;
        std::vector<T> col_buf;
        const T* cols = in_node.value.data();
        if (k != 1) {
          col_buf.resize(taps * plane);
          im2col(in_node.value.data(), c_in, height, width, k, col_buf.data());
          cols = col_buf.data();
        }
        if (gw) {
          ConstMatrixMap<T> x(cols, taps, plane);
          MatrixMap<T> dw(gw->data(), c_out, taps);
          dw.noalias() += dy * x.transpose();
        }
        if (gx) {
          ConstMatrixMap<T> w(w_node.value.data(), c_out, taps);
          if (k == 1) {
            MatrixMap<T> dx(gx->data(), taps, plane);
            dx.noalias() += w.transpose() * dy;
          } else {
            RowMatrix<T> dcol = w.transpose() * dy;
            col2im_add(dcol.data(), c_in, height, width, k, gx->data());
          }
        }
      });
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& input) {
  require_rank(input.shape(), 3, "avg_pool2", "input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % 2 != 0) {
    throw ShapeError("avg_pool2: dimension 1 (height) is odd: " + std::to_string(h));
  }
  if (w % 2 != 0) {
    throw ShapeError("avg_pool2: dimension 2 (width) is odd: " + std::to_string(w));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<T> out(c * oh * ow);
  const auto in = input.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* src = in.data() + ch * h * w;
    T* dst = out.data() + ch * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const T* r0 = src + (2 * y) * w;
      const T* r1 = r0 + w;
      for (std::size_t x = 0; x < ow; ++x) {
        dst[y * ow + x] =
            T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
      }
    }
  }
  return make_result<T>({c, oh, ow}, std::move(out), {input},
                        [=](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t ch = 0; ch < c; ++ch) {
                            T* dst = g.data() + ch * h * w;
                            const T* src = self.grad.data() + ch * oh * ow;
                            for (std::size_t y = 0; y < oh; ++y) {
                              for (std::size_t x = 0; x < ow; ++x) {
                                const T v = T(0.25) * src[y * ow + x];
                                dst[(2 * y) * w + 2 * x] += v;
                                dst[(2 * y) * w + 2 * x + 1] += v;
                                dst[(2 * y + 1) * w + 2 * x] += v;
                                dst[(2 * y + 1) * w + 2 * x + 1] += v;
                              }
                            }
                          }
                        });
}

namespace {

// Source taps for 2x align-corners-false upsampling along one axis. Output
// position o samples (o + 0.5) / 2 - 0.5 in source coordinates.
struct UpsampleTaps {
  std::vector<std::size_t> lo, hi;
  std::vector<double> w_lo, w_hi;
};

UpsampleTaps upsample_taps(std::size_t n) {
  UpsampleTaps taps;
  const std::size_t m = 2 * n;
  taps.lo.resize(m);
  taps.hi.resize(m);
  taps.w_lo.resize(m);
  taps.w_hi.resize(m);
  for (std::size_t o = 0; o < m; ++o) {
    const double src = std::max(0.0, (static_cast<double>(o) + 0.5) / 2.0 - 0.5);
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = src - static_cast<double>(i0);
    taps.lo[o] = std::min(i0, n - 1);
    taps.hi[o] = i1;
    taps.w_lo[o] = 1.0 - frac;
    taps.w_hi[o] = frac;
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear2(const Tensor<T>& input) {
  require_rank(input.shape(), 3, "upsample_bilinear2", "input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = 2 * h, ow = 2 * w;
  const UpsampleTaps ty = upsample_taps(h);
  const UpsampleTaps tx = upsample_taps(w);
  std::vector<T> out(c * oh * ow);
  const auto in = input.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* src = in.data() + ch * h * w;
    T* dst = out.data() + ch * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const T* r0 = src + ty.lo[y] * w;
      const T* r1 = src + ty.hi[y] * w;
      const T wy0 = T(ty.w_lo[y]), wy1 = T(ty.w_hi[y]);
      for (std::size_t x = 0; x < ow; ++x) {
        const T wx0 = T(tx.w_lo[x]), wx1 = T(tx.w_hi[x]);
        dst[y * ow + x] = wy0 * (wx0 * r0[tx.lo[x]] + wx1 * r0[tx.hi[x]]) +
                          wy1 * (wx0 * r1[tx.lo[x]] + wx1 * r1[tx.hi[x]]);
      }
    }
  }
  return make_result<T>(
      {c, oh, ow}, std::move(out), {input}, [=](detail::Node<T>& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (std::size_t ch = 0; ch < c; ++ch) {
          T* dst = g.data() + ch * h * w;
          const T* src = self.grad.data() + ch * oh * ow;
          for (std::size_t y = 0; y < oh; ++y) {
            T* r0 = dst + ty.lo[y] * w;
            T* r1 = dst + ty.hi[y] * w;
            const T wy0 = T(ty.w_lo[y]), wy1 = T(ty.w_hi[y]);
            for (std::size_t x = 0; x < ow; ++x) {
              const T v = src[y * ow + x];
              const T wx0 = T(tx.w_lo[x]), wx1 = T(tx.w_hi[x]);
              r0[tx.lo[x]] += wy0 * wx0 * v;
              r0[tx.hi[x]] += wy0 * wx1 * v;
              r1[tx.lo[x]] += wy1 * wx0 * v;
              r1[tx.hi[x]] += wy1 * wx1 * v;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  const auto in = input.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  return make_result<T>(input.shape(), std::move(out), {input},
                        [](detail::Node<T>& self) {
                          auto& src = *self.inputs[0];
                          auto& g = src.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (src.value[i] > T(0)) g[i] += self.grad[i];
                          }
                        });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& input) {
  const auto in = input.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::abs(in[i]);
  return make_result<T>(input.shape(), std::move(out), {input},
                        [](detail::Node<T>& self) {
                          auto& src = *self.inputs[0];
                          auto& g = src.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T v = src.value[i];
                            if (v > T(0)) {
                              g[i] += self.grad[i];
                            } else if (v < T(0)) {
                              g[i] -= self.grad[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 1 || a.rank() != b.rank()) {
    throw ShapeError("concat_channels: ranks differ (" +
                     shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()) + ")");
  }
  for (std::size_t d = 1; d < a.rank(); ++d) {
    if (a.dim(d) != b.dim(d)) {
      throw ShapeError("concat_channels: dimension " + std::to_string(d) +
                       " differs (" + std::to_string(a.dim(d)) + " vs " +
                       std::to_string(b.dim(d)) + ")");
    }
  }
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  std::vector<T> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  const std::size_t na = a.size();
  return make_result<T>(std::move(shape), std::move(out), {a, b},
                        [na](detail::Node<T>& self) {
                          if (auto* ga = grad_of(self, 0)) {
                            for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i];
                          }
                          if (auto* gb = grad_of(self, 1)) {
                            for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += self.grad[na + i];
                          }
                        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const BinaryKind kind = binary_kind(a, b, "add");
  const Tensor<T>& big = kind == BinaryKind::kBroadcastA ? b : a;
  const auto va = a.values(), vb = b.values();
  std::vector<T> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = va[kind == BinaryKind::kBroadcastA ? 0 : i] +
             vb[kind == BinaryKind::kBroadcastB ? 0 : i];
  }
  return make_result<T>(big.shape(), std::move(out), {a, b},
                        [kind](detail::Node<T>& self) {
                          for (std::size_t side = 0; side < 2; ++side) {
                            auto* g = grad_of(self, side);
                            if (!g) continue;
                            const bool bcast = (side == 0 && kind == BinaryKind::kBroadcastA) ||
                                               (side == 1 && kind == BinaryKind::kBroadcastB);
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              (*g)[bcast ? 0 : i] += self.grad[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const BinaryKind kind = binary_kind(a, b, "sub");
  const Tensor<T>& big = kind == BinaryKind::kBroadcastA ? b : a;
  const auto va = a.values(), vb = b.values();
  std::vector<T> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = va[kind == BinaryKind::kBroadcastA ? 0 : i] -
             vb[kind == BinaryKind::kBroadcastB ? 0 : i];
  }
  return make_result<T>(big.shape(), std::move(out), {a, b},
                        [kind](detail::Node<T>& self) {
                          if (auto* g = grad_of(self, 0)) {
                            const bool bcast = kind == BinaryKind::kBroadcastA;
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              (*g)[bcast ? 0 : i] += self.grad[i];
                            }
                          }
                          if (auto* g = grad_of(self, 1)) {
                            const bool bcast = kind == BinaryKind::kBroadcastB;
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              (*g)[bcast ? 0 : i] -= self.grad[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const BinaryKind kind = binary_kind(a, b, "mul");
  const Tensor<T>& big = kind == BinaryKind::kBroadcastA ? b : a;
  const auto va = a.values(), vb = b.values();
  std::vector<T> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = va[kind == BinaryKind::kBroadcastA ? 0 : i] *
             vb[kind == BinaryKind::kBroadcastB ? 0 : i];
  }
  return make_result<T>(
      big.shape(), std::move(out), {a, b}, [kind](detail::Node<T>& self) {
        const auto& xa = self.inputs[0]->value;
        const auto& xb = self.inputs[1]->value;
        const std::size_t ia = kind == BinaryKind::kBroadcastA ? 0 : 1;
        const std::size_t ib = kind == BinaryKind::kBroadcastB ? 0 : 1;
        if (auto* g = grad_of(self, 0)) {
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            (*g)[i * ia] += self.grad[i] * xb[i * ib];
          }
        }
        if (auto* g = grad_of(self, 1)) {
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            (*g)[i * ib] += self.grad[i] * xa[i * ia];
          }
        }
      });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& input, double factor) {
  const T f = static_cast<T>(factor);
  const auto in = input.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * f;
  return make_result<T>(input.shape(), std::move(out), {input},
                        [f](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * self.grad[i];
                        });
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& input) {
  T total = 0;
  for (T v : input.values()) total += v;
  return make_result<T>({1}, {total}, {input}, [](detail::Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const T d = self.grad[0];
    for (auto& v : g) v += d;
  });
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& input) {
  T total = 0;
  for (T v : input.values()) total += v;
  const T inv = T(1) / static_cast<T>(input.size());
  return make_result<T>({1}, {total * inv}, {input},
                        [inv](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          const T d = self.grad[0] * inv;
                          for (auto& v : g) v += d;
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
  if (element_count(shape) != input.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(input.shape()) +
                     " as " + shape_string(shape));
  }
  std::vector<T> out(input.values().begin(), input.values().end());
  return make_result<T>(std::move(shape), std::move(out), {input},
                        [](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> swap_last_axes(const Tensor<T>& input) {
  require_rank(input.shape(), 3, "swap_last_axes", "input");
  const std::size_t a = input.dim(0), b = input.dim(1), c = input.dim(2);
  std::vector<T> out(input.size());
  const auto in = input.values();
  for (std::size_t i = 0; i < a; ++i) {
    ConstMatrixMap<T> src(in.data() + i * b * c, b, c);
    MatrixMap<T> dst(out.data() + i * b * c, c, b);
    dst = src.transpose();
  }
  return make_result<T>({a, c, b}, std::move(out), {input},
                        [=](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t i = 0; i < a; ++i) {
                            ConstMatrixMap<T> src(self.grad.data() + i * b * c, c, b);
                            MatrixMap<T> dst(g.data() + i * b * c, b, c);
                            dst += src.transpose();
                          }
                        });
}

template <typename T>
Tensor<T> select(const Tensor<T>& input, std::size_t index) {
  if (input.rank() < 2) {
    throw ShapeError("select: input must have rank >= 2, got " +
                     shape_string(input.shape()));
  }
  if (index >= input.dim(0)) {
    throw ShapeError("select: index " + std::to_string(index) +
                     " out of range for dimension 0 of extent " +
                     std::to_string(input.dim(0)));
  }
  Shape shape(input.shape().begin() + 1, input.shape().end());
  const std::size_t stride = element_count(shape);
  const auto in = input.values();
  std::vector<T> out(in.begin() + index * stride, in.begin() + (index + 1) * stride);
  return make_result<T>(std::move(shape), std::move(out), {input},
                        [index, stride](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          T* dst = g.data() + index * stride;
                          for (std::size_t i = 0; i < stride; ++i) dst[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> mean_leading(const Tensor<T>& input) {
  if (input.rank() < 2) {
    throw ShapeError("mean_leading: input must have rank >= 2, got " +
                     shape_string(input.shape()));
  }
  Shape shape(input.shape().begin() + 1, input.shape().end());
  const std::size_t n = input.dim(0);
  const std::size_t stride = element_count(shape);
  const auto in = input.values();
  std::vector<T> out(stride, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < stride; ++j) out[j] += in[i * stride + j];
  }
  const T inv = T(1) / static_cast<T>(n);
  for (auto& v : out) v *= inv;
  return make_result<T>(std::move(shape), std::move(out), {input},
                        [n, stride, inv](detail::Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < stride; ++j) {
                              g[i * stride + j] += inv * self.grad[j];
                            }
                          }
                        });
}

#define KPN_INSTANTIATE_OPS(T)                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> avg_pool2(const Tensor<T>&);                               \
  template Tensor<T> upsample_bilinear2(const Tensor<T>&);                      \
  template Tensor<T> relu(const Tensor<T>&);                                    \
  template Tensor<T> abs(const Tensor<T>&);                                     \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> scale(const Tensor<T>&, double);                           \
  template Tensor<T> reduce_mean(const Tensor<T>&);                             \
  template Tensor<T> reduce_sum(const Tensor<T>&);                              \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                          \
  template Tensor<T> swap_last_axes(const Tensor<T>&);                          \
  template Tensor<T> select(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> mean_leading(const Tensor<T>&);

KPN_INSTANTIATE_OPS(float)
KPN_INSTANTIATE_OPS(double)

#undef KPN_INSTANTIATE_OPS

}  // namespace kpn
