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

#include "kpn/kernel_engine.hpp"

#include <cmath>
#include <string>

#include "kpn/ops.hpp"

namespace kpn {

template <typename T>
KernelStack<T>::KernelStack(Tensor<T> weights) : weights_(std::move(weights)) {
  if (weights_.rank() != 4) {
    throw ShapeError("kernel stack: weights must be [N,H,W,K*K], got " +
                     shape_string(weights_.shape()));
  }
  const std::size_t taps = weights_.dim(3);
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(taps))));
  if (k * k != taps || k % 2 == 0) {
    throw ShapeError("kernel stack: dimension 3 (" + std::to_string(taps) +
                     ") is not the square of an odd kernel extent");
  }
  kernel_size_ = k;
}

template <typename T>
T KernelStack<T>::tap(std::size_t frame, std::size_t y, std::size_t x,
                      std::size_t ky, std::size_t kx) const {
  const std::size_t kk = kernel_size_ * kernel_size_;
  return weights_.values()[((frame * height() + y) * width() + x) * kk +
                           ky * kernel_size_ + kx];
}

template <typename T>
Tensor<T> burst_tensor(const Burst& burst) {
  burst.validate();
  const std::size_t h = burst.height(), w = burst.width();
  std::vector<T> values;
  values.reserve(burst.size() * h * w);
  for (const auto& f : burst.frames) values.insert(values.end(), f.pixels.begin(), f.pixels.end());
  return Tensor<T>::constant({burst.size(), h, w}, std::move(values));
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<std::ptrdiff_t>(n)) return n - 1;
  return static_cast<std::size_t>(i);
}

// Row/column source indices for every tap offset, replicate padded.
std::vector<std::size_t> neighbor_table(std::size_t n, std::size_t k) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  std::vector<std::size_t> table(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      table[i * k + t] = clamp_index(static_cast<std::ptrdiff_t>(i) +
                                         static_cast<std::ptrdiff_t>(t) - r, n);
    }
  }
  return table;
}

}  // namespace

template <typename T>
KernelOutput<T> apply_kernels(const Tensor<T>& frames, const KernelStack<T>& kernels) {
  if (frames.rank() != 3) {
    throw ShapeError("apply_kernels: frames must be [N,H,W], got " +
                     shape_string(frames.shape()));
  }
  const std::size_t n = frames.dim(0), h = frames.dim(1), w = frames.dim(2);
  const char* names[] = {"frames (dimension 0)", "height (dimension 1)", "width (dimension 2)"};
  const std::size_t theirs[] = {kernels.frames(), kernels.height(), kernels.width()};
  for (int d = 0; d < 3; ++d) {
    if (frames.dim(d) != theirs[d]) {
      throw ShapeError(std::string("apply_kernels: ") + names[d] + " mismatch: burst " +
                       std::to_string(frames.dim(d)) + " vs kernels " +
                       std::to_string(theirs[d]));
    }
  }
  const std::size_t k = kernels.kernel_size(), kk = k * k;
  const auto rows = neighbor_table(h, k);
  const auto cols = neighbor_table(w, k);
  const auto x = frames.values();
  const auto f = kernels.weights().values();
  std::vector<T> out(n * h * w);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t y = 0; y < h; ++y) {
      const T* plane = x.data() + i * h * w;
      for (std::size_t px = 0; px < w; ++px) {
        const T* taps = f.data() + ((i * h + y) * w + px) * kk;
        T acc = 0;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const T* row = plane + rows[y * k + ky] * w;
          const std::size_t* cidx = cols.data() + px * k;
          for (std::size_t kx = 0; kx < k; ++kx) acc += taps[ky * k + kx] * row[cidx[kx]];
        }
        out[(i * h + y) * w + px] = acc;
      }
    }
  }

  Tensor<T> per_frame = make_result<T>(
      {n, h, w}, std::move(out), {frames, kernels.weights()},
      [=](detail::Node<T>& self) {
        auto& frame_node = *self.inputs[0];
        auto& kernel_node = *self.inputs[1];
        const T* g = self.grad.data();
        if (kernel_node.requires_grad) {
          auto& gk = kernel_node.ensure_grad();
#pragma omp parallel for collapse(2) schedule(static)
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t y = 0; y < h; ++y) {
              const T* plane = frame_node.value.data() + i * h * w;
              for (std::size_t px = 0; px < w; ++px) {
                const T gp = g[(i * h + y) * w + px];
                T* dt = gk.data() + ((i * h + y) * w + px) * kk;
                for (std::size_t ky = 0; ky < k; ++ky) {
                  const T* row = plane + rows[y * k + ky] * w;
                  const std::size_t* cidx = cols.data() + px * k;
                  for (std::size_t kx = 0; kx < k; ++kx) dt[ky * k + kx] += gp * row[cidx[kx]];
                }
              }
            }
          }
        }
        if (frame_node.requires_grad) {
          auto& gx = frame_node.ensure_grad();
          const T* taps_all = kernel_node.value.data();
          // Scatter; frames are independent so parallelize over i only.
#pragma omp parallel for schedule(static)
          for (std::size_t i = 0; i < n; ++i) {
            T* plane = gx.data() + i * h * w;
            for (std::size_t y = 0; y < h; ++y) {
              for (std::size_t px = 0; px < w; ++px) {
                const T gp = g[(i * h + y) * w + px];
                const T* taps = taps_all + ((i * h + y) * w + px) * kk;
                for (std::size_t ky = 0; ky < k; ++ky) {
                  T* row = plane + rows[y * k + ky] * w;
                  const std::size_t* cidx = cols.data() + px * k;
                  for (std::size_t kx = 0; kx < k; ++kx) row[cidx[kx]] += gp * taps[ky * k + kx];
                }
              }
            }
          }
        }
      });
  Tensor<T> output = mean_leading(per_frame);
  return {std::move(per_frame), std::move(output)};
}

Image tensor_to_image(const Tensor<float>& t) {
  if (t.rank() != 2) {
    throw ShapeError("tensor_to_image: expected [H,W], got " + shape_string(t.shape()));
  }
  return Image(t.dim(0), t.dim(1), std::vector<float>(t.values().begin(), t.values().end()));
}

AppliedBurst apply_kernels(const Burst& burst, const KernelStack<float>& kernels) {
  const KernelOutput<float> out = apply_kernels(burst_tensor<float>(burst), kernels);
  AppliedBurst result;
  for (std::size_t i = 0; i < burst.size(); ++i) {
    result.per_frame.push_back(tensor_to_image(select(out.per_frame.detached(), i)));
  }
  result.output = tensor_to_image(out.output);
  return result;
}

template <typename T>
KernelStack<T> delta_stack(std::size_t height, std::size_t width, std::size_t kernel_size,
                           const std::vector<double>& frame_weights) {
  if (kernel_size % 2 == 0) throw ShapeError("delta_stack: kernel extent must be odd");
  const std::size_t n = frame_weights.size(), kk = kernel_size * kernel_size;
  std::vector<T> values(n * height * width * kk, T(0));
  const std::size_t center = kk / 2;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < height * width; ++p) {
      values[(i * height * width + p) * kk + center] = static_cast<T>(frame_weights[i]);
    }
  }
  return KernelStack<T>(Tensor<T>::constant({n, height, width, kk}, std::move(values)));
}

template <typename T>
std::vector<Image> frame_weight_map(const KernelStack<T>& kernels) {
  const std::size_t n = kernels.frames(), h = kernels.height(), w = kernels.width();
  const std::size_t kk = kernels.kernel_size() * kernels.kernel_size();
  const auto f = kernels.weights().values();
  std::vector<Image> maps;
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Image map(h, w);
    for (std::size_t p = 0; p < h * w; ++p) {
      const T* taps = f.data() + (i * h * w + p) * kk;
      double sum = 0.0;
      for (std::size_t t = 0; t < kk; ++t) sum += std::abs(static_cast<double>(taps[t]));
      map.pixels[p] = static_cast<float>(sum);
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

template <typename T>
std::vector<Image> mean_kernels(const KernelStack<T>& kernels) {
  const std::size_t n = kernels.frames(), h = kernels.height(), w = kernels.width();
  const std::size_t k = kernels.kernel_size(), kk = k * k;
  const auto f = kernels.weights().values();
  std::vector<Image> means;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> acc(kk, 0.0);
    for (std::size_t p = 0; p < h * w; ++p) {
      const T* taps = f.data() + (i * h * w + p) * kk;
      for (std::size_t t = 0; t < kk; ++t) acc[t] += static_cast<double>(taps[t]);
    }
    Image kernel(k, k);
    for (std::size_t t = 0; t < kk; ++t) {
      kernel.pixels[t] = static_cast<float>(acc[t] / static_cast<double>(h * w));
    }
    means.push_back(std::move(kernel));
  }
  return means;
}

double alternate_mass(const std::vector<Image>& maps) {
  double total = 0.0, alt = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (float v : maps[i].pixels) {
      total += v;
      if (i > 0) alt += v;
    }
  }
  return total > 0.0 ? alt / total : 0.0;
}

Image baseline_reference(const Burst& burst) {
  burst.validate();
  return burst.frames[0];
}

Image baseline_average(const Burst& burst) {
  burst.validate();
  Image out(burst.height(), burst.width());
  const double inv = 1.0 / static_cast<double>(burst.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    double sum = 0.0;
    for (const auto& f : burst.frames) sum += f.pixels[p];
    out.pixels[p] = static_cast<float>(sum * inv);
  }
  return out;
}

template class KernelStack<float>;
template class KernelStack<double>;
template Tensor<float> burst_tensor<float>(const Burst&);
template Tensor<double> burst_tensor<double>(const Burst&);
template KernelOutput<float> apply_kernels(const Tensor<float>&, const KernelStack<float>&);
template KernelOutput<double> apply_kernels(const Tensor<double>&, const KernelStack<double>&);
template KernelStack<float> delta_stack<float>(std::size_t, std::size_t, std::size_t,
                                               const std::vector<double>&);
template KernelStack<double> delta_stack<double>(std::size_t, std::size_t, std::size_t,
                                                 const std::vector<double>&);
template std::vector<Image> frame_weight_map(const KernelStack<float>&);
template std::vector<Image> frame_weight_map(const KernelStack<double>&);
template std::vector<Image> mean_kernels(const KernelStack<float>&);
template std::vector<Image> mean_kernels(const KernelStack<double>&);

}  // namespace kpn
