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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "kpn/io.hpp"
#include "kpn/kernel_engine.hpp"
#include "kpn/loss.hpp"
#include "kpn/metrics.hpp"
#include "kpn/noise_model.hpp"
#include "kpn/trainer.hpp"

namespace py = pybind11;
using namespace kpn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  return Image(h, w, std::vector<float>(a.data(), a.data() + h * w));
}

FloatArray from_image(const Image& img) {
  FloatArray out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

FloatArray stack(const std::vector<Image>& frames) {
  const std::size_t n = frames.size(), h = n ? frames[0].height : 0, w = n ? frames[0].width : 0;
  FloatArray out({n, h, w});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(frames[i].pixels.begin(), frames[i].pixels.end(), out.mutable_data() + i * h * w);
  }
  return out;
}

std::vector<Image> unstack(const FloatArray& a) {
  if (a.ndim() != 3) throw py::value_error("frames must be a 3-D (N, H, W) array");
  const auto n = static_cast<std::size_t>(a.shape(0)), h = static_cast<std::size_t>(a.shape(1)),
             w = static_cast<std::size_t>(a.shape(2));
  std::vector<Image> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(h, w, std::vector<float>(a.data() + i * h * w, a.data() + (i + 1) * h * w));
  }
  return out;
}

py::dict burst_to_dict(const Burst& b) {
  py::dict d;
  d["frames"] = stack(b.frames);
  d["sigma_r"] = b.params.sigma_r;
  d["sigma_s"] = b.params.sigma_s;
  d["scale"] = b.scale ? py::object(py::float_(*b.scale)) : py::object(py::none());
  d["truth"] = b.truth ? py::object(from_image(*b.truth)) : py::object(py::none());
  return d;
}

Burst burst_from_args(const FloatArray& frames, double sigma_r, double sigma_s,
                      std::optional<FloatArray> truth, std::optional<float> scale) {
  Burst b;
  b.frames = unstack(frames);
  b.params = {sigma_r, sigma_s};
  b.scale = scale;
  if (truth) b.truth = to_image(*truth);
  b.validate();
  return b;
}

template <typename F>
DoubleArray map_values(const DoubleArray& x, F f) {
  DoubleArray out(std::vector<py::ssize_t>(x.shape(), x.shape() + x.ndim()));
  for (py::ssize_t i = 0; i < x.size(); ++i) out.mutable_data()[i] = f(x.data()[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Burst denoising with kernel prediction networks";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("srgb", [](const DoubleArray& x) { return map_values(x, [](double v) { return srgb(v); }); },
        py::arg("x"));
  m.def("invert_gamma", [](const DoubleArray& x) {
        return map_values(x, [](double v) { return invert_gamma(v); });
      }, py::arg("x"));
  m.def("anneal_weight", [](double beta, double alpha, std::int64_t step) {
        return anneal_weight(AnnealSchedule{beta, alpha, step});
      }, py::arg("beta"), py::arg("alpha"), py::arg("step"));

  m.def("sample_noise", [](const FloatArray& clean, double sigma_r, double sigma_s, std::uint64_t seed) {
        return from_image(sample_noise(to_image(clean), {sigma_r, sigma_s}, CounterStream(seed)));
      }, py::arg("clean"), py::arg("sigma_r"), py::arg("sigma_s"), py::arg("seed"));
  m.def("gain_level_params", [](double gain) {
        const NoiseParams p = gain_level_params(gain);
        return py::make_tuple(p.sigma_r, p.sigma_s);
      }, py::arg("gain"));

  m.def("make_burst", [](const FloatArray& source, std::uint64_t seed, std::uint64_t burst_id,
                         std::optional<double> gain) {
        BurstOverrides over;
        if (gain) over.noise = gain_level_params(*gain);
        return burst_to_dict(make_burst(to_image(source), SynthConfig::mini(), seed, burst_id, over));
      }, py::arg("source"), py::arg("seed"), py::arg("burst_id"), py::arg("gain") = py::none());
  m.def("procedural_scene", [](std::size_t h, std::size_t w, std::uint64_t seed) {
        return from_image(procedural_scene(h, w, seed));
      }, py::arg("height"), py::arg("width"), py::arg("seed"));
  m.def("mini_source_extent", [] { return SynthConfig::mini().min_source_extent(); });

  m.def("apply_kernels", [](const FloatArray& frames, const FloatArray& kernels) {
        if (kernels.ndim() != 4) throw py::value_error("kernels must be a 4-D (N, H, W, K*K) array");
        Shape fs(frames.shape(), frames.shape() + frames.ndim());
        Shape ks(kernels.shape(), kernels.shape() + kernels.ndim());
        const auto f = Tensor<double>::constant(fs, std::vector<double>(frames.data(), frames.data() + frames.size()));
        const KernelStack<double> k(Tensor<double>::constant(ks, std::vector<double>(kernels.data(), kernels.data() + kernels.size())));
        const KernelOutput<double> out = apply_kernels(f, k);
        auto to_array = [](const Tensor<double>& t) {
          DoubleArray a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
          std::copy(t.values().begin(), t.values().end(), a.mutable_data());
          return a;
        };
        return py::make_tuple(to_array(out.output), to_array(out.per_frame));
      }, py::arg("frames"), py::arg("kernels"));

  m.def("psnr", [](const FloatArray& a, const FloatArray& b) { return psnr(to_image(a), to_image(b)); });
  m.def("ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_image(a), to_image(b)); });

  m.def("load_burst", [](const std::string& path) { return burst_to_dict(load_burst(path)); },
        py::arg("path"));
  m.def("save_burst", [](const std::string& path, const FloatArray& frames, double sigma_r, double sigma_s,
                         std::optional<FloatArray> truth, std::optional<float> scale) {
        save_burst(path, burst_from_args(frames, sigma_r, sigma_s, truth, scale));
      }, py::arg("path"), py::arg("frames"), py::arg("sigma_r"), py::arg("sigma_s"),
      py::arg("truth") = py::none(), py::arg("scale") = py::none());

  m.def("init_checkpoint", [](const std::string& path, std::size_t frames, bool zero, std::uint64_t seed) {
        Checkpoint c;
        c.config = NetConfig::mini();
        c.config.frames = frames;
        c.params = init_params<float>(c.config, seed, zero ? InitMode::kZero : InitMode::kHeGaussian);
        save_checkpoint(path, c);
      }, py::arg("path"), py::arg("frames") = 4, py::arg("zero") = false, py::arg("seed") = 0);
  m.def("denoise", [](const std::string& checkpoint, const FloatArray& frames, double sigma_r,
                      double sigma_s, std::optional<float> scale, double sigma_scale) {
        Checkpoint c = load_checkpoint(checkpoint);
        const Model model{c.config, std::move(c.params)};
        return from_image(denoise(model, burst_from_args(frames, sigma_r, sigma_s, std::nullopt, scale), sigma_scale));
      }, py::arg("checkpoint"), py::arg("frames"), py::arg("sigma_r"), py::arg("sigma_s"),
      py::arg("scale") = py::none(), py::arg("sigma_scale") = 1.0);
}
