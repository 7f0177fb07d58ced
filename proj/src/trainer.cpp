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

#include "kpn/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kpn/kernel_engine.hpp"
#include "kpn/ops.hpp"
#include "kpn/rng.hpp"

namespace kpn {

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const ModelParams<T>& params) {
  AdamState<T> state;
  for (const auto& [name, t] : params) {
    state.first.emplace_back(t.size(), T(0));
    state.second.emplace_back(t.size(), T(0));
  }
  return state;
}

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> first,
                 std::span<T> second, std::int64_t step, double lr, const AdamConfig& cfg) {
  if (grad.size() != param.size() || first.size() != param.size() ||
      second.size() != param.size()) {
    throw ShapeError("adam: parameter holds " + std::to_string(param.size()) +
                     " values but grad/moments hold " + std::to_string(grad.size()) + "/" +
                     std::to_string(first.size()) + "/" + std::to_string(second.size()));
  }
  if (step < 1) throw std::invalid_argument("adam: step must be >= 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g;
    first[i] = static_cast<T>(m);
    second[i] = static_cast<T>(v);
    const double m_hat = m / c1, v_hat = v / c2;
    param[i] = static_cast<T>(param[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state, double lr, const AdamConfig& cfg) {
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(state.first.size()) +
                     " tensors, params hold " + std::to_string(params.size()));
  }
  ++state.step;
  std::size_t idx = 0;
  for (auto& [name, t] : params) {
    std::vector<T> zeros;
    std::span<const T> grad = t.grad();
    if (!t.has_grad()) {
      zeros.assign(t.size(), T(0));
      grad = zeros;
    }
    adam_update<T>(t.mutable_values(), grad, state.first[idx], state.second[idx], state.step, lr,
                   cfg);
    ++idx;
  }
}

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.anneal.alpha = 0.998;
  return cfg;
}

TrainConfig TrainConfig::paper() {
  TrainConfig cfg;
  cfg.net = NetConfig::full();
  cfg.synth = SynthConfig{};
  cfg.anneal = AnnealSchedule{};
  cfg.iters = 1'000'000;
  return cfg;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
  if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
  if (iters < 1) throw std::invalid_argument("train config: iters must be >= 1");
  if (checkpoint_every < 0) {
    throw std::invalid_argument("train config: checkpoint_every must be >= 0");
  }
  anneal.validate();
  net.validate();
  synth.validate();
  if (net.frames != synth.frames) {
    throw std::invalid_argument("train config: net.frames (" + std::to_string(net.frames) +
                                ") differs from synth.frames (" +
                                std::to_string(synth.frames) + ")");
  }
  net.validate_extent(synth.patch, synth.patch);
}

DatasetSource::DatasetSource(std::vector<Burst> bursts) : bursts_(std::move(bursts)) {
  if (bursts_.empty()) throw std::invalid_argument("dataset: no bursts");
}

Burst DatasetSource::sample(std::int64_t step, std::size_t slot, std::uint64_t seed) const {
  Rng rng = Rng::derived({seed, static_cast<std::uint64_t>(step), slot, 0x42415443ULL});
  const auto i = rng.uniform_int(0, static_cast<std::int64_t>(bursts_.size()) - 1);
  return bursts_[static_cast<std::size_t>(i)];
}

SynthSource::SynthSource(std::vector<Image> sources, SynthConfig synth, std::size_t batch)
    : sources_(std::move(sources)), synth_(std::move(synth)), batch_(batch) {
  if (sources_.empty()) throw std::invalid_argument("synth source: no images");
}

Burst SynthSource::sample(std::int64_t step, std::size_t slot, std::uint64_t seed) const {
  const std::uint64_t id = static_cast<std::uint64_t>(step) * batch_ + slot;
  const Image& src = sources_[mix64(id ^ seed) % sources_.size()];
  return make_burst(src, synth_, seed, id);
}

TrainState init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState state;
  state.params = init_params<float>(cfg.net, cfg.seed);
  state.adam = AdamState<float>::zeros_like(state.params);
  return state;
}

namespace {

void clip_gradients(ModelParams<float>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& [name, t] : params) {
    for (float g : t.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double f = max_norm / norm;
  for (auto& [name, t] : params) {
    if (!t.has_grad()) continue;
    // Grad is owned by the leaf; mutate it through the node.
    for (auto& g : t.node()->grad) g = static_cast<float>(g * f);
  }
}

}  // namespace

std::vector<LossLogRow> train(const TrainConfig& cfg, const BurstSource& data, TrainState& state,
                              const TrainCallbacks& callbacks) {
  cfg.validate();
  if (state.adam.first.size() != state.params.size()) {
    state.adam = AdamState<float>::zeros_like(state.params);
  }
  std::vector<LossLogRow> log;
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
  for (std::int64_t t = state.step; t < cfg.iters; ++t) {
    AnnealSchedule sched = cfg.anneal;
    sched.step = t;
    state.params.zero_grad();
    LossLogRow row;
    row.step = t;
    row.weight = anneal_weight(sched);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const Burst burst = data.sample(t, b, cfg.seed);
      if (!burst.truth) {
        throw std::invalid_argument("train: burst at step " + std::to_string(t) + " slot " +
                                    std::to_string(b) + " has no ground truth");
      }
      const NetInput<float> input = make_net_input<float>(burst, cfg.net);
      const Tensor<float> target =
          Tensor<float>::constant({burst.height(), burst.width()}, burst.truth->pixels);
      if (cfg.net.head == NetHead::kDirectSynthesis) {
        const Tensor<float> loss = basic_loss(forward_direct(input, state.params, cfg.net),
                                              target, cfg.loss, burst.white_level());
        scale(loss, inv_batch).backward();
        row.total += loss.item() * inv_batch;
        row.basic += loss.item() * inv_batch;
        continue;
      }
      const KernelStack<float> kernels = forward(input, state.params, cfg.net);
      const KernelOutput<float> applied = apply_kernels(input.frames, kernels);
      const AnnealedLoss<float> loss = annealed_loss(applied.per_frame, applied.output, target,
                                                     sched, cfg.loss, burst.white_level());
      scale(loss.total, inv_batch).backward();
      row.total += loss.total.item() * inv_batch;
      row.basic += loss.basic.item() * inv_batch;
      row.annealed += loss.per_frame.item() * inv_batch;
    }
    clip_gradients(state.params, cfg.clip_norm);
    adam_step(state.params, state.adam, cfg.lr, cfg.adam);
    state.step = t + 1;
    log.push_back(row);
    if (callbacks.on_step) callbacks.on_step(row);
    if (callbacks.on_checkpoint && cfg.checkpoint_every > 0 &&
        (state.step % cfg.checkpoint_every == 0 || state.step == cfg.iters)) {
      callbacks.on_checkpoint(state);
    }
  }
  return log;
}

KernelStack<float> predict_kernels(const Model& model, const Burst& burst, double sigma_scale) {
  const NetInput<float> input = make_net_input<float>(burst, model.config, sigma_scale);
  KernelStack<float> k = forward(input, model.params, model.config);
  return KernelStack<float>(k.weights().detached());
}

Image denoise(const Model& model, const Burst& burst, double sigma_scale) {
  const NetInput<float> input = make_net_input<float>(burst, model.config, sigma_scale);
  if (model.config.head == NetHead::kDirectSynthesis) {
    return tensor_to_image(forward_direct(input, model.params, model.config).detached());
  }
  const KernelStack<float> k = forward(input, model.params, model.config);
  return tensor_to_image(apply_kernels(input.frames, k).output.detached());
}

std::vector<EvalSet> make_eval_sets(const std::vector<Image>& sources, const SynthConfig& synth,
                                    const std::vector<double>& gains, const GainAnchor& anchor,
                                    std::uint64_t seed, std::size_t count) {
  if (sources.empty()) throw std::invalid_argument("eval: no source images");
  std::vector<EvalSet> sets;
  for (double g : gains) {
    EvalSet set;
    std::ostringstream label;
    label << g;
    set.gain = label.str();
    BurstOverrides over;
    over.noise = gain_level_params(g, anchor);
    for (std::size_t i = 0; i < count; ++i) {
      set.bursts.push_back(make_burst(sources[i % sources.size()], synth, seed, i, over));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<MetricsRow> evaluate(const Model& kpn, const std::vector<EvalSet>& sets,
                                 double sigma_scale, const std::optional<Model>& direct) {
  std::vector<MetricsRow> rows;
  for (const auto& set : sets) {
    if (set.bursts.empty()) throw std::invalid_argument("eval: empty set for gain " + set.gain);
    struct Acc {
      std::string name;
      double psnr = 0.0, ssim = 0.0;
    };
    std::vector<Acc> acc = {{"ref_frame"}, {"burst_avg"},
                            {kpn.config.head == NetHead::kDirectSynthesis ? "direct" : "kpn"}};
    if (direct) acc.push_back({"direct"});
    for (const auto& burst : set.bursts) {
      if (!burst.truth) throw std::invalid_argument("eval: burst without ground truth");
      if (burst.size() != kpn.config.frames) {
        throw std::invalid_argument("eval: burst has " + std::to_string(burst.size()) +
                                    " frames but the model expects " +
                                    std::to_string(kpn.config.frames));
      }
      const double white = burst.white_level();
      const Image truth = display_image(*burst.truth, white);
      std::vector<Image> outputs = {baseline_reference(burst), baseline_average(burst),
                                    denoise(kpn, burst, sigma_scale)};
      if (direct) outputs.push_back(denoise(*direct, burst, sigma_scale));
      for (std::size_t m = 0; m < outputs.size(); ++m) {
        const Image shown = display_image(outputs[m], white);
        acc[m].psnr += psnr(shown, truth);
        acc[m].ssim += ssim(shown, truth);
      }
    }
    const double inv = 1.0 / static_cast<double>(set.bursts.size());
    for (const auto& a : acc) rows.push_back({a.name, set.gain, a.psnr * inv, a.ssim * inv});
  }
  return rows;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, std::int64_t, double, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, std::int64_t, double, const AdamConfig&);
template void adam_step(ModelParams<float>&, AdamState<float>&, double, const AdamConfig&);
template void adam_step(ModelParams<double>&, AdamState<double>&, double, const AdamConfig&);

}  // namespace kpn
