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

#ifndef KPN_TRAINER_HPP_
#define KPN_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpn/data_synth.hpp"
#include "kpn/kpn_net.hpp"
#include "kpn/loss.hpp"
#include "kpn/metrics.hpp"

namespace kpn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> first;
  std::vector<std::vector<T>> second;
  std::int64_t step = 0;

  static AdamState zeros_like(const ModelParams<T>& params);
};

/// One bias-corrected Adam update of a single tensor; step is the 1-based
/// index of this update.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> first,
                 std::span<T> second, std::int64_t step, double lr,
                 const AdamConfig& cfg = {});

/// Applies Adam to every parameter using the gradients held in params.
template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state, double lr,
               const AdamConfig& cfg = {});

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch = 4;
  std::int64_t iters = 5000;
  std::uint64_t seed = 0;
  AnnealSchedule anneal;
  NetConfig net = NetConfig::mini();
  SynthConfig synth = SynthConfig::mini();
  LossWeights loss;
  double clip_norm = 10.0;  // global gradient norm bound; <= 0 disables
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  AdamConfig adam;

  /// Mini network, N=4, 32x32 patches, batch 4, 5000 iterations, alpha 0.998.
  static TrainConfig desk();
  /// Full network, N=8, 128x128 patches, batch 4, lr 1e-4, 10^6 iterations.
  static TrainConfig paper();

  void validate() const;
};

struct LossLogRow {
  std::int64_t step = 0;
  double total = 0.0;     // basic + weight * annealed
  double basic = 0.0;     // loss of the frame-averaged output
  double annealed = 0.0;  // unweighted sum of per-frame losses
  double weight = 0.0;    // beta * alpha^step
};

/// Supplies the bursts of one optimization step.
class BurstSource {
 public:
  virtual ~BurstSource() = default;
  virtual Burst sample(std::int64_t step, std::size_t slot, std::uint64_t seed) const = 0;
};

/// Pregenerated bursts drawn uniformly with a per-(step, slot) counter RNG.
class DatasetSource : public BurstSource {
 public:
  explicit DatasetSource(std::vector<Burst> bursts);
  Burst sample(std::int64_t step, std::size_t slot, std::uint64_t seed) const override;
  const std::vector<Burst>& bursts() const { return bursts_; }

 private:
  std::vector<Burst> bursts_;
};

/// Bursts synthesized on demand; burst id = step * batch + slot.
class SynthSource : public BurstSource {
 public:
  SynthSource(std::vector<Image> sources, SynthConfig synth, std::size_t batch);
  Burst sample(std::int64_t step, std::size_t slot, std::uint64_t seed) const override;

 private:
  std::vector<Image> sources_;
  SynthConfig synth_;
  std::size_t batch_;
};

struct TrainState {
  ModelParams<float> params;
  AdamState<float> adam;
  std::int64_t step = 0;  // completed updates
};

TrainState init_train_state(const TrainConfig& cfg);

struct TrainCallbacks {
  std::function<void(const LossLogRow&)> on_step;
  std::function<void(const TrainState&)> on_checkpoint;
};

/// Runs updates state.step .. cfg.iters - 1. Each step samples cfg.batch
/// bursts, evaluates the annealed loss at t = step, backpropagates the batch
/// mean, clips and applies Adam.
std::vector<LossLogRow> train(const TrainConfig& cfg, const BurstSource& data,
                              TrainState& state, const TrainCallbacks& callbacks = {});

struct Model {
  NetConfig config;
  ModelParams<float> params;
};

/// Linear-space estimate of the clean reference; sigma_scale multiplies the
/// noise map fed to noise-aware models.
Image denoise(const Model& model, const Burst& burst, double sigma_scale = 1.0);

/// Kernel stack predicted for a burst (kernel-prediction models only).
KernelStack<float> predict_kernels(const Model& model, const Burst& burst,
                                   double sigma_scale = 1.0);

struct EvalSet {
  std::string gain;
  std::vector<Burst> bursts;
};

/// One burst per source (cycled to count) with noise pinned to the gain
/// level; layout and exposure depend only on (seed, index), so every gain
/// sees identical scenes.
std::vector<EvalSet> make_eval_sets(const std::vector<Image>& sources, const SynthConfig& synth,
                                    const std::vector<double>& gains, const GainAnchor& anchor,
                                    std::uint64_t seed, std::size_t count);

/// Mean PSNR/SSIM over each set for the reference frame, burst average, the
/// KPN model and, when given, a direct-synthesis model. Images are compared
/// after dividing by the white level and applying the sRGB curve.
std::vector<MetricsRow> evaluate(const Model& kpn, const std::vector<EvalSet>& sets,
                                 double sigma_scale = 1.0,
                                 const std::optional<Model>& direct = std::nullopt);

}  // namespace kpn

#endif  // KPN_TRAINER_HPP_
