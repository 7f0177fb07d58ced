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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kpn/io.hpp"
#include "kpn/ops.hpp"
#include "kpn/trainer.hpp"
#include "test_support.hpp"

using namespace kpn;

namespace {

std::vector<Image> scenes(const SynthConfig& synth, std::size_t count, std::uint64_t seed) {
  std::vector<Image> out;
  const std::size_t e = synth.min_source_extent();
  for (std::size_t i = 0; i < count; ++i) out.push_back(procedural_scene(e, e, seed + i));
  return out;
}

std::vector<Burst> fixed_bursts(const SynthConfig& synth, std::size_t count, std::uint64_t seed) {
  const auto src = scenes(synth, 4, seed);
  std::vector<Burst> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_burst(src[i % src.size()], synth, seed, i));
  return out;
}

double window_mean(const std::vector<LossLogRow>& log, std::size_t begin, std::size_t end,
                   double LossLogRow::*field) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log[i].*field;
  return s / static_cast<double>(end - begin);
}

Model delta_model(const NetConfig& cfg) {
  Model m{cfg, init_params<float>(cfg, 0, InitMode::kZero)};
  auto bias = m.params.at("head.bias").mutable_values();
  const std::size_t kk = cfg.kernel_size * cfg.kernel_size;
  for (std::size_t i = 0; i < cfg.frames; ++i) bias[i * kk + kk / 2] = 1.0f;
  return m;
}

}  // namespace

TEST_CASE("adam leaves parameters unchanged under zero gradient") {
  ModelParams<double> p;
  p.add("x", Tensor<double>::parameter({3}, std::vector<double>{1, -2, 3}));
  auto state = AdamState<double>::zeros_like(p);
  adam_step(p, state, 0.1);
  CHECK(state.step == 1);
  CHECK(p.at("x").values()[1] == -2.0);
  p.at("x").node()->ensure_grad();
  adam_step(p, state, 0.1);
  CHECK(state.step == 2);
  CHECK(p.at("x").values()[2] == 3.0);
}

TEST_CASE("adam first step moves by about lr against the gradient sign") {
  std::vector<double> x = {0.5, -0.5, 2.0, 0.0}, m(4, 0.0), v(4, 0.0);
  const std::vector<double> g = {3.0, -1e-3, 1e-6, -40.0};
  const std::vector<double> before = x;
  const double lr = 1e-3;
  adam_update<double>(x, g, m, v, 1, lr);
  for (std::size_t i = 0; i < 4; ++i) {
    const double delta = x[i] - before[i];
    CHECK(std::abs(delta) <= lr * (1.0 + 1e-6));
    CHECK(delta * g[i] < 0.0);
    CHECK(delta == doctest::Approx(-lr * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-9));
  }
  std::vector<double> short_g(2, 0.0);
  CHECK_THROWS_AS(adam_update<double>(x, short_g, m, v, 1, lr), ShapeError);
  CHECK_THROWS(adam_update<double>(x, g, m, v, 0, lr));
}

TEST_CASE("adam minimizes a quadratic bowl") {
  ModelParams<double> p;
  p.add("x", Tensor<double>::parameter({1}, std::vector<double>{1.0}));
  auto state = AdamState<double>::zeros_like(p);
  for (int i = 0; i < 500; ++i) {
    p.zero_grad();
    Tensor<double>& x = p.at("x");
    mul(x, x).backward();
    adam_step(p, state, 0.01);
  }
  CHECK(std::abs(p.at("x").values()[0]) < 0.01);
}

TEST_CASE("train config validation") {
  TrainConfig cfg = TrainConfig::desk();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.net == NetConfig::mini());
  CHECK(cfg.synth.patch == 32);
  CHECK(cfg.iters == 5000);
  CHECK(cfg.anneal.alpha == 0.998);
  const TrainConfig paper = TrainConfig::paper();
  CHECK(paper.iters == 1000000);
  CHECK(paper.lr == 1e-4);
  CHECK(paper.batch == 4);
  CHECK(paper.synth.patch == 128);
  CHECK(paper.synth.frames == 8);
  CHECK(paper.anneal.alpha == 0.9998);
  cfg.lr = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig::desk();
  cfg.batch = 0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig::desk();
  cfg.synth.frames = 5;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("single iteration logs once and updates once") {
  TrainConfig cfg = TrainConfig::desk();
  cfg.iters = 1;
  cfg.batch = 1;
  DatasetSource data(fixed_bursts(cfg.synth, 2, 1));
  TrainState state = init_train_state(cfg);
  const auto before = convert_params<float, float>(state.params);
  const auto log = train(cfg, data, state);
  CHECK(log.size() == 1);
  CHECK(state.step == 1);
  CHECK(state.adam.step == 1);
  bool changed = false;
  for (const auto& [name, t] : state.params) {
    const auto b = before.at(name).values();
    changed = changed || !std::equal(t.values().begin(), t.values().end(), b.begin());
  }
  CHECK(changed);
  CHECK(log[0].weight == doctest::Approx(cfg.anneal.beta));
  CHECK(log[0].total == doctest::Approx(log[0].basic + log[0].weight * log[0].annealed).epsilon(1e-5));
}

TEST_CASE("logged weight follows the schedule") {
  TrainConfig cfg = TrainConfig::desk();
  cfg.iters = 6;
  cfg.batch = 1;
  cfg.anneal = {50.0, 0.5, 0};
  DatasetSource data(fixed_bursts(cfg.synth, 2, 2));
  TrainState state = init_train_state(cfg);
  const auto log = train(cfg, data, state);
  for (const auto& row : log) CHECK(row.weight == 50.0 * std::pow(0.5, static_cast<double>(row.step)));
}

TEST_CASE("resuming from a checkpoint reproduces the loss log") {
  TrainConfig cfg = TrainConfig::desk();
  cfg.iters = 8;
  cfg.batch = 2;
  cfg.checkpoint_every = 4;
  SynthSource data(scenes(cfg.synth, 3, 5), cfg.synth, cfg.batch);

  TrainState whole = init_train_state(cfg);
  std::vector<std::uint8_t> saved;
  TrainCallbacks cb;
  cb.on_checkpoint = [&](const TrainState& s) {
    if (s.step == 4) saved = encode_checkpoint(checkpoint_from_state(cfg.net, s));
  };
  const auto full_log = train(cfg, data, whole, cb);
  REQUIRE(!saved.empty());

  TrainState resumed = state_from_checkpoint(decode_checkpoint(saved));
  CHECK(resumed.step == 4);
  const auto tail = train(cfg, data, resumed);
  REQUIRE(tail.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(tail[i].step == full_log[4 + i].step);
    CHECK(tail[i].total == full_log[4 + i].total);
    CHECK(tail[i].basic == full_log[4 + i].basic);
    CHECK(tail[i].annealed == full_log[4 + i].annealed);
  }
  for (const auto& [name, t] : whole.params) {
    const auto r = resumed.params.at(name).values();
    CHECK(std::equal(t.values().begin(), t.values().end(), r.begin()));
  }
}

TEST_CASE("dataset and on-the-fly sources are deterministic") {
  const SynthConfig synth = SynthConfig::mini();
  SynthSource live(scenes(synth, 3, 7), synth, 4);
  CHECK(live.sample(3, 1, 9).frames == live.sample(3, 1, 9).frames);
  CHECK_FALSE(live.sample(3, 1, 9).frames == live.sample(3, 2, 9).frames);
  DatasetSource set(fixed_bursts(synth, 5, 8));
  CHECK(set.sample(10, 0, 1).frames == set.sample(10, 0, 1).frames);
  CHECK_THROWS(DatasetSource({}));
}

TEST_CASE("mini overfit on fixed bursts") {
  TrainConfig cfg = TrainConfig::desk();
  cfg.iters = 2000;
  DatasetSource data(fixed_bursts(cfg.synth, 16, 9));
  TrainState state = init_train_state(cfg);
  const auto log = train(cfg, data, state);
  REQUIRE(log.size() == 2000);
  const double start = window_mean(log, 0, 100, &LossLogRow::total);
  const double end = window_mean(log, 1900, 2000, &LossLogRow::total);
  CHECK(log.back().total <= 0.1 * log.front().total);
  CHECK(end <= 0.1 * start);
}

TEST_CASE("annealing drives the per-frame terms down") {
  SynthConfig synth = SynthConfig::mini();
  synth.failure_rate = 0.0;
  synth.noise = {1e-4, 1e-4, 1e-3, 1e-3};
  auto run = [&](double beta) {
    TrainConfig cfg = TrainConfig::desk();
    cfg.synth = synth;
    cfg.iters = 400;
    cfg.batch = 2;
    cfg.anneal.beta = beta;
    DatasetSource data(fixed_bursts(synth, 16, 10));
    TrainState state = init_train_state(cfg);
    return train(cfg, data, state);
  };
  const auto on = run(100.0), off = run(0.0);
  const double on_start = window_mean(on, 0, 10, &LossLogRow::annealed);
  const double on_quarter = window_mean(on, 90, 100, &LossLogRow::annealed);
  const double off_start = window_mean(off, 0, 10, &LossLogRow::annealed);
  const double off_quarter = window_mean(off, 90, 100, &LossLogRow::annealed);
  const double on_end = window_mean(on, 390, 400, &LossLogRow::annealed);
  const double off_end = window_mean(off, 390, 400, &LossLogRow::annealed);
  MESSAGE("per-frame terms: annealed " << on_start << " -> " << on_quarter << ", disabled "
                                       << off_start << " -> " << off_quarter << ", end "
                                       << on_end << " vs " << off_end);
  CHECK(on_quarter <= 0.5 * on_start);
  CHECK(on_end <= 0.5 * off_end);
}

TEST_CASE("evaluation of noise-free aligned bursts hits the ceiling") {
  SynthConfig synth = SynthConfig::mini();
  synth.max_shift = 0;
  synth.failure_rate = 0.0;
  std::vector<EvalSet> sets;
  EvalSet set{"clean", {}};
  BurstOverrides over;
  over.noise = NoiseParams{0.0, 0.0};
  const auto src = scenes(synth, 2, 11);
  for (std::uint64_t i = 0; i < 3; ++i) set.bursts.push_back(make_burst(src[i % 2], synth, 1, i, over));
  sets.push_back(set);
  NetConfig cfg = NetConfig::mini();
  const auto rows = evaluate(delta_model(cfg), sets);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.psnr == kPsnrCeiling);
    CHECK(r.ssim == doctest::Approx(1.0));
  }
}

TEST_CASE("evaluation reproduces the averaging gain on constant bursts") {
  SynthConfig synth = SynthConfig::mini();
  synth.frames = 8;
  synth.max_shift = 0;
  synth.failure_rate = 0.0;
  const std::size_t e = synth.min_source_extent();
  const std::vector<Image> sources = {Image(e, e, 0.5f), Image(e, e, 0.7f)};
  const auto sets = make_eval_sets(sources, synth, {1.0, 2.0}, GainAnchor{}, 3, 24);
  NetConfig cfg = NetConfig::mini();
  cfg.frames = 8;
  const auto rows = evaluate(delta_model(cfg), sets);
  REQUIRE(rows.size() == 6);
  for (std::size_t g = 0; g < 2; ++g) {
    const MetricsRow& ref = rows[3 * g];
    const MetricsRow& avg = rows[3 * g + 1];
    CHECK(ref.method == "ref_frame");
    CHECK(avg.method == "burst_avg");
    CHECK(rows[3 * g + 2].psnr == doctest::Approx(avg.psnr).epsilon(1e-4));
    CHECK(avg.psnr - ref.psnr == doctest::Approx(9.03).epsilon(0.3 / 9.03));
  }
  CHECK(rows[0].gain == "1");
  CHECK(rows[3].gain == "2");
}

TEST_CASE("evaluation rejects mismatched models") {
  const SynthConfig synth = SynthConfig::mini();
  const auto sets = make_eval_sets(scenes(synth, 1, 12), synth, {1.0}, {}, 1, 1);
  NetConfig cfg = NetConfig::mini();
  cfg.frames = 8;
  CHECK_THROWS(evaluate(delta_model(cfg), sets));
}
