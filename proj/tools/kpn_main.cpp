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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpn/config.hpp"
#include "kpn/data_synth.hpp"
#include "kpn/io.hpp"
#include "kpn/kernel_engine.hpp"
#include "kpn/metrics.hpp"
#include "kpn/trainer.hpp"

namespace fs = std::filesystem;
using namespace kpn;

namespace {

constexpr const char* kBurstExt = ".kpnb";
constexpr const char* kCheckpointExt = ".kpnc";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log_line(const std::string& msg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::cerr << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " " << msg << "\n";
}

AppConfig load_app_config(const std::string& path) {
  return path.empty() ? parse_config("{}") : load_config(path);
}

bool is_image(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<fs::path> list_files(const fs::path& dir, bool (*keep)(const fs::path&)) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && keep(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_burst(const fs::path& p) { return p.extension() == kBurstExt; }

std::vector<Image> load_sources(const fs::path& dir) {
  std::vector<Image> images;
  for (const auto& p : list_files(dir, is_image)) images.push_back(read_pgm(p));
  return images;
}

std::vector<Image> procedural_sources(std::size_t count, std::size_t extent, std::uint64_t seed) {
  std::vector<Image> images;
  for (std::size_t i = 0; i < count; ++i) {
    images.push_back(procedural_scene(extent, extent, derive_key({seed, i})));
  }
  return images;
}

std::string burst_name(std::size_t i) {
  std::ostringstream os;
  os << "burst_" << std::setw(5) << std::setfill('0') << i << kBurstExt;
  return os.str();
}

std::string checkpoint_name(std::int64_t step) {
  std::ostringstream os;
  os << "checkpoint_" << std::setw(7) << std::setfill('0') << step << kCheckpointExt;
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
    if (!(out.back() > 0.0)) throw UsageError(what + ": values must be positive");
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

Model load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  return {ckpt.config, std::move(ckpt.params)};
}

void write_normalized(const fs::path& path, const Image& img, const std::string& label) {
  float peak = 0.0f;
  for (float v : img.pixels) peak = std::max(peak, std::abs(v));
  Image out = img;
  const float factor = peak > 0.0f ? 1.0f / peak : 1.0f;
  for (auto& v : out.pixels) v = std::abs(v) * factor;
  write_pgm(path, out, 8);
  std::cout << label << " " << path.filename().string() << " max=" << fmt(peak)
            << " scale=" << fmt(factor) << "\n";
}

// ---------------------------------------------------------------- synthesize

struct SynthesizeArgs {
  std::string input_dir, out, config;
  std::size_t count = 16;
  std::uint64_t seed = 0;
  std::size_t procedural = 0;
  double gain = 0.0;
};

void run_synthesize(const SynthesizeArgs& a) {
  const AppConfig cfg = load_app_config(a.config);
  const SynthConfig& synth = cfg.train.synth;
  std::vector<Image> sources;
  if (!a.input_dir.empty()) sources = load_sources(a.input_dir);
  if (a.procedural > 0) {
    auto extra = procedural_sources(a.procedural, synth.min_source_extent(), a.seed);
    sources.insert(sources.end(), extra.begin(), extra.end());
  }
  if (sources.empty()) throw UsageError("synthesize: no source images (use --input-dir or --procedural)");
  fs::create_directories(a.out);
  BurstOverrides over;
  if (a.gain > 0.0) over.noise = gain_level_params(a.gain, cfg.anchor);

  std::vector<std::string> errors(a.count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < a.count; ++i) {
    try {
      const Burst b = make_burst(sources[i % sources.size()], synth, a.seed, i, over);
      save_burst(fs::path(a.out) / burst_name(i), b);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < a.count; ++i) {
    if (!errors[i].empty()) throw std::runtime_error("burst " + std::to_string(i) + ": " + errors[i]);
  }
  log_line("synthesize: wrote " + std::to_string(a.count) + " bursts to " + a.out);
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out, config, resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> iters;
};

void run_train(const TrainArgs& a) {
  AppConfig cfg = load_app_config(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.iters) cfg.train.iters = *a.iters;
  cfg.train.validate();

  std::unique_ptr<BurstSource> data;
  const auto bursts = list_files(a.data, is_burst);
  if (!bursts.empty()) {
    std::vector<Burst> set;
    for (const auto& p : bursts) set.push_back(load_burst(p));
    data = std::make_unique<DatasetSource>(std::move(set));
    log_line("train: " + std::to_string(bursts.size()) + " pregenerated bursts");
  } else {
    auto sources = load_sources(a.data);
    if (sources.empty()) throw UsageError("train: " + a.data + " holds no bursts or images");
    data = std::make_unique<SynthSource>(std::move(sources), cfg.train.synth, cfg.train.batch);
    log_line("train: synthesizing bursts on the fly");
  }

  TrainState state;
  if (!a.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.resume);
    if (!(ckpt.config == cfg.train.net)) {
      throw ConfigError("train: checkpoint network config differs from the run config");
    }
    state = state_from_checkpoint(ckpt);
    log_line("train: resuming at step " + std::to_string(state.step));
  } else {
    state = init_train_state(cfg.train);
  }

  fs::create_directories(a.out);
  const fs::path csv_path = fs::path(a.out) / "loss.csv";
  std::ofstream csv(csv_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!csv) throw IoError("cannot open " + csv_path.string());
  if (a.resume.empty()) csv << "step,total,basic,annealed,weight\n";

  TrainCallbacks cb;
  cb.on_step = [&](const LossLogRow& r) {
    csv << r.step << ',' << fmt(r.total) << ',' << fmt(r.basic) << ',' << fmt(r.annealed) << ','
        << fmt(r.weight) << '\n';
    if (!csv) throw IoError("train: write to " + csv_path.string() + " failed at step " + std::to_string(r.step));
    if ((r.step + 1) % 100 == 0) {
      log_line("train: step " + std::to_string(r.step + 1) + " total " + fmt(r.total));
    }
  };
  cb.on_checkpoint = [&](const TrainState& s) {
    const fs::path p = fs::path(a.out) / checkpoint_name(s.step);
    try {
      save_checkpoint(p, checkpoint_from_state(cfg.train.net, s));
    } catch (const std::exception& e) {
      throw IoError("train: checkpoint at step " + std::to_string(s.step) + ": " + e.what());
    }
  };
  train(cfg.train, *data, state, cb);
  save_checkpoint(fs::path(a.out) / (std::string("final") + kCheckpointExt),
                  checkpoint_from_state(cfg.train.net, state));
  log_line("train: finished at step " + std::to_string(state.step));
}

// ---------------------------------------------------------------------- init

struct InitArgs {
  std::string out, config;
  std::uint64_t seed = 0;
  bool zero = false;
};

void run_init(const InitArgs& a) {
  const AppConfig cfg = load_app_config(a.config);
  Checkpoint ckpt;
  ckpt.config = cfg.train.net;
  ckpt.params = init_params<float>(cfg.train.net, a.seed,
                                   a.zero ? InitMode::kZero : InitMode::kHeGaussian);
  save_checkpoint(a.out, ckpt);
}

// ------------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::string burst, checkpoint, out;
  double sigma_scale = 1.0;
  bool linear = false;
};

void run_denoise(const DenoiseArgs& a) {
  const Model model = load_model(a.checkpoint);
  const Burst burst = load_burst(a.burst);
  const Image est = denoise(model, burst, a.sigma_scale);
  Image out = display_image(est, burst.white_level());
  if (a.linear) {
    for (std::size_t i = 0; i < est.size(); ++i) out.pixels[i] = est.pixels[i] / burst.white_level();
  }
  write_pgm(a.out, out, 16);
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string data, checkpoint, report, gains, sigma_scales = "1", maps_dir, direct,
              config;
  std::uint64_t seed = 0;
};

void run_eval(const EvalArgs& a) {
  const AppConfig cfg = load_app_config(a.config);
  const Model model = load_model(a.checkpoint);
  std::optional<Model> direct;
  if (!a.direct.empty()) direct = load_model(a.direct);

  std::vector<EvalSet> sets;
  const auto bursts = list_files(a.data, is_burst);
  if (!bursts.empty()) {
    EvalSet set{"file", {}};
    for (const auto& p : bursts) set.bursts.push_back(load_burst(p));
    sets.push_back(std::move(set));
  } else {
    const auto sources = load_sources(a.data);
    if (sources.empty()) throw UsageError("eval: " + a.data + " holds no bursts or images");
    SynthConfig synth = cfg.train.synth;
    synth.frames = model.config.frames;
    const auto gains = a.gains.empty() ? cfg.gains : parse_list(a.gains, "--gains");
    sets = make_eval_sets(sources, synth, gains, cfg.anchor, a.seed,
                          cfg.eval_count);
  }

  std::ofstream csv(a.report, std::ios::trunc);
  if (!csv) throw IoError("cannot open " + a.report);
  csv << "sigma_scale,gain,method,psnr,ssim\n";
  for (double s : parse_list(a.sigma_scales, "--sigma-scale")) {
    for (const auto& r : evaluate(model, sets, s, direct)) {
      csv << fmt(s) << ',' << r.gain << ',' << r.method << ',' << fmt(r.psnr) << ','
          << fmt(r.ssim) << '\n';
    }
    if (!a.maps_dir.empty() && model.config.head == NetHead::kKernelPrediction) {
      const fs::path dir = fs::path(a.maps_dir) / ("sigma_" + fmt(s));
      fs::create_directories(dir);
      const auto maps = frame_weight_map(predict_kernels(model, sets.front().bursts.front(), s));
      for (std::size_t i = 0; i < maps.size(); ++i) {
        write_normalized(dir / ("weights_frame" + std::to_string(i) + ".pgm"), maps[i], "weights");
      }
      std::cout << "sigma_scale " << fmt(s) << " alternate_mass " << fmt(alternate_mass(maps)) << "\n";
    }
  }
  if (!csv) throw IoError("write to " + a.report + " failed");
}

// ------------------------------------------------------------------- inspect

struct InspectArgs {
  std::string burst, checkpoint, out_dir;
  double sigma_scale = 1.0;
};

void run_inspect(const InspectArgs& a) {
  const Model model = load_model(a.checkpoint);
  if (model.config.head != NetHead::kKernelPrediction) {
    throw UsageError("inspect: checkpoint has no kernel-prediction head");
  }
  const Burst burst = load_burst(a.burst);
  const KernelStack<float> k = predict_kernels(model, burst, a.sigma_scale);
  fs::create_directories(a.out_dir);
  const auto maps = frame_weight_map(k);
  const auto means = mean_kernels(k);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    write_normalized(fs::path(a.out_dir) / ("weights_frame" + std::to_string(i) + ".pgm"),
                     maps[i], "weights");
    write_normalized(fs::path(a.out_dir) / ("kernel_frame" + std::to_string(i) + ".pgm"),
                     means[i], "kernel");
  }
  std::cout << "alternate_mass " << fmt(alternate_mass(maps)) << "\n";
}

int exit_code_for(const std::string& category) {
  if (category == "usage") return 2;
  if (category == "config") return 3;
  if (category == "io" || category == "format") return 4;
  return 1;
}

int fail(const std::string& category, const std::string& message) {
  std::string one_line = message;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::cerr << "kpn-error: " << category << ": " << one_line << "\n";
  return exit_code_for(category);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Burst denoising with kernel prediction networks"};
  app.require_subcommand(1);
  app.footer(
      "Loss CSV columns: step,total,basic,annealed,weight\n"
      "Metrics CSV columns: sigma_scale,gain,method,psnr,ssim\n"
      "Errors: one line 'kpn-error: <category>: <message>' on stderr; exit 2 usage, "
      "3 config, 4 io/format, 1 other.");

  SynthesizeArgs sa;
  auto* syn = app.add_subcommand("synthesize", "Write synthetic burst containers");
  syn->add_option("--input-dir", sa.input_dir, "Directory of clean PGM/PPM images");
  syn->add_option("--procedural", sa.procedural, "Add this many procedural scenes as sources");
  syn->add_option("--out", sa.out, "Output directory")->required();
  syn->add_option("--count", sa.count, "Number of bursts")->check(CLI::PositiveNumber);
  syn->add_option("--seed", sa.seed, "Random seed");
  syn->add_option("--config", sa.config, "JSON config");
  syn->add_option("--gain", sa.gain, "Pin noise to this gain level");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train a model; writes checkpoints and loss.csv");
  trn->add_option("--data", ta.data, "Directory of bursts or clean images")->required();
  trn->add_option("--out", ta.out, "Output directory")->required();
  trn->add_option("--config", ta.config, "JSON config");
  trn->add_option("--seed", ta.seed, "Random seed (overrides train.seed)");
  trn->add_option("--iters", ta.iters, "Iterations (overrides train.iters)");
  trn->add_option("--resume", ta.resume, "Checkpoint to resume from");

  InitArgs ia;
  auto* ini = app.add_subcommand("init", "Write an untrained checkpoint");
  ini->add_option("--out", ia.out, "Checkpoint path")->required();
  ini->add_option("--config", ia.config, "JSON config");
  ini->add_option("--seed", ia.seed, "Random seed");
  ini->add_flag("--zero", ia.zero, "All-zero parameters");

  DenoiseArgs da;
  auto* den = app.add_subcommand("denoise", "Denoise one burst to a 16-bit PGM");
  den->add_option("--burst", da.burst, "Burst container")->required();
  den->add_option("--checkpoint", da.checkpoint, "Checkpoint")->required();
  den->add_option("--out", da.out, "Output PGM")->required();
  den->add_option("--sigma-scale", da.sigma_scale, "Noise-map multiplier")->check(CLI::PositiveNumber);
  den->add_flag("--linear", da.linear, "Skip the sRGB curve");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM table across gain levels");
  ev->add_option("--data", ea.data, "Directory of clean images or burst containers")->required();
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint")->required();
  ev->add_option("--report", ea.report, "Metrics CSV path")->required();
  ev->add_option("--gains", ea.gains, "Comma-separated gain levels (default: eval.gains)");
  ev->add_option("--sigma-scale", ea.sigma_scales, "Comma-separated noise-map multipliers");
  ev->add_option("--maps-dir", ea.maps_dir, "Write weight maps per sigma scale here");
  ev->add_option("--direct", ea.direct, "Direct-synthesis checkpoint to compare");
  ev->add_option("--config", ea.config, "JSON config");
  ev->add_option("--seed", ea.seed, "Random seed");

  InspectArgs na;
  auto* ins = app.add_subcommand("inspect", "Per-frame weight maps and mean kernels");
  ins->add_option("--burst", na.burst, "Burst container")->required();
  ins->add_option("--checkpoint", na.checkpoint, "Checkpoint")->required();
  ins->add_option("--out-dir", na.out_dir, "Output directory")->required();
  ins->add_option("--sigma-scale", na.sigma_scale, "Noise-map multiplier")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*syn) run_synthesize(sa);
    if (*trn) run_train(ta);
    if (*ini) run_init(ia);
    if (*den) run_denoise(da);
    if (*ev) run_eval(ea);
    if (*ins) run_inspect(na);
  } catch (const UsageError& e) {
    return fail("usage", e.what());
  } catch (const ConfigError& e) {
    return fail("config", e.what());
  } catch (const FormatError& e) {
    return fail("format", e.what());
  } catch (const IoError& e) {
    return fail("io", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
