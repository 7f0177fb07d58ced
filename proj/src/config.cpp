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

#include "kpn/config.hpp"

#include <functional>
#include <map>

#include <json.hpp>

#include "kpn/io.hpp"

namespace kpn {
namespace {

using Json = nlohmann::json;
using Setter = std::function<void(AppConfig&, const Json&)>;

double as_number(const std::string& key, const Json& v) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t as_count(const std::string& key, const Json& v) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

bool as_bool(const std::string& key, const Json& v) {
  if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&t](const std::string& key, auto field) {
      t[key] = [key, field](AppConfig& c, const Json& v) { field(c) = as_number(key, v); };
    };
    auto count = [&t](const std::string& key, auto field) {
      t[key] = [key, field](AppConfig& c, const Json& v) {
        field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(as_count(key, v));
      };
    };
    num("train.lr", [](AppConfig& c) -> double& { return c.train.lr; });
    count("train.batch", [](AppConfig& c) -> std::size_t& { return c.train.batch; });
    count("train.iters", [](AppConfig& c) -> std::int64_t& { return c.train.iters; });
    count("train.seed", [](AppConfig& c) -> std::uint64_t& { return c.train.seed; });
    num("train.clip_norm", [](AppConfig& c) -> double& { return c.train.clip_norm; });
    count("train.checkpoint_every",
          [](AppConfig& c) -> std::int64_t& { return c.train.checkpoint_every; });
    num("anneal.beta", [](AppConfig& c) -> double& { return c.train.anneal.beta; });
    num("anneal.alpha", [](AppConfig& c) -> double& { return c.train.anneal.alpha; });
    num("loss.intensity", [](AppConfig& c) -> double& { return c.train.loss.intensity; });
    num("loss.gradient", [](AppConfig& c) -> double& { return c.train.loss.gradient; });
    count("net.levels", [](AppConfig& c) -> std::size_t& { return c.train.net.levels; });
    count("net.kernel_size", [](AppConfig& c) -> std::size_t& { return c.train.net.kernel_size; });
    t["net.widths"] = [](AppConfig& c, const Json& v) {
      if (!v.is_array()) throw ConfigError("config: 'net.widths' must be an array");
      c.train.net.widths.clear();
      for (const auto& w : v) c.train.net.widths.push_back(as_count("net.widths", w));
    };
    t["net.noise_aware"] = [](AppConfig& c, const Json& v) {
      c.train.net.noise_aware = as_bool("net.noise_aware", v);
    };
    t["net.head"] = [](AppConfig& c, const Json& v) {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "kernel") {
        c.train.net.head = NetHead::kKernelPrediction;
      } else if (s == "direct") {
        c.train.net.head = NetHead::kDirectSynthesis;
      } else {
        throw ConfigError("config: 'net.head' must be \"kernel\" or \"direct\"");
      }
    };
    t["synth.frames"] = [](AppConfig& c, const Json& v) {
      c.train.synth.frames = as_count("synth.frames", v);
      c.train.net.frames = c.train.synth.frames;
    };
    count("synth.downsample", [](AppConfig& c) -> std::size_t& { return c.train.synth.downsample; });
    count("synth.max_shift", [](AppConfig& c) -> std::size_t& { return c.train.synth.max_shift; });
    count("synth.fail_shift", [](AppConfig& c) -> std::size_t& { return c.train.synth.fail_shift; });
    num("synth.failure_rate", [](AppConfig& c) -> double& { return c.train.synth.failure_rate; });
    num("synth.scale_min", [](AppConfig& c) -> double& { return c.train.synth.scale_min; });
    num("synth.scale_max", [](AppConfig& c) -> double& { return c.train.synth.scale_max; });
    count("synth.patch", [](AppConfig& c) -> std::size_t& { return c.train.synth.patch; });
    num("noise.shot_min", [](AppConfig& c) -> double& { return c.train.synth.noise.shot_min; });
    num("noise.shot_max", [](AppConfig& c) -> double& { return c.train.synth.noise.shot_max; });
    num("noise.read_min", [](AppConfig& c) -> double& { return c.train.synth.noise.read_min; });
    num("noise.read_max", [](AppConfig& c) -> double& { return c.train.synth.noise.read_max; });
    num("eval.anchor_shot", [](AppConfig& c) -> double& { return c.anchor.sigma_s; });
    num("eval.anchor_read", [](AppConfig& c) -> double& { return c.anchor.sigma_r; });
    count("eval.count", [](AppConfig& c) -> std::size_t& { return c.eval_count; });
    t["eval.gains"] = [](AppConfig& c, const Json& v) {
      if (!v.is_array() || v.empty()) {
        throw ConfigError("config: 'eval.gains' must be a non-empty array");
      }
      c.gains.clear();
      for (const auto& g : v) c.gains.push_back(as_number("eval.gains", g));
    };
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys = {"preset"};
  for (const auto& [key, setter] : setters()) keys.push_back(key);
  return keys;
}

AppConfig parse_config(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  AppConfig cfg;
  if (auto it = doc.find("preset"); it != doc.end()) {
    const std::string preset = it->is_string() ? it->get<std::string>() : "";
    if (preset == "desk") {
      cfg.train = TrainConfig::desk();
    } else if (preset == "paper") {
      cfg.train = TrainConfig::paper();
    } else {
      throw ConfigError("config: 'preset' must be \"desk\" or \"paper\"");
    }
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(cfg, value);
  }
  try {
    cfg.train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.train.net.frames != cfg.train.synth.frames) {
    throw ConfigError("config: network frame count differs from synthesis frame count");
  }
  for (double g : cfg.gains) {
    if (!(g > 0.0)) throw ConfigError("config: gains must be positive");
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

}  // namespace kpn
