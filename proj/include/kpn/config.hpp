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

#ifndef KPN_CONFIG_HPP_
#define KPN_CONFIG_HPP_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpn/noise_model.hpp"
#include "kpn/trainer.hpp"

namespace kpn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AppConfig {
  TrainConfig train = TrainConfig::desk();
  GainAnchor anchor;
  std::vector<double> gains = {1.0, 2.0, 4.0, 8.0};
  std::size_t eval_count = 16;
};

/// Flat JSON object of dotted keys, e.g. {"preset": "desk", "train.lr": 1e-4}.
/// "preset" (desk | paper) applies first; unknown keys and mistyped values
/// are rejected. The result is validated.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::filesystem::path& path);

/// Every key parse_config accepts.
std::vector<std::string> config_keys();

}  // namespace kpn

#endif  // KPN_CONFIG_HPP_
