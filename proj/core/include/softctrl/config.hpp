// Copyright 2026 The softctrl Authors
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

#pragma once

#include <cstdint>
#include <string>

#include "softctrl/control.hpp"
#include "softctrl/excitation.hpp"
#include "softctrl/experiments.hpp"
#include "softctrl/robot.hpp"

namespace softctrl {

/// Everything the pipeline needs, with the built-in defaults. Values come
/// from (highest precedence first) command-line flags, a config file, then
/// these defaults.
struct AppConfig {
  RobotConfig robot;
  ExcitationProfile excitation;
  PidConfig pid{120.0, 150.0, 0.0, 1e-3, 10.0, 60.0};
  double blend_c1 = 0.0;  // 0 means auto: 10 / learned signal variance
  double blend_c2 = -5.0;
  double dt = 1e-3;            // simulation step == control period
  Eigen::Index dataset_size = 250;
  Region region = Region::kPositive;
  ReferenceSpec track;
  ProbeSpec probe;
  std::uint64_t seed = 1;
};

/// Parses "key = value" lines ('#' starts a comment) into an existing
/// config. Unknown keys or unparsable values raise ConfigError naming the
/// offending field.
void apply_config_file(AppConfig& config, const std::string& path);

/// Resolves the blend gains against a trained model: c1 defaults to
/// 10 / signal_variance so alpha spans ~0.007 at zero variance to ~0.993 at
/// the prior variance.
BlendConfig resolve_blend(const AppConfig& config, const TrainedGp& gp);

}  // namespace softctrl
