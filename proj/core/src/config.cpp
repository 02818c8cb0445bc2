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

#include "softctrl/config.hpp"

#include <charconv>
#include <fstream>
#include <string_view>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  return text;
}

double parse_number(std::string_view value, const std::string& key) {
  double out = 0.0;
  const auto res =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "' has non-numeric value '" +
                      std::string(value) + "'");
  }
  return out;
}

std::uint64_t parse_seed(std::string_view value, const std::string& key) {
  std::uint64_t out = 0;
  const auto res =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "' has non-integer value '" +
                      std::string(value) + "'");
  }
  return out;
}

void apply_key(AppConfig& cfg, const std::string& key,
               std::string_view value) {
  const auto num = [&] { return parse_number(value, key); };
  if (key == "robot.segments") {
    cfg.robot.segments = static_cast<int>(num());
  } else if (key == "robot.segment_length") {
    cfg.robot.segment_length = num();
  } else if (key == "robot.segment_mass") {
    cfg.robot.segment_mass = num();
  } else if (key == "robot.moment_arm") {
    cfg.robot.moment_arm = num();
  } else if (key == "robot.passive_stiffness") {
    cfg.robot.passive_stiffness = num();
  } else if (key == "robot.damping") {
    cfg.robot.damping = num();
  } else if (key == "robot.gravity") {
    cfg.robot.gravity = num();
  } else if (key == "excitation.kind") {
    cfg.excitation.kind = excitation_kind_from_string(std::string(value));
  } else if (key == "excitation.amplitude") {
    cfg.excitation.amplitude = num();
  } else if (key == "excitation.f_lo") {
    cfg.excitation.f_lo = num();
  } else if (key == "excitation.f_hi") {
    cfg.excitation.f_hi = num();
  } else if (key == "excitation.duration") {
    cfg.excitation.duration = num();
  } else if (key == "pid.kp") {
    cfg.pid.kp = num();
  } else if (key == "pid.ki") {
    cfg.pid.ki = num();
  } else if (key == "pid.kd") {
    cfg.pid.kd = num();
  } else if (key == "pid.integral_limit") {
    cfg.pid.integral_limit = num();
  } else if (key == "pid.output_limit") {
    cfg.pid.output_limit = num();
  } else if (key == "blend.c1") {
    if (value == "auto") {
      cfg.blend_c1 = 0.0;
    } else {
      cfg.blend_c1 = num();
    }
  } else if (key == "blend.c2") {
    cfg.blend_c2 = num();
  } else if (key == "sim.dt") {
    cfg.dt = num();
  } else if (key == "collect.samples") {
    cfg.dataset_size = static_cast<Eigen::Index>(num());
  } else if (key == "collect.region") {
    cfg.region = region_from_string(std::string(value));
  } else if (key == "track.offset") {
    cfg.track.offset = num();
  } else if (key == "track.amplitude") {
    cfg.track.amplitude = num();
  } else if (key == "track.frequency") {
    cfg.track.frequency = num();
  } else if (key == "track.duration") {
    cfg.track.duration = num();
  } else if (key == "probe.torque") {
    cfg.probe.torque = num();
  } else if (key == "probe.segment") {
    cfg.probe.segment_index = static_cast<int>(num());
  } else if (key == "probe.settle") {
    cfg.probe.settle_time = num();
  } else if (key == "probe.duration") {
    cfg.probe.probe_duration = num();
  } else if (key == "probe.y_in") {
    cfg.probe.y_in = num();
  } else if (key == "probe.y_out") {
    cfg.probe.y_out = num();
  } else if (key == "seed") {
    cfg.seed = parse_seed(value, key);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

void apply_config_file(AppConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not of the form 'key = value'");
    }
    const std::string key{trim(text.substr(0, eq))};
    const std::string_view value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is missing a key or value");
    }
    apply_key(config, key, value);
  }
}

BlendConfig resolve_blend(const AppConfig& config, const TrainedGp& gp) {
  BlendConfig blend;
  blend.c1 = (config.blend_c1 > 0.0)
                 ? config.blend_c1
                 : 10.0 / gp.hyperparameters().signal_variance;
  blend.c2 = config.blend_c2;
  blend.validate();
  return blend;
}

}  // namespace softctrl
