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

#include "softctrl/control.hpp"

#include <algorithm>
#include <cmath>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_abs(double value, double limit) {
  return std::clamp(value, -limit, limit);
}

}  // namespace

void BlendConfig::validate() const {
  if (!(c1 > 0.0) || !std::isfinite(c1)) {
    throw ConfigError("blend.c1 must be positive");
  }
  if (!std::isfinite(c2)) {
    throw ConfigError("blend.c2 must be finite");
  }
}

double alpha_blend(const Eigen::VectorXd& variances, const BlendConfig& cfg) {
  if (variances.size() < 1) {
    throw std::invalid_argument("alpha_blend needs at least one variance");
  }
  return sigmoid(cfg.c1 * variances.maxCoeff() + cfg.c2);
}

void PidConfig::validate() const {
  if (kp < 0.0 || ki < 0.0 || kd < 0.0) {
    throw ConfigError("pid gains must be nonnegative");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("pid.dt must be positive");
  }
  if (!(integral_limit >= 0.0) || !(output_limit > 0.0)) {
    throw ConfigError("pid limits must be positive");
  }
}

double pid_step(const PidConfig& cfg, PidState& state, double error,
                double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("pid dt must be positive");
  }
  state.integral = clamp_abs(state.integral + error * dt, cfg.integral_limit);
  double derivative = 0.0;
  if (cfg.kd > 0.0 && state.has_prev) {
    derivative = (error - state.prev_error) / dt;
  }
  state.prev_error = error;
  state.has_prev = true;
  const double command =
      cfg.kp * error + cfg.ki * state.integral + cfg.kd * derivative;
  return clamp_abs(command, cfg.output_limit);
}

Eigen::VectorXd distribute_output_command(double command, Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, command / static_cast<double>(n));
}

Eigen::VectorXd feedback(const PidConfig& cfg, PidState& state, double error,
                         double dt, Eigen::Index n) {
  return distribute_output_command(pid_step(cfg, state, error, dt), n);
}

EstimatedModel zero_model(Eigen::Index output_dim) {
  return [output_dim](const Eigen::Vector3d&) {
    return Eigen::VectorXd::Zero(output_dim);
  };
}

Eigen::VectorXd feedforward(const TrainedGp& gp, const EstimatedModel& h,
                            const DesiredOutput& target) {
  const Eigen::Vector3d query = target.stacked();
  return gp.predict_mean(query) + h(query);
}

ControlStep control_law(const TrainedGp& gp, const EstimatedModel& h,
                        const PidConfig& pid_cfg, PidState& pid_state,
                        const BlendConfig& blend, const DesiredOutput& target,
                        double measured_y) {
  ControlStep out;
  const Eigen::Vector3d query = target.stacked();
  out.p_ff = gp.predict_mean(query) + h(query);
  out.variances = gp.predict_variance(query);
  out.alpha = alpha_blend(out.variances, blend);
  out.u = feedback(pid_cfg, pid_state, target.position - measured_y,
                   pid_cfg.dt, gp.output_dim());
  out.p = (1.0 - out.alpha) * out.p_ff + out.alpha * out.u;
  return out;
}

}  // namespace softctrl
