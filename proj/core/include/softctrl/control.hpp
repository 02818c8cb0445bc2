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

#include <Eigen/Dense>
#include <functional>

#include "softctrl/gp.hpp"

namespace softctrl {

/// Desired output trajectory sample: tip-angle acceleration, velocity and
/// position. Stacked in that order it forms the GP query point.
struct DesiredOutput {
  double acceleration = 0.0;  // rad/s^2
  double velocity = 0.0;      // rad/s
  double position = 0.0;      // rad

  Eigen::Vector3d stacked() const {
    return {acceleration, velocity, position};
  }
};

/// Sigmoid gate parameters: alpha = sig(c1 * max_i var_i + c2). c1 > 0 so
/// that higher variance always means more feedback.
struct BlendConfig {
  double c1 = 10.0;  // 1 / variance units
  double c2 = -5.0;

  void validate() const;
};

/// Blend weight in [0, 1]; aggregates the per-output variances by maximum.
double alpha_blend(const Eigen::VectorXd& variances, const BlendConfig& cfg);

struct PidConfig {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double dt = 1e-3;              // s, control period
  double integral_limit = 50.0;  // anti-windup clamp on the integral state
  double output_limit = 100.0;   // saturation of the output-space command

  void validate() const;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
};

/// One discrete PID update in output space; integrate-then-apply, with the
/// integral clamped to +-integral_limit and the command saturated to
/// +-output_limit. Returns the scalar command.
double pid_step(const PidConfig& cfg, PidState& state, double error,
                double dt);

/// Output-space command spread over the generalized forces through the
/// transpose of the output-map Jacobian (all ones) scaled by 1/n.
Eigen::VectorXd distribute_output_command(double command, Eigen::Index n);

/// Feedback force vector u(e) for the current tracking error.
Eigen::VectorXd feedback(const PidConfig& cfg, PidState& state, double error,
                         double dt, Eigen::Index n);

/// Gray-box prior h(y~): estimated force for a stacked output query.
using EstimatedModel = std::function<Eigen::VectorXd(const Eigen::Vector3d&)>;

/// The "no prior knowledge" default.
EstimatedModel zero_model(Eigen::Index output_dim);

/// p_ff = GP mean at the desired output plus the gray-box estimate.
Eigen::VectorXd feedforward(const TrainedGp& gp, const EstimatedModel& h,
                            const DesiredOutput& target);

struct ControlStep {
  Eigen::VectorXd p;          // applied force, (1-alpha) p_ff + alpha u
  Eigen::VectorXd p_ff;       // feed-forward part
  Eigen::VectorXd u;          // feedback part
  Eigen::VectorXd variances;  // GP posterior variance per output
  double alpha = 0.0;
};

/// One step of the blended control law. Mutates the PID state; everything
/// else is read-only.
ControlStep control_law(const TrainedGp& gp, const EstimatedModel& h,
                        const PidConfig& pid_cfg, PidState& pid_state,
                        const BlendConfig& blend, const DesiredOutput& target,
                        double measured_y);

}  // namespace softctrl
