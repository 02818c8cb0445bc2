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
#include <vector>

namespace softctrl {

/// Planar worm-like robot discretized into identical rigid segments (uniform
/// rods) connected by revolute joints. q = 0 is the robot hanging straight
/// down; each segment carries one signed net muscle force that acts through a
/// constant moment arm, so the generalized force dimension equals the number
/// of segments.
struct RobotConfig {
  int segments = 3;                 // n_s >= 1
  double segment_length = 0.1;      // m
  double segment_mass = 0.05;       // kg
  double moment_arm = 0.02;         // m, maps muscle force to joint torque
  double passive_stiffness = 0.05;  // N*m/rad about q = 0
  double damping = 0.01;            // N*m*s/rad
  double gravity = 9.81;            // m/s^2

  void validate() const;
};

struct RobotState {
  Eigen::VectorXd q;      // joint angles, rad
  Eigen::VectorXd q_dot;  // joint velocities, rad/s
  double time = 0.0;      // s
};

RobotState rest_state(const RobotConfig& cfg);

/// Generalized probe torque applied at one joint over a time window.
struct ExternalForce {
  int segment_index = 0;
  double torque = 0.0;  // N*m
  double t_start = 0.0;
  double t_end = 0.0;

  bool active(double t) const { return t >= t_start && t < t_end; }
  void validate(int segments) const;
};

/// Joint-space inertia matrix, symmetric positive definite.
Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q, const RobotConfig& cfg);

/// All partial derivatives dM/dq_c, used by the Coriolis assembly.
std::vector<Eigen::MatrixXd> mass_matrix_partials(const Eigen::VectorXd& q,
                                                  const RobotConfig& cfg);

/// Coriolis matrix from the Christoffel symbols of the inertia matrix, so
/// that Mdot - 2C is skew-symmetric.
Eigen::MatrixXd coriolis_matrix(const Eigen::VectorXd& q,
                                const Eigen::VectorXd& q_dot,
                                const RobotConfig& cfg);

/// Gravity + passive elastic + viscous forces: N = dU/dq + damping * q_dot.
Eigen::VectorXd force_vector(const Eigen::VectorXd& q,
                             const Eigen::VectorXd& q_dot,
                             const RobotConfig& cfg);

/// tau = moment_arm * p (configuration-independent moment arm).
Eigen::VectorXd actuator_force(const Eigen::VectorXd& q,
                               const Eigen::VectorXd& p,
                               const RobotConfig& cfg);

/// Tip angle with respect to the base: the sum of all joint angles.
double output_map(const Eigen::VectorXd& q);

/// q_ddot = M^-1 (tau(q, p) + tau_ext - C q_dot - N). ext may be null.
Eigen::VectorXd forward_dynamics(const RobotState& state,
                                 const Eigen::VectorXd& p,
                                 const ExternalForce* ext,
                                 const RobotConfig& cfg);

/// One classical fourth-order explicit integration step with the muscle
/// forces held constant; the external force window is evaluated at each
/// stage time. Throws DivergenceError if the state leaves the finite range.
RobotState step(const RobotState& state, const Eigen::VectorXd& p,
                const ExternalForce* ext, double dt, const RobotConfig& cfg);

/// Gravity (zeroed at the hanging configuration) plus elastic energy.
double potential_energy(const Eigen::VectorXd& q, const RobotConfig& cfg);

double total_energy(const RobotState& state, const RobotConfig& cfg);

}  // namespace softctrl
