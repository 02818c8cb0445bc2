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

#include "softctrl/robot.hpp"

#include <cmath>
#include <sstream>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

void check_state_size(const Eigen::VectorXd& v, int n, const char* name) {
  if (v.size() != n) {
    std::ostringstream msg;
    msg << name << " has size " << v.size() << ", expected " << n;
    throw std::invalid_argument(msg.str());
  }
}

Eigen::VectorXd absolute_angles(const Eigen::VectorXd& q) {
  Eigen::VectorXd phi(q.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    acc += q[j];
    phi[j] = acc;
  }
  return phi;
}

// S(j, l) = sum over links k of the products of the center-of-mass lever
// arms of joints j and l (L for joints proximal to link k, L/2 at link k
// itself). Identical uniform segments give the closed form below.
double lever_product_sum(Eigen::Index j, Eigen::Index l, Eigen::Index n,
                         double length) {
  const Eigen::Index outer = std::max(j, l);
  const double tail = static_cast<double>(n - 1 - outer);
  const double self = (j == l) ? 0.25 : 0.5;
  return length * length * (self + tail);
}

// Replaces A by its "suffix sum" B(a,b) = sum_{j>=a, l>=b} A(j,l), which maps
// the inertia expressed in absolute link angles to joint coordinates.
void suffix_sum_in_place(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = n - 2; row >= 0; --row) {
      a(row, col) += a(row + 1, col);
    }
  }
  for (Eigen::Index row = 0; row < n; ++row) {
    for (Eigen::Index col = n - 2; col >= 0; --col) {
      a(row, col) += a(row, col + 1);
    }
  }
}

}  // namespace

void RobotConfig::validate() const {
  const auto fail = [](const char* what) { throw ConfigError(what); };
  if (segments < 1) fail("robot.segments must be >= 1");
  if (!(segment_length > 0.0) || !std::isfinite(segment_length)) {
    fail("robot.segment_length must be positive");
  }
  if (!(segment_mass > 0.0) || !std::isfinite(segment_mass)) {
    fail("robot.segment_mass must be positive");
  }
  if (!(moment_arm > 0.0) || !std::isfinite(moment_arm)) {
    fail("robot.moment_arm must be positive");
  }
  if (!(passive_stiffness >= 0.0) || !std::isfinite(passive_stiffness)) {
    fail("robot.passive_stiffness must be nonnegative");
  }
  if (!(damping >= 0.0) || !std::isfinite(damping)) {
    fail("robot.damping must be nonnegative");
  }
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) {
    fail("robot.gravity must be nonnegative");
  }
}

RobotState rest_state(const RobotConfig& cfg) {
  RobotState state;
  state.q = Eigen::VectorXd::Zero(cfg.segments);
  state.q_dot = Eigen::VectorXd::Zero(cfg.segments);
  state.time = 0.0;
  return state;
}

void ExternalForce::validate(int segments) const {
  if (segment_index < 0 || segment_index >= segments) {
    std::ostringstream msg;
    msg << "external force segment index " << segment_index
        << " out of range [0, " << segments << ")";
    throw ConfigError(msg.str());
  }
  if (!(t_start < t_end)) {
    throw ConfigError("external force window must have t_start < t_end");
  }
  if (!std::isfinite(torque)) {
    throw ConfigError("external force torque must be finite");
  }
}

Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q, const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(q, cfg.segments, "q");
  const double m = cfg.segment_mass;
  const double rod_inertia =
      m * cfg.segment_length * cfg.segment_length / 12.0;
  const Eigen::VectorXd phi = absolute_angles(q);

  Eigen::MatrixXd inertia(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    inertia(j, j) =
        m * lever_product_sum(j, j, n, cfg.segment_length) + rod_inertia;
    for (Eigen::Index l = j + 1; l < n; ++l) {
      const double value = m * lever_product_sum(j, l, n, cfg.segment_length) *
                           std::cos(phi[j] - phi[l]);
      inertia(j, l) = value;
      inertia(l, j) = value;
    }
  }
  suffix_sum_in_place(inertia);
  return inertia;
}

std::vector<Eigen::MatrixXd> mass_matrix_partials(const Eigen::VectorXd& q,
                                                  const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(q, cfg.segments, "q");
  const double m = cfg.segment_mass;
  const Eigen::VectorXd phi = absolute_angles(q);

  std::vector<Eigen::MatrixXd> partials;
  partials.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = 0; l < n; ++l) {
        // d phi_j / d q_c is 1 for c <= j, so only pairs straddling c move.
        const int indicator = (c <= j ? 1 : 0) - (c <= l ? 1 : 0);
        if (indicator == 0) continue;
        d(j, l) = -m * lever_product_sum(j, l, n, cfg.segment_length) *
                  std::sin(phi[j] - phi[l]) * indicator;
      }
    }
    suffix_sum_in_place(d);
    partials.push_back(std::move(d));
  }
  return partials;
}

Eigen::MatrixXd coriolis_matrix(const Eigen::VectorXd& q,
                                const Eigen::VectorXd& q_dot,
                                const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(q, cfg.segments, "q");
  check_state_size(q_dot, cfg.segments, "q_dot");
  const auto partials = mass_matrix_partials(q, cfg);

  Eigen::MatrixXd coriolis = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        acc += (partials[c](a, b) + partials[b](a, c) - partials[a](b, c)) *
               q_dot[c];
      }
      coriolis(a, b) = 0.5 * acc;
    }
  }
  return coriolis;
}

Eigen::VectorXd force_vector(const Eigen::VectorXd& q,
                             const Eigen::VectorXd& q_dot,
                             const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(q, cfg.segments, "q");
  check_state_size(q_dot, cfg.segments, "q_dot");
  const Eigen::VectorXd phi = absolute_angles(q);

  // Gravity moment weight of joint j: everything distal to it plus half the
  // segment it drives.
  Eigen::VectorXd force(n);
  double tail = 0.0;  // sum_{j >= a} w_j sin(phi_j)
  for (Eigen::Index a = n - 1; a >= 0; --a) {
    const double lever =
        cfg.segment_length * (0.5 + static_cast<double>(n - 1 - a));
    tail += lever * std::sin(phi[a]);
    force[a] = cfg.segment_mass * cfg.gravity * tail +
               cfg.passive_stiffness * q[a] + cfg.damping * q_dot[a];
  }
  return force;
}

Eigen::VectorXd actuator_force(const Eigen::VectorXd& q,
                               const Eigen::VectorXd& p,
                               const RobotConfig& cfg) {
  check_state_size(q, cfg.segments, "q");
  check_state_size(p, cfg.segments, "p");
  return cfg.moment_arm * p;
}

double output_map(const Eigen::VectorXd& q) { return q.sum(); }

Eigen::VectorXd forward_dynamics(const RobotState& state,
                                 const Eigen::VectorXd& p,
                                 const ExternalForce* ext,
                                 const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(state.q, cfg.segments, "q");
  check_state_size(state.q_dot, cfg.segments, "q_dot");
  check_state_size(p, cfg.segments, "p");

  Eigen::VectorXd rhs = actuator_force(state.q, p, cfg);
  if (ext != nullptr && ext->active(state.time)) {
    if (ext->segment_index < 0 || ext->segment_index >= n) {
      throw std::invalid_argument("external force segment index out of range");
    }
    rhs[ext->segment_index] += ext->torque;
  }
  rhs.noalias() -=
      coriolis_matrix(state.q, state.q_dot, cfg) * state.q_dot;
  rhs -= force_vector(state.q, state.q_dot, cfg);

  const Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix(state.q, cfg));
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "mass matrix factorization failed at t = " << state.time;
    throw SingularConfigurationError(msg.str());
  }
  return llt.solve(rhs);
}

RobotState step(const RobotState& state, const Eigen::VectorXd& p,
                const ExternalForce* ext, double dt, const RobotConfig& cfg) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("dt must be positive and finite");
  }

  const auto derivative = [&](const Eigen::VectorXd& q,
                              const Eigen::VectorXd& q_dot, double t) {
    RobotState stage;
    stage.q = q;
    stage.q_dot = q_dot;
    stage.time = t;
    return forward_dynamics(stage, p, ext, cfg);
  };

  const double t = state.time;
  const Eigen::VectorXd a1 = derivative(state.q, state.q_dot, t);
  const Eigen::VectorXd v1 = state.q_dot;

  const Eigen::VectorXd a2 = derivative(state.q + 0.5 * dt * v1,
                                        state.q_dot + 0.5 * dt * a1,
                                        t + 0.5 * dt);
  const Eigen::VectorXd v2 = state.q_dot + 0.5 * dt * a1;

  const Eigen::VectorXd a3 = derivative(state.q + 0.5 * dt * v2,
                                        state.q_dot + 0.5 * dt * a2,
                                        t + 0.5 * dt);
  const Eigen::VectorXd v3 = state.q_dot + 0.5 * dt * a2;

  const Eigen::VectorXd a4 =
      derivative(state.q + dt * v3, state.q_dot + dt * a3, t + dt);
  const Eigen::VectorXd v4 = state.q_dot + dt * a3;

  RobotState next;
  next.q = state.q + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
  next.q_dot = state.q_dot + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  next.time = t + dt;
  if (!next.q.allFinite() || !next.q_dot.allFinite()) {
    std::ostringstream msg;
    msg << "simulation diverged at t = " << next.time;
    throw DivergenceError(msg.str(), next.time);
  }
  return next;
}

double potential_energy(const Eigen::VectorXd& q, const RobotConfig& cfg) {
  const Eigen::Index n = cfg.segments;
  check_state_size(q, cfg.segments, "q");
  const Eigen::VectorXd phi = absolute_angles(q);
  double gravity_term = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lever =
        cfg.segment_length * (0.5 + static_cast<double>(n - 1 - j));
    gravity_term += lever * (1.0 - std::cos(phi[j]));
  }
  return cfg.segment_mass * cfg.gravity * gravity_term +
         0.5 * cfg.passive_stiffness * q.squaredNorm();
}

double total_energy(const RobotState& state, const RobotConfig& cfg) {
  const Eigen::MatrixXd inertia = mass_matrix(state.q, cfg);
  return 0.5 * state.q_dot.dot(inertia * state.q_dot) +
         potential_energy(state.q, cfg);
}

}  // namespace softctrl
