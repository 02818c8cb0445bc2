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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "softctrl/control.hpp"
#include "softctrl/errors.hpp"
#include "softctrl/gp.hpp"

using softctrl::BlendConfig;
using softctrl::DesiredOutput;
using softctrl::Hyperparameters;
using softctrl::PidConfig;
using softctrl::PidState;
using softctrl::TrainedGp;

namespace {

TrainedGp small_gp(Eigen::Index outputs, double noise) {
  softctrl::Dataset data;
  data.inputs.resize(3, 2);
  data.inputs << 0.0, 1.0, 0.0, 0.5, 0.0, -0.5;
  data.targets.resize(2, outputs);
  for (Eigen::Index i = 0; i < outputs; ++i) {
    data.targets(0, i) = 1.0 + static_cast<double>(i);
    data.targets(1, i) = -0.5 * static_cast<double>(i + 1);
  }
  Hyperparameters hp;
  hp.signal_variance = 1.0;
  hp.lengthscales = Eigen::VectorXd::Ones(3);
  hp.noise_variance = Eigen::VectorXd::Constant(outputs, noise);
  return TrainedGp(std::move(data), std::move(hp));
}

}  // namespace

TEST_CASE("sigmoid blend closed-form values") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);

  CHECK(softctrl::alpha_blend(zero, {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(softctrl::alpha_blend(zero, {1.0, -5.0}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(5.0))).epsilon(1e-9));
  CHECK(softctrl::alpha_blend(zero, {3.0, -5.0}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(5.0))).epsilon(1e-9));

  // Saturation: argument beyond +7 pushes alpha above 0.999.
  const Eigen::VectorXd big = Eigen::VectorXd::Constant(3, 12.0);
  CHECK(softctrl::alpha_blend(big, {1.0, 0.0}) > 0.999);
}

TEST_CASE("alpha is monotone in every variance component") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uniform(0.0, 2.0);
  const BlendConfig cfg{4.0, -3.0};
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd var(3);
    for (int i = 0; i < 3; ++i) var[i] = uniform(rng);
    const double base = softctrl::alpha_blend(var, cfg);
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd bumped = var;
      bumped[i] += uniform(rng);
      CHECK(softctrl::alpha_blend(bumped, cfg) >= base);
    }
  }
}

TEST_CASE("alpha stays in [0, 1] for extreme arguments") {
  CHECK(softctrl::alpha_blend(Eigen::VectorXd::Zero(1), {1.0, -1000.0}) == 0.0);
  CHECK(softctrl::alpha_blend(Eigen::VectorXd::Constant(1, 1e6), {1.0, 0.0}) <=
        1.0);
}

TEST_CASE("pure proportional feedback") {
  PidConfig cfg;
  cfg.kp = 2.0;
  cfg.ki = 0.0;
  PidState state;

  CHECK(softctrl::pid_step(cfg, state, 0.0, 0.1) == 0.0);
  CHECK(softctrl::pid_step(cfg, state, 0.5, 0.1) == doctest::Approx(1.0));

  // As a distributed force vector on a single output the command is u itself.
  PidState fresh;
  const Eigen::VectorXd u = softctrl::feedback(cfg, fresh, 0.5, 0.1, 1);
  REQUIRE(u.size() == 1);
  CHECK(u[0] == doctest::Approx(1.0));
}

TEST_CASE("integral accumulates like the discrete sum") {
  PidConfig cfg;
  cfg.kp = 0.0;
  cfg.ki = 1.0;
  cfg.integral_limit = 100.0;
  PidState state;
  for (int k = 1; k <= 10; ++k) {
    const double u = softctrl::pid_step(cfg, state, 1.0, 0.1);
    CHECK(u == doctest::Approx(0.1 * k).epsilon(1e-12));
  }
}

TEST_CASE("anti-windup clamps the integral and output saturates") {
  PidConfig cfg;
  cfg.kp = 0.0;
  cfg.ki = 1.0;
  cfg.integral_limit = 0.35;
  cfg.output_limit = 0.3;
  PidState state;
  for (int k = 0; k < 50; ++k) {
    const double u = softctrl::pid_step(cfg, state, 1.0, 0.1);
    CHECK(std::abs(state.integral) <= 0.35);
    CHECK(std::abs(u) <= 0.3);
  }
  CHECK(state.integral == doctest::Approx(0.35));
}

TEST_CASE("pid responses are deterministic") {
  PidConfig cfg;
  cfg.kp = 1.5;
  cfg.ki = 0.7;
  cfg.kd = 0.05;
  std::mt19937 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> errors(100);
  for (auto& e : errors) e = normal(rng);

  const auto run = [&] {
    PidState state;
    std::vector<double> out;
    out.reserve(errors.size());
    for (const double e : errors) {
      out.push_back(softctrl::pid_step(cfg, state, e, 1e-2));
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("feedforward is the GP mean plus the estimated model") {
  const TrainedGp gp = small_gp(2, 1e-8);

  SUBCASE("zero prior far from data") {
    DesiredOutput far;
    far.position = 100.0;
    const Eigen::VectorXd p_ff =
        softctrl::feedforward(gp, softctrl::zero_model(2), far);
    CHECK(p_ff.norm() < 1e-6);
  }

  SUBCASE("constant prior shifts the interpolated residual") {
    const softctrl::EstimatedModel constant = [](const Eigen::Vector3d&) {
      return Eigen::VectorXd::Constant(2, 0.25);
    };
    DesiredOutput at_first_point;  // inputs.col(0) is the origin
    const Eigen::VectorXd p_ff =
        softctrl::feedforward(gp, constant, at_first_point);
    CHECK(p_ff[0] == doctest::Approx(1.0 + 0.25).epsilon(1e-4));
    CHECK(p_ff[1] == doctest::Approx(2.0 + 0.25).epsilon(1e-4));
  }

  SUBCASE("single point at unit distance reproduces the GP oracle value") {
    softctrl::Dataset data;
    data.inputs = Eigen::MatrixXd::Zero(3, 1);
    data.targets = Eigen::MatrixXd::Constant(1, 1, 2.0);
    Hyperparameters hp;
    hp.signal_variance = 1.0;
    hp.lengthscales = Eigen::VectorXd::Ones(3);
    hp.noise_variance = Eigen::VectorXd::Zero(1);
    const TrainedGp single(std::move(data), std::move(hp));

    DesiredOutput query;
    query.acceleration = 1.0;  // distance one from the training input
    const Eigen::VectorXd p_ff =
        softctrl::feedforward(single, softctrl::zero_model(1), query);
    CHECK(p_ff[0] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-6));
  }
}

TEST_CASE("control law blends bit-exactly in the degenerate cases") {
  const TrainedGp gp = small_gp(2, 1e-6);
  PidConfig pid;
  pid.kp = 5.0;
  pid.ki = 2.0;
  pid.dt = 1e-3;

  DesiredOutput target;
  target.position = 0.4;
  const double measured = 0.1;

  SUBCASE("alpha forced to zero leaves pure feed-forward") {
    PidState state;
    const auto step = softctrl::control_law(gp, softctrl::zero_model(2), pid,
                                            state, {1.0, -50.0}, target,
                                            measured);
    CHECK(step.alpha < 1e-20);
    CHECK((step.p - step.p_ff).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("alpha forced to one leaves pure feedback") {
    PidState state;
    const auto step = softctrl::control_law(gp, softctrl::zero_model(2), pid,
                                            state, {1.0, 50.0}, target,
                                            measured);
    CHECK(step.alpha == 1.0);
    CHECK((step.p - step.u).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("control law satisfies the recomposition identity") {
  const TrainedGp gp = small_gp(3, 1e-4);
  PidConfig pid;
  pid.kp = 10.0;
  pid.ki = 4.0;
  pid.dt = 1e-3;
  const BlendConfig blend{8.0, -4.0};
  PidState state;

  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uniform(-1.0, 1.5);
  for (int k = 0; k < 200; ++k) {
    DesiredOutput target;
    target.position = uniform(rng);
    target.velocity = uniform(rng);
    target.acceleration = uniform(rng);
    const double measured = uniform(rng);
    const auto step = softctrl::control_law(gp, softctrl::zero_model(3), pid,
                                            state, blend, target, measured);

    const double alpha_again = softctrl::alpha_blend(step.variances, blend);
    CHECK(alpha_again == step.alpha);
    const Eigen::VectorXd recomposed =
        (1.0 - step.alpha) * step.p_ff + step.alpha * step.u;
    CHECK((step.p - recomposed).cwiseAbs().maxCoeff() == 0.0);
    CHECK(step.alpha >= 0.0);
    CHECK(step.alpha <= 1.0);
    CHECK(step.variances.minCoeff() >= 0.0);
  }
}

TEST_CASE("blend config validation") {
  BlendConfig negative{-1.0, 0.0};
  CHECK_THROWS_AS(negative.validate(), softctrl::ConfigError);
  BlendConfig zero{0.0, 0.0};
  CHECK_THROWS_AS(zero.validate(), softctrl::ConfigError);
  BlendConfig ok{2.0, -5.0};
  CHECK_NOTHROW(ok.validate());
}
