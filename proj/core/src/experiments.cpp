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

#include "softctrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool in_region(double y, Region region) {
  switch (region) {
    case Region::kAll:
      return true;
    case Region::kPositive:
      return y > 0.0;
    case Region::kNegative:
      return y < 0.0;
  }
  return true;
}

}  // namespace

Region region_from_string(const std::string& name) {
  if (name == "all") return Region::kAll;
  if (name == "positive") return Region::kPositive;
  if (name == "negative") return Region::kNegative;
  throw ConfigError("unknown region '" + name +
                    "' (expected all, positive or negative)");
}

std::string to_string(Region region) {
  switch (region) {
    case Region::kAll:
      return "all";
    case Region::kPositive:
      return "positive";
    case Region::kNegative:
      return "negative";
  }
  return "unknown";
}

CollectedData collect_dataset(const RobotConfig& robot,
                              const EstimatedModel& h,
                              const ExcitationProfile& profile,
                              Eigen::Index n_d, Region region, double dt) {
  robot.validate();
  if (n_d < 1) {
    throw ConfigError("collect.samples must be >= 1");
  }
  const double rate = 1.0 / dt;
  const std::vector<double> series = generate_excitation(profile, rate);
  const Eigen::Index n = robot.segments;
  const Eigen::VectorXd spread = Eigen::VectorXd::Constant(n, 1.0 / n);

  std::vector<double> times;
  std::vector<Eigen::Vector3d> outputs;
  std::vector<Eigen::VectorXd> applied;
  std::vector<Eigen::VectorXd> residuals;
  times.reserve(series.size());

  RobotState state = rest_state(robot);
  for (const double command : series) {
    const Eigen::VectorXd p = command * spread;
    const Eigen::VectorXd q_ddot = forward_dynamics(state, p, nullptr, robot);
    const double y = output_map(state.q);
    if (in_region(y, region)) {
      const Eigen::Vector3d y_tilde(q_ddot.sum(), state.q_dot.sum(), y);
      times.push_back(state.time);
      outputs.push_back(y_tilde);
      applied.push_back(p);
      residuals.push_back(p - h(y_tilde));
    }
    state = step(state, p, nullptr, dt, robot);
  }

  const auto kept = static_cast<Eigen::Index>(times.size());
  if (kept < n_d) {
    std::ostringstream msg;
    msg << "collection kept " << kept << " samples in the "
        << to_string(region) << " region but " << n_d
        << " were requested; increase excitation.duration or amplitude";
    throw ConfigError(msg.str());
  }

  CollectedData data;
  data.times.resize(n_d);
  data.outputs.resize(3, n_d);
  data.applied.resize(n, n_d);
  data.residuals.resize(n_d, n);
  for (Eigen::Index i = 0; i < n_d; ++i) {
    const auto src = static_cast<std::size_t>(
        (n_d == 1) ? 0 : (i * (kept - 1)) / (n_d - 1));
    data.times[i] = times[src];
    data.outputs.col(i) = outputs[src];
    data.applied.col(i) = applied[src];
    data.residuals.row(i) = residuals[src].transpose();
  }
  return data;
}

DesiredOutput ReferenceSpec::at(double t) const {
  const double w = kTwoPi * frequency;
  DesiredOutput out;
  out.position = offset + amplitude * std::sin(w * t);
  out.velocity = amplitude * w * std::cos(w * t);
  out.acceleration = -amplitude * w * w * std::sin(w * t);
  return out;
}

void ReferenceSpec::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ConfigError("track.duration must be positive");
  }
  if (!(frequency >= 0.0) || !std::isfinite(frequency)) {
    throw ConfigError("track.frequency must be nonnegative");
  }
  if (!std::isfinite(offset) || !std::isfinite(amplitude)) {
    throw ConfigError("track.offset and track.amplitude must be finite");
  }
}

TrackingResult run_tracking(const TrainedGp& gp, const EstimatedModel& h,
                            const RobotConfig& robot, const PidConfig& pid,
                            const BlendConfig& blend, const ReferenceSpec& ref,
                            const ExternalForce* disturbance, double dt) {
  robot.validate();
  pid.validate();
  blend.validate();
  ref.validate();
  if (gp.output_dim() != robot.segments) {
    throw std::invalid_argument(
        "model output dimension does not match the robot segment count");
  }

  const auto steps =
      static_cast<Eigen::Index>(std::llround(ref.duration / dt));
  const Eigen::Index n = robot.segments;

  TrackingResult result;
  TrajectoryLog& log = result.log;
  log.time.resize(steps);
  log.y_desired.resize(steps);
  log.y_actual.resize(steps);
  log.alpha.resize(steps);
  log.variances.resize(n, steps);
  log.p_applied.resize(n, steps);
  log.p_ff.resize(n, steps);
  log.u.resize(n, steps);

  RobotState state = rest_state(robot);
  PidState pid_state;
  PidConfig pid_cfg = pid;
  pid_cfg.dt = dt;

  Eigen::Index recorded = 0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const DesiredOutput target = ref.at(state.time);
    const double y = output_map(state.q);
    const ControlStep cs =
        control_law(gp, h, pid_cfg, pid_state, blend, target, y);

    log.time[k] = state.time;
    log.y_desired[k] = target.position;
    log.y_actual[k] = y;
    log.alpha[k] = cs.alpha;
    log.variances.col(k) = cs.variances;
    log.p_applied.col(k) = cs.p;
    log.p_ff.col(k) = cs.p_ff;
    log.u.col(k) = cs.u;
    ++recorded;

    try {
      state = step(state, cs.p, disturbance, dt, robot);
    } catch (const DivergenceError& err) {
      result.diverged = true;
      result.divergence_time = err.time();
      break;
    }
  }

  if (recorded < steps) {
    log.time.conservativeResize(recorded);
    log.y_desired.conservativeResize(recorded);
    log.y_actual.conservativeResize(recorded);
    log.alpha.conservativeResize(recorded);
    log.variances.conservativeResize(n, recorded);
    log.p_applied.conservativeResize(n, recorded);
    log.p_ff.conservativeResize(n, recorded);
    log.u.conservativeResize(n, recorded);
  }

  result.metrics = compute_metrics(log);
  return result;
}

TrackingMetrics compute_metrics(const TrajectoryLog& log) {
  TrackingMetrics metrics;
  const Eigen::Index recorded = log.count();
  const Eigen::Index begin = recorded / 10;
  double sq_sum = 0.0;
  double peak = 0.0;
  double alpha_sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index k = begin; k < recorded; ++k) {
    const double err = log.y_desired[k] - log.y_actual[k];
    sq_sum += err * err;
    peak = std::max(peak, std::abs(err));
    alpha_sum += log.alpha[k];
    ++count;
  }
  if (count > 0) {
    metrics.rms_error = std::sqrt(sq_sum / static_cast<double>(count));
    metrics.peak_error = peak;
    metrics.mean_alpha = alpha_sum / static_cast<double>(count);
  }
  return metrics;
}

void ProbeSpec::validate(const RobotConfig& robot) const {
  if (!(settle_time > 0.0) || !(probe_duration > 0.0)) {
    throw ConfigError("probe settle and window durations must be positive");
  }
  if (!std::isfinite(torque)) {
    throw ConfigError("probe.torque must be finite");
  }
  if (segment_index < 0 || segment_index >= robot.segments) {
    std::ostringstream msg;
    msg << "probe.segment = " << segment_index << " out of range [0, "
        << robot.segments << ")";
    throw ConfigError(msg.str());
  }
  if (!std::isfinite(y_in) || !std::isfinite(y_out)) {
    throw ConfigError("probe operating points must be finite");
  }
}

namespace {

// Holds the reference constant at one operating point and returns the peak
// output deviation caused by the probe, measured against a probe-free twin.
double probe_deflection(const TrainedGp& gp, const EstimatedModel& h,
                        const RobotConfig& robot, const PidConfig& pid,
                        const BlendConfig& blend, double operating_point,
                        const ProbeSpec& probe, double dt) {
  const ReferenceSpec hold{operating_point, 0.0, 0.0,
                           probe.settle_time + probe.probe_duration};

  ExternalForce force;
  force.segment_index = probe.segment_index;
  force.torque = probe.torque;
  force.t_start = probe.settle_time;
  force.t_end = probe.settle_time + probe.probe_duration;
  force.validate(robot.segments);

  const TrackingResult probed =
      run_tracking(gp, h, robot, pid, blend, hold, &force, dt);
  const TrackingResult twin =
      run_tracking(gp, h, robot, pid, blend, hold, nullptr, dt);
  if (probed.diverged || twin.diverged) {
    const double t =
        probed.diverged ? probed.divergence_time : twin.divergence_time;
    std::ostringstream msg;
    msg << "stiffness probe diverged at t = " << t;
    throw DivergenceError(msg.str(), t);
  }

  double peak = 0.0;
  for (Eigen::Index k = 0; k < probed.log.count(); ++k) {
    if (probed.log.time[k] < probe.settle_time) continue;
    peak = std::max(peak,
                    std::abs(probed.log.y_actual[k] - twin.log.y_actual[k]));
  }
  return peak;
}

}  // namespace

StiffnessReport run_stiffness_probe(const TrainedGp& gp,
                                    const EstimatedModel& h,
                                    const RobotConfig& robot,
                                    const PidConfig& pid,
                                    const BlendConfig& blend,
                                    const ProbeSpec& probe, double dt) {
  robot.validate();
  probe.validate(robot);

  StiffnessReport report;
  report.probe_torque = probe.torque;
  report.in_region_deflection =
      probe_deflection(gp, h, robot, pid, blend, probe.y_in, probe, dt);
  report.out_region_deflection =
      probe_deflection(gp, h, robot, pid, blend, probe.y_out, probe, dt);
  if (report.out_region_deflection > 0.0) {
    report.compliance_ratio =
        report.in_region_deflection / report.out_region_deflection;
    report.ratio_defined = std::isfinite(report.compliance_ratio);
  }
  return report;
}

}  // namespace softctrl
