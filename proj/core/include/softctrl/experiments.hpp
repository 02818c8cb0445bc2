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
#include <optional>
#include <string>
#include <vector>

#include "softctrl/control.hpp"
#include "softctrl/excitation.hpp"
#include "softctrl/gp.hpp"
#include "softctrl/robot.hpp"

namespace softctrl {

/// Which half of the workspace (by tip angle) to keep while collecting.
enum class Region { kAll, kPositive, kNegative };

Region region_from_string(const std::string& name);
std::string to_string(Region region);

/// Raw collection product: one column/row per kept control step. Keeps the
/// applied forces alongside the GP training pairs for traceability.
struct CollectedData {
  Eigen::VectorXd times;      // N
  Eigen::MatrixXd outputs;    // 3 x N, rows are (ydd, yd, y)
  Eigen::MatrixXd applied;    // n x N, net muscle force per segment
  Eigen::MatrixXd residuals;  // N x n, p - h(y~)

  Eigen::Index count() const { return times.size(); }
  Eigen::Index output_dim() const { return applied.rows(); }
  Dataset to_dataset() const { return {outputs, residuals}; }
};

/// Drives the robot open loop with the excitation spread uniformly over the
/// segments, records (y~, p) at every control step with the acceleration
/// taken from the forward dynamics, filters to the requested region and
/// decimates uniformly to n_d points.
CollectedData collect_dataset(const RobotConfig& robot,
                              const EstimatedModel& h,
                              const ExcitationProfile& profile,
                              Eigen::Index n_d, Region region, double dt);

/// Analytic sinusoid reference y_d(t) = offset + amplitude sin(2 pi f t).
struct ReferenceSpec {
  double offset = 0.7;       // rad
  double amplitude = 0.45;   // rad
  double frequency = 0.1;    // Hz
  double duration = 20.0;    // s

  DesiredOutput at(double t) const;
  void validate() const;
};

struct TrajectoryLog {
  Eigen::VectorXd time;
  Eigen::VectorXd y_desired;
  Eigen::VectorXd y_actual;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd variances;  // n x N
  Eigen::MatrixXd p_applied;  // n x N
  Eigen::MatrixXd p_ff;       // n x N
  Eigen::MatrixXd u;          // n x N

  Eigen::Index count() const { return time.size(); }
  Eigen::Index output_dim() const { return p_applied.rows(); }
};

struct TrackingMetrics {
  double rms_error = 0.0;
  double peak_error = 0.0;
  double mean_alpha = 0.0;
};

/// Steady-state metrics over a log: the first 10% of the rows are treated as
/// transient and excluded.
TrackingMetrics compute_metrics(const TrajectoryLog& log);

struct TrackingResult {
  TrajectoryLog log;
  TrackingMetrics metrics;  // over the steady-state window (first 10% dropped)
  bool diverged = false;
  double divergence_time = 0.0;
};

/// Runs the blended controller against the reference at the simulation rate.
/// On divergence the partial log is returned with the diverged flag set
/// instead of throwing, so callers can still persist what happened.
TrackingResult run_tracking(const TrainedGp& gp, const EstimatedModel& h,
                            const RobotConfig& robot, const PidConfig& pid,
                            const BlendConfig& blend, const ReferenceSpec& ref,
                            const ExternalForce* disturbance, double dt);

/// Stiffness probe protocol: hold a constant reference, settle, then apply
/// the probe torque for probe_duration seconds at one joint.
struct ProbeSpec {
  double torque = 0.01;      // N*m
  int segment_index = 2;
  double settle_time = 12.0;  // s before the probe window opens
  double probe_duration = 3.0;
  double y_in = 0.7;          // in-region operating point, rad
  double y_out = -0.7;        // mirrored out-region operating point

  void validate(const RobotConfig& robot) const;
};

struct StiffnessReport {
  double probe_torque = 0.0;
  double in_region_deflection = 0.0;   // rad
  double out_region_deflection = 0.0;  // rad
  double compliance_ratio = 0.0;       // in / out, meaningful iff ratio_defined
  bool ratio_defined = false;
};

/// Runs the probe at both operating points under identical conditions. The
/// deflection is the peak |y(t) - y_twin(t)| against a twin run without the
/// probe, so settling drift cancels exactly.
StiffnessReport run_stiffness_probe(const TrainedGp& gp,
                                    const EstimatedModel& h,
                                    const RobotConfig& robot,
                                    const PidConfig& pid,
                                    const BlendConfig& blend,
                                    const ProbeSpec& probe, double dt);

}  // namespace softctrl
