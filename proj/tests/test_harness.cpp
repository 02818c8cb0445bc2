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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "softctrl/config.hpp"
#include "softctrl/errors.hpp"
#include "softctrl/excitation.hpp"
#include "softctrl/experiments.hpp"
#include "softctrl/gp.hpp"
#include "softctrl/robot.hpp"
#include "softctrl/storage.hpp"

using softctrl::CollectedData;
using softctrl::ExcitationKind;
using softctrl::ExcitationProfile;
using softctrl::Region;
using softctrl::RobotConfig;
using softctrl::TrainedGp;

namespace {

// Fraction of spectral energy inside [f_lo, f_hi], by direct DFT.
double band_energy_fraction(const std::vector<double>& series, double rate,
                            double f_lo, double f_hi) {
  const auto n = series.size();
  double total = 0.0;
  double in_band = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    const double w = 2.0 * M_PI * static_cast<double>(k) / n;
    for (std::size_t j = 0; j < n; ++j) {
      re += series[j] * std::cos(w * j);
      im -= series[j] * std::sin(w * j);
    }
    const double energy = re * re + im * im;
    const double freq = static_cast<double>(k) * rate / n;
    total += energy;
    if (freq >= f_lo && freq <= f_hi) in_band += energy;
  }
  return (total > 0.0) ? in_band / total : 0.0;
}

RobotConfig small_robot() {
  RobotConfig cfg;
  cfg.segments = 2;
  return cfg;
}

// Exact inverse dynamics of a single-segment robot expressed through the
// output trajectory (y = q when n_s = 1).
softctrl::EstimatedModel exact_single_segment_model(const RobotConfig& cfg) {
  return [cfg](const Eigen::Vector3d& y) {
    const double inertia =
        cfg.segment_mass * cfg.segment_length * cfg.segment_length / 3.0;
    const double gravity_moment = cfg.segment_mass * cfg.gravity *
                                  0.5 * cfg.segment_length * std::sin(y[2]);
    const double torque = inertia * y[0] + cfg.damping * y[1] +
                          cfg.passive_stiffness * y[2] + gravity_moment;
    return Eigen::VectorXd::Constant(1, torque / cfg.moment_arm);
  };
}

struct TrainedSetup {
  RobotConfig robot;
  ExcitationProfile profile;
  TrainedGp gp;
  softctrl::PidConfig pid;
  softctrl::BlendConfig blend;
};

// Shared small-scale version of the paper's simulation protocol: two
// segments, in-region (y > 0) multisine data, likelihood-trained GP.
const TrainedSetup& trained_setup() {
  static const TrainedSetup setup = [] {
    RobotConfig robot = small_robot();
    ExcitationProfile profile;
    profile.amplitude = 10.0;
    profile.f_lo = 0.05;
    profile.f_hi = 0.6;
    profile.duration = 30.0;
    profile.seed = 2;

    const CollectedData data = softctrl::collect_dataset(
        robot, softctrl::zero_model(robot.segments), profile, 100,
        Region::kPositive, 1e-3);
    const softctrl::Hyperparameters hp =
        softctrl::optimize_hyperparameters(data.to_dataset(), 2, 11);
    TrainedGp gp(data.to_dataset(), hp);

    softctrl::PidConfig pid;
    pid.kp = 120.0;
    pid.ki = 150.0;
    pid.integral_limit = 10.0;
    pid.output_limit = 60.0;

    softctrl::BlendConfig blend;
    blend.c1 = 10.0 / hp.signal_variance;
    blend.c2 = -5.0;
    return TrainedSetup{robot, profile, std::move(gp), pid, blend};
  }();
  return setup;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("zero amplitude excitation is identically zero") {
  ExcitationProfile profile;
  profile.amplitude = 0.0;
  const auto series = softctrl::generate_excitation(profile, 1000.0);
  for (const double v : series) CHECK(v == 0.0);
}

TEST_CASE("multisine is deterministic and amplitude-bounded") {
  ExcitationProfile profile;
  profile.amplitude = 5.0;
  profile.duration = 10.0;
  profile.seed = 42;
  const auto a = softctrl::generate_excitation(profile, 500.0);
  const auto b = softctrl::generate_excitation(profile, 500.0);
  CHECK(a == b);

  double peak = 0.0;
  for (const double v : a) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(5.0).epsilon(1e-12));

  profile.seed = 43;
  const auto c = softctrl::generate_excitation(profile, 500.0);
  CHECK(a != c);
}

TEST_CASE("chirp concentrates its energy in the requested band") {
  ExcitationProfile profile;
  profile.kind = ExcitationKind::kChirp;
  profile.amplitude = 1.0;
  profile.f_lo = 0.1;
  profile.f_hi = 1.0;
  profile.duration = 20.0;
  const double rate = 100.0;
  const auto series = softctrl::generate_excitation(profile, rate);
  // One DFT bin of leakage margin on each side of the band.
  const double df = 1.0 / profile.duration;
  CHECK(band_energy_fraction(series, rate, profile.f_lo - df,
                             profile.f_hi + df) >= 0.95);
}

TEST_CASE("ramp-hold stays inside the amplitude and is deterministic") {
  ExcitationProfile profile;
  profile.kind = ExcitationKind::kRampHold;
  profile.amplitude = 3.0;
  profile.f_lo = 0.2;
  profile.f_hi = 2.0;
  profile.duration = 15.0;
  profile.seed = 9;
  const auto a = softctrl::generate_excitation(profile, 200.0);
  const auto b = softctrl::generate_excitation(profile, 200.0);
  CHECK(a == b);
  for (const double v : a) CHECK(std::abs(v) <= 3.0 + 1e-12);
}

TEST_CASE("excitation validation failures") {
  ExcitationProfile profile;
  profile.f_hi = 600.0;  // beyond Nyquist at 1 kHz
  CHECK_THROWS_AS(softctrl::generate_excitation(profile, 1000.0),
                  std::invalid_argument);

  profile = ExcitationProfile{};
  profile.duration = 0.0;
  CHECK_THROWS_AS(softctrl::generate_excitation(profile, 1000.0),
                  softctrl::ConfigError);

  profile = ExcitationProfile{};
  profile.amplitude = -1.0;
  CHECK_THROWS_AS(softctrl::generate_excitation(profile, 1000.0),
                  softctrl::ConfigError);
}

TEST_CASE("collect_dataset records the requested number of points") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 8.0;
  profile.duration = 10.0;
  const CollectedData data = softctrl::collect_dataset(
      robot, softctrl::zero_model(2), profile, 150, Region::kAll, 1e-3);
  CHECK(data.count() == 150);
  CHECK(data.outputs.cols() == 150);
  CHECK(data.applied.cols() == 150);
  CHECK(data.residuals.rows() == 150);
  // Zero prior: residual targets equal the raw applied forces.
  CHECK((data.residuals.transpose() - data.applied).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("collect_dataset region filter keeps only positive tip angles") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 10.0;
  profile.duration = 20.0;
  const CollectedData data = softctrl::collect_dataset(
      robot, softctrl::zero_model(2), profile, 100, Region::kPositive, 1e-3);
  for (Eigen::Index i = 0; i < data.count(); ++i) {
    CHECK(data.outputs(2, i) > 0.0);
  }
}

TEST_CASE("collect_dataset fails loudly when the region starves it") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 0.0;  // robot never leaves y = 0
  profile.duration = 5.0;
  CHECK_THROWS_AS(
      softctrl::collect_dataset(robot, softctrl::zero_model(2), profile, 50,
                                Region::kPositive, 1e-3),
      softctrl::ConfigError);
}

TEST_CASE("exact inverse-dynamics prior zeroes the residual targets") {
  RobotConfig robot;
  robot.segments = 1;
  ExcitationProfile profile;
  profile.amplitude = 2.0;
  profile.duration = 10.0;
  const CollectedData data =
      softctrl::collect_dataset(robot, exact_single_segment_model(robot),
                                profile, 100, Region::kAll, 1e-3);
  CHECK(data.residuals.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("recorded outputs replay through the simulator") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 6.0;
  profile.duration = 8.0;
  const double dt = 1e-3;
  const CollectedData data = softctrl::collect_dataset(
      robot, softctrl::zero_model(2), profile, 200, Region::kAll, dt);

  const auto series = softctrl::generate_excitation(profile, 1.0 / dt);
  const Eigen::VectorXd spread = Eigen::VectorXd::Constant(2, 0.5);
  std::vector<double> y_by_step(series.size());
  softctrl::RobotState state = softctrl::rest_state(robot);
  for (std::size_t k = 0; k < series.size(); ++k) {
    y_by_step[k] = softctrl::output_map(state.q);
    state = softctrl::step(state, series[k] * spread, nullptr, dt, robot);
  }
  for (Eigen::Index i = 0; i < data.count(); ++i) {
    const auto step_index =
        static_cast<std::size_t>(std::llround(data.times[i] / dt));
    CHECK(data.outputs(2, i) == y_by_step[step_index]);
  }
}

TEST_CASE("equilibrium hold tracks with vanishing error") {
  RobotConfig robot;
  robot.segments = 1;
  robot.gravity = 0.0;

  ExcitationProfile profile;
  profile.amplitude = 1.0;
  profile.duration = 8.0;
  const auto h = exact_single_segment_model(robot);
  const CollectedData data =
      softctrl::collect_dataset(robot, h, profile, 80, Region::kAll, 1e-3);

  softctrl::Hyperparameters hp;
  hp.signal_variance = 1.0;
  hp.lengthscales = Eigen::VectorXd::Constant(3, 1.0);
  hp.noise_variance = Eigen::VectorXd::Constant(1, 1e-6);
  const TrainedGp gp(data.to_dataset(), hp);

  softctrl::PidConfig pid;
  pid.kp = 50.0;
  pid.ki = 20.0;
  const softctrl::ReferenceSpec hold{0.0, 0.0, 0.0, 2.0};
  const auto result = softctrl::run_tracking(gp, h, robot, pid, {10.0, -5.0},
                                             hold, nullptr, 1e-3);
  CHECK(!result.diverged);
  CHECK(result.metrics.rms_error < 1e-9);
}

TEST_CASE("trajectory log rows satisfy the recomposition identity") {
  const TrainedSetup& setup = trained_setup();
  const softctrl::ReferenceSpec ref{0.5, 0.3, 0.15, 4.0};
  const auto result =
      softctrl::run_tracking(setup.gp, softctrl::zero_model(2), setup.robot,
                             setup.pid, setup.blend, ref, nullptr, 1e-3);
  REQUIRE(!result.diverged);
  const auto& log = result.log;
  REQUIRE(log.count() > 0);
  for (Eigen::Index k = 0; k < log.count(); ++k) {
    const double alpha = log.alpha[k];
    const Eigen::VectorXd recomposed =
        (1.0 - alpha) * log.p_ff.col(k) + alpha * log.u.col(k);
    CHECK((log.p_applied.col(k) - recomposed).cwiseAbs().maxCoeff() == 0.0);
    CHECK(alpha >= 0.0);
    CHECK(alpha <= 1.0);
  }
  // Strictly increasing uniform time grid.
  for (Eigen::Index k = 1; k < log.count(); ++k) {
    CHECK(log.time[k] > log.time[k - 1]);
  }
}

TEST_CASE("mean alpha orders in-region below out-of-region") {
  const TrainedSetup& setup = trained_setup();
  const softctrl::ReferenceSpec inside{0.5, 0.3, 0.15, 6.0};
  const softctrl::ReferenceSpec outside{-0.5, 0.3, 0.15, 6.0};

  const auto in_result =
      softctrl::run_tracking(setup.gp, softctrl::zero_model(2), setup.robot,
                             setup.pid, setup.blend, inside, nullptr, 1e-3);
  const auto out_result =
      softctrl::run_tracking(setup.gp, softctrl::zero_model(2), setup.robot,
                             setup.pid, setup.blend, outside, nullptr, 1e-3);
  REQUIRE(!in_result.diverged);
  REQUIRE(!out_result.diverged);
  CHECK(in_result.metrics.mean_alpha < out_result.metrics.mean_alpha);
}

TEST_CASE("divergence reports a partial log instead of throwing") {
  RobotConfig robot = small_robot();
  robot.passive_stiffness = 1e12;  // far beyond the integrator's stability
  const TrainedSetup& setup = trained_setup();
  softctrl::PidConfig pid = setup.pid;
  const softctrl::ReferenceSpec ref{0.5, 0.0, 0.0, 2.0};
  const auto result =
      softctrl::run_tracking(setup.gp, softctrl::zero_model(2), robot, pid,
                             setup.blend, ref, nullptr, 1e-3);
  CHECK(result.diverged);
  CHECK(result.divergence_time > 0.0);
  CHECK(result.log.count() >= 1);
  CHECK(result.log.count() < 2000);
}

TEST_CASE("stiffness probe is softer inside the training region") {
  const TrainedSetup& setup = trained_setup();
  softctrl::ProbeSpec probe;
  probe.torque = 0.01;
  probe.segment_index = 1;
  probe.settle_time = 6.0;
  probe.probe_duration = 2.0;
  probe.y_in = 0.5;
  probe.y_out = -0.5;
  const auto report =
      softctrl::run_stiffness_probe(setup.gp, softctrl::zero_model(2),
                                    setup.robot, setup.pid, setup.blend,
                                    probe, 1e-3);
  CHECK(report.in_region_deflection > 0.0);
  CHECK(report.out_region_deflection > 0.0);
  CHECK(report.in_region_deflection > report.out_region_deflection);
  CHECK(report.ratio_defined);
  CHECK(report.compliance_ratio > 1.0);
}

TEST_CASE("zero probe torque yields zero deflection and an undefined ratio") {
  const TrainedSetup& setup = trained_setup();
  softctrl::ProbeSpec probe;
  probe.torque = 0.0;
  probe.segment_index = 1;
  probe.settle_time = 2.0;
  probe.probe_duration = 1.0;
  probe.y_in = 0.5;
  probe.y_out = -0.5;
  const auto report =
      softctrl::run_stiffness_probe(setup.gp, softctrl::zero_model(2),
                                    setup.robot, setup.pid, setup.blend,
                                    probe, 1e-3);
  CHECK(report.in_region_deflection < 1e-9);
  CHECK(report.out_region_deflection < 1e-9);
  CHECK(!report.ratio_defined);
}

TEST_CASE("dataset files round-trip bit-exactly") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 7.0;
  profile.duration = 6.0;
  const CollectedData data = softctrl::collect_dataset(
      robot, softctrl::zero_model(2), profile, 60, Region::kAll, 1e-3);
  const std::uint64_t fp = softctrl::config_fingerprint(robot, profile);

  const auto path = temp_file("softctrl_dataset_roundtrip.csv");
  softctrl::save_dataset(path.string(), data, fp);
  const auto loaded = softctrl::load_dataset(path.string());

  CHECK(loaded.fingerprint == fp);
  CHECK((loaded.data.times - data.times).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.data.outputs - data.outputs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.data.applied - data.applied).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.data.residuals - data.residuals).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("truncated dataset files are rejected without a partial object") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  profile.amplitude = 7.0;
  profile.duration = 6.0;
  const CollectedData data = softctrl::collect_dataset(
      robot, softctrl::zero_model(2), profile, 40, Region::kAll, 1e-3);
  const auto path = temp_file("softctrl_dataset_truncated.csv");
  softctrl::save_dataset(path.string(), data,
                         softctrl::config_fingerprint(robot, profile));

  // Chop the file mid-row.
  std::string contents;
  {
    std::ifstream in(path);
    std::getline(in, contents, '\0');
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << contents.substr(0, contents.size() * 2 / 3);
    out << "not,a,number\n";
  }
  CHECK_THROWS_AS(softctrl::load_dataset(path.string()),
                  softctrl::MalformedFileError);
  std::filesystem::remove(path);
}

TEST_CASE("future format versions are refused distinctly") {
  const auto path = temp_file("softctrl_dataset_future.csv");
  {
    std::ofstream out(path);
    out << "# softctrl dataset format_version=2 fingerprint="
        << softctrl::fingerprint_to_hex(1) << "\n";
    out << "time,ydd,yd,y,p_1,target_1\n";
    out << "0,0,0,0,0,0\n";
  }
  CHECK_THROWS_AS(softctrl::load_dataset(path.string()),
                  softctrl::VersionMismatchError);
  std::filesystem::remove(path);
}

TEST_CASE("model files reproduce predictions after a round-trip") {
  const TrainedSetup& setup = trained_setup();
  const std::uint64_t fp =
      softctrl::config_fingerprint(setup.robot, setup.profile);
  const auto path = temp_file("softctrl_model_roundtrip.txt");
  softctrl::save_model(path.string(), setup.gp, fp);
  const auto loaded = softctrl::load_model(path.string());
  CHECK(loaded.fingerprint == fp);

  std::mt19937 rng(77);
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d query(uniform(rng), uniform(rng), uniform(rng));
    const Eigen::VectorXd mean_a = setup.gp.predict_mean(query);
    const Eigen::VectorXd mean_b = loaded.gp.predict_mean(query);
    const Eigen::VectorXd var_a = setup.gp.predict_variance(query);
    const Eigen::VectorXd var_b = loaded.gp.predict_variance(query);
    CHECK((mean_a - mean_b).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((var_a - var_b).cwiseAbs().maxCoeff() <= 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed model files raise MalformedFileError") {
  const auto path = temp_file("softctrl_model_bad.txt");
  {
    std::ofstream out(path);
    out << "# softctrl model format_version=1\n";
    out << "fingerprint 0000000000000001\n";
    out << "tool_version 0.1.0\n";
    out << "input_dim 3\n";
    // ends abruptly
  }
  CHECK_THROWS_AS(softctrl::load_model(path.string()),
                  softctrl::MalformedFileError);
  std::filesystem::remove(path);
}

TEST_CASE("trajectory logs round-trip") {
  const TrainedSetup& setup = trained_setup();
  const softctrl::ReferenceSpec ref{0.5, 0.2, 0.2, 1.0};
  const auto result =
      softctrl::run_tracking(setup.gp, softctrl::zero_model(2), setup.robot,
                             setup.pid, setup.blend, ref, nullptr, 1e-3);
  const auto path = temp_file("softctrl_log_roundtrip.csv");
  softctrl::save_log(path.string(), result.log, 5);
  const auto loaded = softctrl::load_log(path.string());
  CHECK((loaded.time - result.log.time).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.alpha - result.log.alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.p_applied - result.log.p_applied).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((loaded.u - result.log.u).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("stiffness reports round-trip including the undefined ratio") {
  const auto path = temp_file("softctrl_report_roundtrip.txt");
  softctrl::StiffnessReport report;
  report.probe_torque = 0.01;
  report.in_region_deflection = 0.2;
  report.out_region_deflection = 0.05;
  report.compliance_ratio = 4.0;
  report.ratio_defined = true;
  softctrl::save_stiffness_report(path.string(), report, 7);
  auto loaded = softctrl::load_stiffness_report(path.string());
  CHECK(loaded.ratio_defined);
  CHECK(loaded.compliance_ratio == 4.0);

  report.ratio_defined = false;
  softctrl::save_stiffness_report(path.string(), report, 7);
  loaded = softctrl::load_stiffness_report(path.string());
  CHECK(!loaded.ratio_defined);
  std::filesystem::remove(path);
}

TEST_CASE("config fingerprints separate distinct configurations") {
  const RobotConfig robot = small_robot();
  ExcitationProfile profile;
  const std::uint64_t base = softctrl::config_fingerprint(robot, profile);
  CHECK(base == softctrl::config_fingerprint(robot, profile));

  RobotConfig other = robot;
  other.segment_mass *= 2.0;
  CHECK(softctrl::config_fingerprint(other, profile) != base);

  ExcitationProfile reseeded = profile;
  reseeded.seed += 1;
  CHECK(softctrl::config_fingerprint(robot, reseeded) != base);
}

TEST_CASE("config files override defaults and reject bad keys") {
  const auto path = temp_file("softctrl_config_test.cfg");
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "robot.segments = 2\n";
    out << "excitation.amplitude = 9.5\n";
    out << "pid.kp = 77\n";
    out << "blend.c2 = -4\n";
    out << "collect.region = negative\n";
    out << "seed = 99\n";
  }
  softctrl::AppConfig cfg;
  softctrl::apply_config_file(cfg, path.string());
  CHECK(cfg.robot.segments == 2);
  CHECK(cfg.excitation.amplitude == 9.5);
  CHECK(cfg.pid.kp == 77.0);
  CHECK(cfg.blend_c2 == -4.0);
  CHECK(cfg.region == Region::kNegative);
  CHECK(cfg.seed == 99);

  {
    std::ofstream out(path);
    out << "robot.segmnets = 2\n";  // typo
  }
  softctrl::AppConfig fresh;
  CHECK_THROWS_WITH_AS(softctrl::apply_config_file(fresh, path.string()),
                       doctest::Contains("robot.segmnets"),
                       softctrl::ConfigError);

  {
    std::ofstream out(path);
    out << "pid.kp = fast\n";
  }
  CHECK_THROWS_WITH_AS(softctrl::apply_config_file(fresh, path.string()),
                       doctest::Contains("pid.kp"), softctrl::ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("auto blend gain normalizes by the learned signal variance") {
  const TrainedSetup& setup = trained_setup();
  softctrl::AppConfig cfg;
  cfg.blend_c1 = 0.0;  // auto
  const softctrl::BlendConfig blend = softctrl::resolve_blend(cfg, setup.gp);
  CHECK(blend.c1 ==
        doctest::Approx(10.0 / setup.gp.hyperparameters().signal_variance));
  CHECK(blend.c2 == cfg.blend_c2);

  cfg.blend_c1 = 3.5;
  CHECK(softctrl::resolve_blend(cfg, setup.gp).c1 == 3.5);
}
