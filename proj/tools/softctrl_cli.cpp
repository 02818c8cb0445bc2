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

// Pipeline driver: collect -> train -> track -> probe -> report.
//
// Exit codes: 0 success, 1 configuration or argument errors (including
// missing inputs and fingerprint mismatches), 2 simulation divergence or
// optimization failure, 3 I/O and file-format errors. Results go to stdout
// as key=value pairs or CSV; diagnostics go to stderr.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softctrl/config.hpp"
#include "softctrl/control.hpp"
#include "softctrl/errors.hpp"
#include "softctrl/excitation.hpp"
#include "softctrl/experiments.hpp"
#include "softctrl/gp.hpp"
#include "softctrl/robot.hpp"
#include "softctrl/storage.hpp"
#include "softctrl/version.hpp"

namespace {

using softctrl::AppConfig;

std::string num(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags,
                const std::string& default_out) {
  flags.out = default_out;
  cmd->add_option("--config", flags.config_path,
                  "Key-value config file (flags take precedence)");
  cmd->add_option("--seed", flags.seed, "Seed for all randomness in this run");
  cmd->add_option("--out", flags.out, "Output path")
      ->capture_default_str();
}

AppConfig resolve_config(const CommonFlags& flags) {
  AppConfig cfg;
  if (flags.config_path) {
    if (!std::filesystem::exists(*flags.config_path)) {
      throw softctrl::ConfigError("config file '" + *flags.config_path +
                                  "' does not exist");
    }
    softctrl::apply_config_file(cfg, *flags.config_path);
  }
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

void require_input(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw softctrl::ConfigError(std::string(what) + " '" + path +
                                "' does not exist");
  }
}

void check_fingerprint(std::uint64_t from_file, const AppConfig& cfg,
                       const std::string& path) {
  const std::uint64_t expected =
      softctrl::config_fingerprint(cfg.robot, cfg.excitation);
  if (from_file != expected) {
    throw softctrl::FingerprintMismatchError(
        "'" + path + "' carries fingerprint " +
        softctrl::fingerprint_to_hex(from_file) +
        " but the active config hashes to " +
        softctrl::fingerprint_to_hex(expected));
  }
}

// One manifest per run, next to the primary output.
void write_manifest(const std::string& out_path, const std::string& command,
                    const AppConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>&
                        entries) {
  std::ofstream file(out_path + ".manifest");
  if (!file) return;  // the manifest is best-effort metadata
  file << "tool_version " << softctrl::kVersion << "\n";
  file << "command " << command << "\n";
  file << "seed " << cfg.seed << "\n";
  for (const auto& [key, value] : entries) {
    file << key << ' ' << value << "\n";
  }
}

int cmd_train(const CommonFlags& flags, const std::string& dataset_path,
              int restarts) {
  const AppConfig cfg = resolve_config(flags);
  require_input(dataset_path, "dataset");
  if (restarts < 1) {
    throw softctrl::ConfigError("--restarts must be >= 1");
  }

  const auto loaded = softctrl::load_dataset(dataset_path);
  const softctrl::Dataset dataset = loaded.data.to_dataset();
  const softctrl::Hyperparameters hp =
      softctrl::optimize_hyperparameters(dataset, restarts, cfg.seed);
  const softctrl::TrainedGp gp(dataset, hp);
  const double lml = softctrl::log_marginal_likelihood(dataset, hp).value;

  softctrl::save_model(flags.out, gp, loaded.fingerprint);
  write_manifest(flags.out, "train", cfg,
                 {{"dataset", dataset_path},
                  {"model", flags.out},
                  {"restarts", std::to_string(restarts)}});

  std::cout << "lml=" << num(lml) << "\n";
  std::cout << "signal_variance=" << num(hp.signal_variance) << "\n";
  for (Eigen::Index d = 0; d < hp.lengthscales.size(); ++d) {
    std::cout << "lengthscale_" << (d + 1) << "=" << num(hp.lengthscales[d])
              << "\n";
  }
  for (Eigen::Index i = 0; i < hp.noise_variance.size(); ++i) {
    std::cout << "noise_variance_" << (i + 1) << "="
              << num(hp.noise_variance[i]) << "\n";
  }
  return 0;
}

int cmd_track(const CommonFlags& flags, const std::string& model_path,
              const std::optional<double>& offset,
              const std::optional<double>& amplitude,
              const std::optional<double>& frequency,
              const std::optional<double>& duration) {
  AppConfig cfg = resolve_config(flags);
  require_input(model_path, "model");
  if (offset) cfg.track.offset = *offset;
  if (amplitude) cfg.track.amplitude = *amplitude;
  if (frequency) cfg.track.frequency = *frequency;
  if (duration) cfg.track.duration = *duration;

  const auto loaded = softctrl::load_model(model_path);
  check_fingerprint(loaded.fingerprint, cfg, model_path);

  const softctrl::BlendConfig blend = softctrl::resolve_blend(cfg, loaded.gp);
  const auto result = softctrl::run_tracking(
      loaded.gp, softctrl::zero_model(cfg.robot.segments), cfg.robot, cfg.pid,
      blend, cfg.track, nullptr, cfg.dt);

  softctrl::save_log(flags.out, result.log, loaded.fingerprint);
  write_manifest(flags.out, "track", cfg,
                 {{"model", model_path},
                  {"log", flags.out},
                  {"offset", num(cfg.track.offset)},
                  {"amplitude", num(cfg.track.amplitude)},
                  {"frequency", num(cfg.track.frequency)},
                  {"duration", num(cfg.track.duration)}});

  if (result.diverged) {
    std::cerr << "simulation diverged at t = " << result.divergence_time
              << "; partial log written to " << flags.out << "\n";
    return 2;
  }
  std::cout << "rms_error=" << num(result.metrics.rms_error) << "\n";
  std::cout << "peak_error=" << num(result.metrics.peak_error) << "\n";
  std::cout << "mean_alpha=" << num(result.metrics.mean_alpha) << "\n";
  std::cout << "steps=" << result.log.count() << "\n";
  return 0;
}

int cmd_probe(const CommonFlags& flags, const std::string& model_path,
              const std::optional<double>& torque,
              const std::optional<int>& segment,
              const std::optional<double>& settle,
              const std::optional<double>& window,
              const std::optional<double>& y_in,
              const std::optional<double>& y_out) {
  AppConfig cfg = resolve_config(flags);
  require_input(model_path, "model");
  if (torque) cfg.probe.torque = *torque;
  if (segment) cfg.probe.segment_index = *segment;
  if (settle) cfg.probe.settle_time = *settle;
  if (window) cfg.probe.probe_duration = *window;
  if (y_in) cfg.probe.y_in = *y_in;
  if (y_out) cfg.probe.y_out = *y_out;

  const auto loaded = softctrl::load_model(model_path);
  check_fingerprint(loaded.fingerprint, cfg, model_path);

  const softctrl::BlendConfig blend = softctrl::resolve_blend(cfg, loaded.gp);
  const auto report = softctrl::run_stiffness_probe(
      loaded.gp, softctrl::zero_model(cfg.robot.segments), cfg.robot, cfg.pid,
      blend, cfg.probe, cfg.dt);

  softctrl::save_stiffness_report(flags.out, report, loaded.fingerprint);
  write_manifest(flags.out, "probe", cfg,
                 {{"model", model_path},
                  {"report", flags.out},
                  {"torque", num(cfg.probe.torque)}});

  std::cout << "in_region_deflection=" << num(report.in_region_deflection)
            << "\n";
  std::cout << "out_region_deflection=" << num(report.out_region_deflection)
            << "\n";
  std::cout << "compliance_ratio="
            << (report.ratio_defined ? num(report.compliance_ratio)
                                     : std::string("undefined"))
            << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& log_paths,
               const std::optional<std::string>& probe_path,
               const std::optional<std::string>& out_path) {
  for (const auto& path : log_paths) require_input(path, "log");
  if (probe_path) require_input(*probe_path, "stiffness report");

  std::vector<softctrl::TrajectoryLog> logs;
  logs.reserve(log_paths.size());
  for (const auto& path : log_paths) {
    logs.push_back(softctrl::load_log(path));
  }

  std::cout << "log,rms_error,peak_error,mean_alpha\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto metrics = softctrl::compute_metrics(logs[i]);
    std::cout << log_paths[i] << ',' << num(metrics.rms_error) << ','
              << num(metrics.peak_error) << ',' << num(metrics.mean_alpha)
              << "\n";
  }
  if (probe_path) {
    const auto report = softctrl::load_stiffness_report(*probe_path);
    std::cout << "compliance_ratio="
              << (report.ratio_defined ? num(report.compliance_ratio)
                                       : std::string("undefined"))
              << "\n";
  }

  if (out_path) {
    std::ofstream plot(*out_path);
    if (!plot) {
      throw std::runtime_error("cannot open '" + *out_path + "' for writing");
    }
    plot << "log,time,y_desired,y_actual,alpha\n";
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const auto& log = logs[i];
      for (Eigen::Index k = 0; k < log.count(); ++k) {
        plot << log_paths[i] << ',' << num(log.time[k]) << ','
             << num(log.y_desired[k]) << ',' << num(log.y_actual[k]) << ','
             << num(log.alpha[k]) << "\n";
      }
    }
  }
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const softctrl::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const softctrl::FingerprintMismatchError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& err) {
    std::cerr << "argument error: " << err.what() << "\n";
    return 1;
  } catch (const softctrl::DivergenceError& err) {
    std::cerr << "simulation error: " << err.what() << "\n";
    return 2;
  } catch (const softctrl::OptimizationError& err) {
    std::cerr << "optimization error: " << err.what() << "\n";
    return 2;
  } catch (const softctrl::IllConditionedError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 2;
  } catch (const softctrl::SingularConfigurationError& err) {
    std::cerr << "simulation error: " << err.what() << "\n";
    return 2;
  } catch (const softctrl::MalformedFileError& err) {
    std::cerr << "file error: " << err.what() << "\n";
    return 3;
  } catch (const softctrl::VersionMismatchError& err) {
    std::cerr << "file error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "softctrl: variance-blended feed-forward/feedback control of a planar "
      "soft robot"};
  app.set_version_flag("--version", softctrl::kVersion);
  app.require_subcommand(1);

  // collect
  auto* collect = app.add_subcommand(
      "collect", "Excite the robot open loop and record a training dataset");
  CommonFlags collect_flags;
  add_common(collect, collect_flags, "dataset.csv");
  std::optional<double> c_duration, c_amplitude, c_flo, c_fhi, c_dt;
  std::optional<std::string> c_kind, c_region;
  std::optional<Eigen::Index> c_samples;
  collect->add_option("--duration", c_duration, "Excitation duration [s]");
  collect->add_option("--amplitude", c_amplitude, "Peak force [N]");
  collect->add_option("--f-lo", c_flo, "Lower band edge [Hz]");
  collect->add_option("--f-hi", c_fhi, "Upper band edge [Hz]");
  collect->add_option("--kind", c_kind,
                      "Excitation kind: multisine, chirp or ramp-hold");
  collect->add_option("--samples", c_samples, "Dataset size n_d");
  collect->add_option("--region", c_region,
                      "Workspace region to keep: positive, negative or all");
  collect->add_option("--dt", c_dt, "Simulation step [s]");

  // train
  auto* train = app.add_subcommand(
      "train", "Optimize GP hyperparameters on a recorded dataset");
  CommonFlags train_flags;
  add_common(train, train_flags, "model.txt");
  std::string t_dataset = "dataset.csv";
  int t_restarts = 4;
  train->add_option("--dataset", t_dataset, "Input dataset CSV")
      ->capture_default_str();
  train->add_option("--restarts", t_restarts,
                    "Likelihood optimization restarts")
      ->capture_default_str();

  // track
  auto* track = app.add_subcommand(
      "track", "Track a sinusoid reference with the blended controller");
  CommonFlags track_flags;
  add_common(track, track_flags, "track.csv");
  std::string k_model = "model.txt";
  std::optional<double> k_offset, k_amplitude, k_frequency, k_duration;
  track->add_option("--model", k_model, "Trained model file")
      ->capture_default_str();
  track->add_option("--offset", k_offset, "Reference offset [rad]");
  track->add_option("--amplitude", k_amplitude, "Reference amplitude [rad]");
  track->add_option("--frequency", k_frequency, "Reference frequency [Hz]");
  track->add_option("--duration", k_duration, "Run duration [s]");

  // probe
  auto* probe = app.add_subcommand(
      "probe", "Compare stiffness under a probe torque in and out of region");
  CommonFlags probe_flags;
  add_common(probe, probe_flags, "stiffness.txt");
  std::string p_model = "model.txt";
  std::optional<double> p_torque, p_settle, p_window, p_yin, p_yout;
  std::optional<int> p_segment;
  probe->add_option("--model", p_model, "Trained model file")
      ->capture_default_str();
  probe->add_option("--torque", p_torque, "Probe torque [N*m]");
  probe->add_option("--segment", p_segment, "Joint index the probe acts on");
  probe->add_option("--settle", p_settle, "Settle time before the probe [s]");
  probe->add_option("--window", p_window, "Probe window length [s]");
  probe->add_option("--y-in", p_yin, "In-region operating point [rad]");
  probe->add_option("--y-out", p_yout, "Out-of-region operating point [rad]");

  // report
  auto* report = app.add_subcommand(
      "report", "Summarize tracking logs and an optional stiffness report");
  std::vector<std::string> r_logs;
  std::optional<std::string> r_probe, r_out;
  report->add_option("logs", r_logs, "Trajectory log CSVs")->required();
  report->add_option("--probe", r_probe, "Stiffness report to include");
  report->add_option("--out", r_out, "Plot-ready CSV output path");

  CLI11_PARSE(app, argc, argv);

  const auto apply_collect_flags = [&](AppConfig& cfg) {
    if (c_duration) cfg.excitation.duration = *c_duration;
    if (c_amplitude) cfg.excitation.amplitude = *c_amplitude;
    if (c_flo) cfg.excitation.f_lo = *c_flo;
    if (c_fhi) cfg.excitation.f_hi = *c_fhi;
    if (c_kind) cfg.excitation.kind = softctrl::excitation_kind_from_string(*c_kind);
    if (c_samples) cfg.dataset_size = *c_samples;
    if (c_region) cfg.region = softctrl::region_from_string(*c_region);
    if (c_dt) cfg.dt = *c_dt;
  };

  if (collect->parsed()) {
    return guarded([&] {
      AppConfig cfg = resolve_config(collect_flags);
      apply_collect_flags(cfg);
      cfg.robot.validate();
      cfg.excitation.seed = cfg.seed;
      const auto data = softctrl::collect_dataset(
          cfg.robot, softctrl::zero_model(cfg.robot.segments), cfg.excitation,
          cfg.dataset_size, cfg.region, cfg.dt);
      const std::uint64_t fingerprint =
          softctrl::config_fingerprint(cfg.robot, cfg.excitation);
      softctrl::save_dataset(collect_flags.out, data, fingerprint);
      write_manifest(
          collect_flags.out, "collect", cfg,
          {{"dataset", collect_flags.out},
           {"samples", std::to_string(data.count())},
           {"region", softctrl::to_string(cfg.region)},
           {"fingerprint", softctrl::fingerprint_to_hex(fingerprint)}});
      std::cout << "n_d=" << data.count() << "\n";
      for (Eigen::Index i = 0; i < data.output_dim(); ++i) {
        const double rms = std::sqrt(data.residuals.col(i).squaredNorm() /
                                     static_cast<double>(data.count()));
        std::cout << "residual_rms_" << (i + 1) << "=" << num(rms) << "\n";
      }
      return 0;
    });
  }
  if (train->parsed()) {
    return guarded([&] { return cmd_train(train_flags, t_dataset, t_restarts); });
  }
  if (track->parsed()) {
    return guarded([&] {
      return cmd_track(track_flags, k_model, k_offset, k_amplitude,
                       k_frequency, k_duration);
    });
  }
  if (probe->parsed()) {
    return guarded([&] {
      return cmd_probe(probe_flags, p_model, p_torque, p_segment, p_settle,
                       p_window, p_yin, p_yout);
    });
  }
  if (report->parsed()) {
    return guarded([&] { return cmd_report(r_logs, r_probe, r_out); });
  }
  return 1;
}
