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

#include "softctrl/excitation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kMultisineLines = 16;

std::vector<double> multisine(const ExcitationProfile& p, double rate,
                              std::size_t samples) {
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
  std::vector<double> freqs(kMultisineLines);
  std::vector<double> phases(kMultisineLines);
  for (int i = 0; i < kMultisineLines; ++i) {
    const double frac =
        (kMultisineLines == 1)
            ? 0.0
            : static_cast<double>(i) / (kMultisineLines - 1);
    freqs[i] = p.f_lo + frac * (p.f_hi - p.f_lo);
    phases[i] = phase_dist(rng);
  }

  std::vector<double> series(samples, 0.0);
  double peak = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / rate;
    double v = 0.0;
    for (int i = 0; i < kMultisineLines; ++i) {
      v += std::sin(kTwoPi * freqs[i] * t + phases[i]);
    }
    series[k] = v;
    peak = std::max(peak, std::abs(v));
  }
  const double scale = (peak > 0.0) ? p.amplitude / peak : 0.0;
  for (double& v : series) v *= scale;
  return series;
}

std::vector<double> chirp(const ExcitationProfile& p, double rate,
                          std::size_t samples) {
  std::vector<double> series(samples);
  const double sweep = (p.f_hi - p.f_lo) / (2.0 * p.duration);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / rate;
    series[k] = p.amplitude * std::sin(kTwoPi * (p.f_lo + sweep * t) * t);
  }
  return series;
}

std::vector<double> ramp_hold(const ExcitationProfile& p, double rate,
                              std::size_t samples) {
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> level_dist(-p.amplitude, p.amplitude);

  const double segment = 1.0 / p.f_lo;               // one level per segment
  const double ramp = std::min(0.5 / p.f_hi, segment);  // transition time

  std::vector<double> series(samples);
  double prev_level = 0.0;
  double level = level_dist(rng);
  int current_segment = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / rate;
    const int seg = static_cast<int>(t / segment);
    while (seg > current_segment) {
      prev_level = level;
      level = level_dist(rng);
      ++current_segment;
    }
    const double local = t - current_segment * segment;
    if (local < ramp) {
      const double blend = local / ramp;
      series[k] = prev_level + blend * (level - prev_level);
    } else {
      series[k] = level;
    }
  }
  return series;
}

}  // namespace

ExcitationKind excitation_kind_from_string(const std::string& name) {
  if (name == "multisine") return ExcitationKind::kMultisine;
  if (name == "chirp") return ExcitationKind::kChirp;
  if (name == "ramp-hold") return ExcitationKind::kRampHold;
  throw ConfigError("unknown excitation kind '" + name +
                    "' (expected multisine, chirp or ramp-hold)");
}

std::string to_string(ExcitationKind kind) {
  switch (kind) {
    case ExcitationKind::kMultisine:
      return "multisine";
    case ExcitationKind::kChirp:
      return "chirp";
    case ExcitationKind::kRampHold:
      return "ramp-hold";
  }
  return "unknown";
}

void ExcitationProfile::validate(double control_rate) const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("excitation.amplitude must be nonnegative");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ConfigError("excitation.duration must be positive");
  }
  if (!(f_lo > 0.0) || !(f_hi >= f_lo)) {
    throw ConfigError(
        "excitation band must satisfy 0 < f_lo <= f_hi");
  }
  if (!(f_hi < 0.5 * control_rate)) {
    std::ostringstream msg;
    msg << "excitation.f_hi = " << f_hi
        << " Hz exceeds the Nyquist rate of the " << control_rate
        << " Hz control loop";
    throw std::invalid_argument(msg.str());
  }
}

std::vector<double> generate_excitation(const ExcitationProfile& profile,
                                        double control_rate) {
  profile.validate(control_rate);
  const auto samples = static_cast<std::size_t>(
      std::llround(profile.duration * control_rate));
  if (samples == 0) {
    throw ConfigError("excitation.duration too short for the control rate");
  }
  switch (profile.kind) {
    case ExcitationKind::kMultisine:
      return multisine(profile, control_rate, samples);
    case ExcitationKind::kChirp:
      return chirp(profile, control_rate, samples);
    case ExcitationKind::kRampHold:
      return ramp_hold(profile, control_rate, samples);
  }
  throw std::invalid_argument("unhandled excitation kind");
}

}  // namespace softctrl
