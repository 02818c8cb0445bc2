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

#include <cstdint>
#include <string>
#include <vector>

namespace softctrl {

enum class ExcitationKind { kMultisine, kChirp, kRampHold };

ExcitationKind excitation_kind_from_string(const std::string& name);
std::string to_string(ExcitationKind kind);

/// Scalar force profile used to excite the robot while collecting data. The
/// band is in Hz and must stay below the Nyquist rate of the control loop.
struct ExcitationProfile {
  ExcitationKind kind = ExcitationKind::kMultisine;
  double amplitude = 12.0;  // peak force, N
  double f_lo = 0.05;       // Hz
  double f_hi = 0.8;        // Hz
  double duration = 60.0;   // s
  std::uint64_t seed = 1;

  void validate(double control_rate) const;
};

/// Deterministic force series sampled at the control rate; length is
/// round(duration * control_rate), peak magnitude equals the amplitude.
std::vector<double> generate_excitation(const ExcitationProfile& profile,
                                        double control_rate);

}  // namespace softctrl
