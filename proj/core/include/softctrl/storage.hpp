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

#include "softctrl/excitation.hpp"
#include "softctrl/experiments.hpp"
#include "softctrl/gp.hpp"
#include "softctrl/robot.hpp"

namespace softctrl {

/// Hash of the robot parameters and the collection profile; stored in every
/// file so a model can be refused when replayed against a different setup.
std::uint64_t config_fingerprint(const RobotConfig& robot,
                                 const ExcitationProfile& profile);

std::string fingerprint_to_hex(std::uint64_t fingerprint);

// Dataset files: CSV with a metadata comment line, a header row and columns
// time, ydd, yd, y, p_1..p_n, target_1..target_n. Numbers use the shortest
// round-trip representation, so save/load is bit-exact.
void save_dataset(const std::string& path, const CollectedData& data,
                  std::uint64_t fingerprint);

struct LoadedDataset {
  CollectedData data;
  std::uint64_t fingerprint = 0;
};

LoadedDataset load_dataset(const std::string& path);

// Model files: key-value text holding the hyperparameters and the training
// matrices; loading refits the factorization deterministically.
void save_model(const std::string& path, const TrainedGp& gp,
                std::uint64_t fingerprint);

struct LoadedModel {
  TrainedGp gp;
  std::uint64_t fingerprint = 0;
};

LoadedModel load_model(const std::string& path);

// Trajectory logs: CSV with columns time, y_desired, y_actual, alpha,
// var_1..var_n, p_1..p_n, pff_1..pff_n, u_1..u_n.
void save_log(const std::string& path, const TrajectoryLog& log,
              std::uint64_t fingerprint);

TrajectoryLog load_log(const std::string& path);

void save_stiffness_report(const std::string& path,
                           const StiffnessReport& report,
                           std::uint64_t fingerprint);

StiffnessReport load_stiffness_report(const std::string& path);

}  // namespace softctrl
