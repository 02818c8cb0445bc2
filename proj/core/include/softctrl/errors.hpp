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

#include <stdexcept>
#include <string>

namespace softctrl {

// Bad values in a config struct or config file; maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Kernel matrix could not be factorized even after the jitter escalation.
class IllConditionedError : public std::runtime_error {
 public:
  IllConditionedError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// Every hyperparameter restart failed to produce a usable likelihood.
class OptimizationError : public std::runtime_error {
 public:
  explicit OptimizationError(const std::string& what) : std::runtime_error(what) {}
};

// Mass matrix factorization failed during forward dynamics.
class SingularConfigurationError : public std::runtime_error {
 public:
  explicit SingularConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

// The integrator produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Storage errors, kept distinct so callers can map them to exit codes.
class MalformedFileError : public std::runtime_error {
 public:
  explicit MalformedFileError(const std::string& what) : std::runtime_error(what) {}
};

class VersionMismatchError : public std::runtime_error {
 public:
  explicit VersionMismatchError(const std::string& what) : std::runtime_error(what) {}
};

class FingerprintMismatchError : public std::runtime_error {
 public:
  explicit FingerprintMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace softctrl
