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
#include <cstdint>
#include <vector>

namespace softctrl {

/// Anisotropic squared-exponential kernel parameters for a multi-output GP
/// with independent outputs: signal variance and per-dimension lengthscales
/// are shared across outputs, the observation noise variance is per output.
struct Hyperparameters {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;    // one per input dimension, > 0
  Eigen::VectorXd noise_variance;  // one per output dimension, >= 0

  // Throws std::invalid_argument on dimension mismatch or non-positive
  // entries (noise variances may be zero; the jitter policy in fit keeps
  // noise-free problems factorizable).
  void validate(Eigen::Index input_dim, Eigen::Index output_dim) const;
};

/// Training pairs. Input points are columns (stacked acceleration, velocity,
/// position blocks of the output trajectory); targets are force residuals,
/// one row per point, one column per force component.
struct Dataset {
  Eigen::MatrixXd inputs;   // input_dim x count
  Eigen::MatrixXd targets;  // count x output_dim

  Eigen::Index input_dim() const { return inputs.rows(); }
  Eigen::Index output_dim() const { return targets.cols(); }
  Eigen::Index count() const { return inputs.cols(); }

  void validate() const;
};

/// k(x, x') = signal_variance * exp(-1/2 * sum_d ((x_d - x'_d) / l_d)^2)
double kernel_se(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const Hyperparameters& hp);

/// Gram matrix of the training inputs, K(j, l) = k(x_j, x_l).
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& inputs,
                                  const Hyperparameters& hp);

/// Covariances between one query and every training input.
Eigen::VectorXd cross_covariance(const Eigen::VectorXd& query,
                                 const Eigen::MatrixXd& inputs,
                                 const Hyperparameters& hp);

/// Immutable fitted model: per-output Cholesky factor of K + sigma_i^2 I and
/// the solved weights (K + sigma_i^2 I)^-1 P_{:,i}. Prediction is O(count)
/// for the mean and O(count^2) for the variance; const member functions are
/// safe to call concurrently.
class TrainedGp {
 public:
  // Factorizes once per output. If plain Cholesky fails, a diagonal jitter
  // starting at 1e-10 * signal_variance and escalating by 10x up to
  // 1e-4 * signal_variance is added; past that an IllConditionedError with a
  // condition estimate is thrown.
  TrainedGp(Dataset dataset, Hyperparameters hp);

  Eigen::VectorXd predict_mean(const Eigen::VectorXd& query) const;

  // Per-output posterior variance, clamped below at zero so the downstream
  // sigmoid always receives a nonnegative argument.
  Eigen::VectorXd predict_variance(const Eigen::VectorXd& query) const;

  Eigen::Index input_dim() const { return dataset_.input_dim(); }
  Eigen::Index output_dim() const { return dataset_.output_dim(); }
  const Dataset& dataset() const { return dataset_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  /// Lower-triangular factor of K + sigma_i^2 I (+ jitter) for one output.
  const Eigen::MatrixXd& factor(Eigen::Index output) const;
  /// count x output_dim; column i solves (K + sigma_i^2 I) w = P_{:,i}.
  const Eigen::MatrixXd& weights() const { return weights_; }
  double jitter(Eigen::Index output) const;

 private:
  Dataset dataset_;
  Hyperparameters hp_;
  std::vector<Eigen::MatrixXd> factors_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd jitter_;
};

inline TrainedGp fit(Dataset dataset, Hyperparameters hp) {
  return TrainedGp(std::move(dataset), std::move(hp));
}

struct LogMarginalLikelihood {
  double value = 0.0;
  /// Gradient in log-parameter space, ordered as
  /// [log signal_variance, log lengthscales..., log noise_variances...].
  Eigen::VectorXd gradient;
};

/// Sum over outputs of the Gaussian log marginal likelihood
///   -1/2 P_i' (K + s_i^2 I)^-1 P_i - 1/2 log det(K + s_i^2 I) - n/2 log 2pi
/// and its analytic gradient. Uses the same jitter policy as fit.
LogMarginalLikelihood log_marginal_likelihood(const Dataset& dataset,
                                              const Hyperparameters& hp);

struct OptimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // infinity norm, log space
};

/// Maximizes the log marginal likelihood by projected L-BFGS in
/// log-hyperparameter space. Restart 0 starts at data-scale heuristics, the
/// remaining restarts draw log-uniform multipliers in [1e-2, 1e2] around
/// them; the best final likelihood wins. Deterministic for a fixed seed.
/// Throws OptimizationError if every restart fails to factorize.
Hyperparameters optimize_hyperparameters(const Dataset& dataset, int restarts,
                                         std::uint64_t seed,
                                         const OptimizeOptions& options = {});

}  // namespace softctrl
