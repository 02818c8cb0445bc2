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

#include "softctrl/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "softctrl/errors.hpp"

namespace softctrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_lengthscales(const Eigen::VectorXd& x, const Hyperparameters& hp) {
  if (hp.lengthscales.size() != x.size()) {
    std::ostringstream msg;
    msg << "lengthscale count " << hp.lengthscales.size()
        << " does not match input dimension " << x.size();
    throw std::invalid_argument(msg.str());
  }
  if (!(hp.signal_variance > 0.0) || !std::isfinite(hp.signal_variance)) {
    throw std::invalid_argument("signal variance must be positive and finite");
  }
  for (Eigen::Index d = 0; d < hp.lengthscales.size(); ++d) {
    if (!(hp.lengthscales[d] > 0.0) || !std::isfinite(hp.lengthscales[d])) {
      throw std::invalid_argument("lengthscales must be positive and finite");
    }
  }
}

double squared_scaled_distance(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& x_prime,
                               const Eigen::VectorXd& lengthscales) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double z = (x[d] - x_prime[d]) / lengthscales[d];
    r2 += z * z;
  }
  return r2;
}

// Lower Cholesky factor of K + (noise + jitter) I. Jitter stays zero unless
// the plain factorization fails, then escalates 1e-10..1e-4 times the signal
// variance before giving up with a condition estimate.
struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& kernel,
                                    double noise_variance,
                                    double signal_variance) {
  const Eigen::Index n = kernel.rows();
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 7; ++attempt) {
    Eigen::MatrixXd shifted = kernel;
    shifted.diagonal().array() += noise_variance + jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    jitter = (attempt == 0) ? 1e-10 * signal_variance : jitter * 10.0;
  }

  Eigen::MatrixXd shifted = kernel;
  shifted.diagonal().array() += noise_variance;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(shifted,
                                                     Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond =
      hi / std::max(lo, std::numeric_limits<double>::denorm_min());
  std::ostringstream msg;
  msg << "kernel matrix of size " << n
      << " is not factorizable (condition estimate " << cond
      << ", max jitter " << 1e-4 * signal_variance << " exhausted)";
  throw IllConditionedError(msg.str(), cond);
}

// Solve (L L^T) x = b for one or many right-hand sides.
template <typename Rhs>
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& lower, const Rhs& b) {
  Eigen::MatrixXd x = lower.template triangularView<Eigen::Lower>().solve(b);
  lower.transpose().template triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

struct LmlTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;  // empty unless requested
};

LmlTerms lml_impl(const Dataset& dataset, const Hyperparameters& hp,
                  bool want_gradient) {
  dataset.validate();
  hp.validate(dataset.input_dim(), dataset.output_dim());

  const Eigen::Index n_d = dataset.count();
  const Eigen::Index n_out = dataset.output_dim();
  const Eigen::Index dim = dataset.input_dim();

  const Eigen::MatrixXd kernel = covariance_matrix(dataset.inputs, hp);

  LmlTerms out;
  Eigen::MatrixXd g_sum;  // sum_i alpha_i alpha_i' - (K + s_i I)^-1
  if (want_gradient) {
    out.gradient = Eigen::VectorXd::Zero(1 + dim + n_out);
    g_sum = Eigen::MatrixXd::Zero(n_d, n_d);
  }

  for (Eigen::Index i = 0; i < n_out; ++i) {
    const auto chol =
        cholesky_with_jitter(kernel, hp.noise_variance[i], hp.signal_variance);
    const Eigen::VectorXd target = dataset.targets.col(i);
    const Eigen::VectorXd alpha = chol_solve(chol.lower, target);
    const double log_det = 2.0 * chol.lower.diagonal().array().log().sum();
    out.value += -0.5 * target.dot(alpha) - 0.5 * log_det -
                 0.5 * static_cast<double>(n_d) * std::log(kTwoPi);

    if (want_gradient) {
      const Eigen::MatrixXd inv =
          chol_solve(chol.lower, Eigen::MatrixXd::Identity(n_d, n_d));
      g_sum.noalias() += alpha * alpha.transpose();
      g_sum -= inv;
      // d/d log s_i^2: the jitter is an additive constant, so the derivative
      // carries the nominal noise variance.
      out.gradient[1 + dim + i] =
          0.5 * hp.noise_variance[i] * (alpha.squaredNorm() - inv.trace());
    }
  }

  if (want_gradient) {
    out.gradient[0] = 0.5 * g_sum.cwiseProduct(kernel).sum();
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double inv_l2 =
          1.0 / (hp.lengthscales[d] * hp.lengthscales[d]);
      double acc = 0.0;
      for (Eigen::Index l = 0; l < n_d; ++l) {
        for (Eigen::Index j = 0; j < n_d; ++j) {
          const double diff = dataset.inputs(d, j) - dataset.inputs(d, l);
          acc += g_sum(j, l) * kernel(j, l) * diff * diff;
        }
      }
      out.gradient[1 + d] = 0.5 * acc * inv_l2;
    }
  }
  return out;
}

}  // namespace

void Hyperparameters::validate(Eigen::Index input_dim,
                               Eigen::Index output_dim) const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("signal variance must be positive and finite");
  }
  if (lengthscales.size() != input_dim) {
    std::ostringstream msg;
    msg << "expected " << input_dim << " lengthscales, got "
        << lengthscales.size();
    throw std::invalid_argument(msg.str());
  }
  for (Eigen::Index d = 0; d < input_dim; ++d) {
    if (!(lengthscales[d] > 0.0) || !std::isfinite(lengthscales[d])) {
      throw std::invalid_argument("lengthscales must be positive and finite");
    }
  }
  if (noise_variance.size() != output_dim) {
    std::ostringstream msg;
    msg << "expected " << output_dim << " noise variances, got "
        << noise_variance.size();
    throw std::invalid_argument(msg.str());
  }
  for (Eigen::Index i = 0; i < output_dim; ++i) {
    if (!(noise_variance[i] >= 0.0) || !std::isfinite(noise_variance[i])) {
      throw std::invalid_argument(
          "noise variances must be nonnegative and finite");
    }
  }
}

void Dataset::validate() const {
  if (inputs.cols() != targets.rows()) {
    std::ostringstream msg;
    msg << "dataset has " << inputs.cols() << " input points but "
        << targets.rows() << " target rows";
    throw std::invalid_argument(msg.str());
  }
  if (inputs.cols() < 1) {
    throw std::invalid_argument("dataset must contain at least one point");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("dataset entries must be finite");
  }
}

double kernel_se(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const Hyperparameters& hp) {
  if (x.size() != x_prime.size()) {
    std::ostringstream msg;
    msg << "kernel inputs have mismatched dimensions " << x.size() << " and "
        << x_prime.size();
    throw std::invalid_argument(msg.str());
  }
  check_lengthscales(x, hp);
  return hp.signal_variance *
         std::exp(-0.5 * squared_scaled_distance(x, x_prime, hp.lengthscales));
}

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& inputs,
                                  const Hyperparameters& hp) {
  if (!inputs.allFinite()) {
    throw std::invalid_argument("covariance inputs must be finite");
  }
  check_lengthscales(inputs.col(0), hp);
  const Eigen::Index n = inputs.cols();
  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    kernel(j, j) = hp.signal_variance;
    for (Eigen::Index l = j + 1; l < n; ++l) {
      const double value =
          hp.signal_variance *
          std::exp(-0.5 * squared_scaled_distance(inputs.col(j), inputs.col(l),
                                                  hp.lengthscales));
      kernel(j, l) = value;
      kernel(l, j) = value;
    }
  }
  return kernel;
}

Eigen::VectorXd cross_covariance(const Eigen::VectorXd& query,
                                 const Eigen::MatrixXd& inputs,
                                 const Hyperparameters& hp) {
  if (query.size() != inputs.rows()) {
    std::ostringstream msg;
    msg << "query dimension " << query.size()
        << " does not match training input dimension " << inputs.rows();
    throw std::invalid_argument(msg.str());
  }
  check_lengthscales(query, hp);
  const Eigen::Index n = inputs.cols();
  Eigen::VectorXd k(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k[j] = hp.signal_variance *
           std::exp(-0.5 * squared_scaled_distance(query, inputs.col(j),
                                                   hp.lengthscales));
  }
  return k;
}

TrainedGp::TrainedGp(Dataset dataset, Hyperparameters hp)
    : dataset_(std::move(dataset)), hp_(std::move(hp)) {
  dataset_.validate();
  hp_.validate(dataset_.input_dim(), dataset_.output_dim());

  const Eigen::MatrixXd kernel = covariance_matrix(dataset_.inputs, hp_);
  const Eigen::Index n_out = dataset_.output_dim();
  factors_.reserve(static_cast<std::size_t>(n_out));
  weights_.resize(dataset_.count(), n_out);
  jitter_.resize(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    auto chol = cholesky_with_jitter(kernel, hp_.noise_variance[i],
                                     hp_.signal_variance);
    weights_.col(i) = chol_solve(chol.lower, dataset_.targets.col(i));
    jitter_[i] = chol.jitter;
    factors_.push_back(std::move(chol.lower));
  }
}

const Eigen::MatrixXd& TrainedGp::factor(Eigen::Index output) const {
  return factors_.at(static_cast<std::size_t>(output));
}

double TrainedGp::jitter(Eigen::Index output) const {
  return jitter_[output];
}

Eigen::VectorXd TrainedGp::predict_mean(const Eigen::VectorXd& query) const {
  const Eigen::VectorXd k = cross_covariance(query, dataset_.inputs, hp_);
  return weights_.transpose() * k;
}

Eigen::VectorXd TrainedGp::predict_variance(
    const Eigen::VectorXd& query) const {
  const Eigen::VectorXd k = cross_covariance(query, dataset_.inputs, hp_);
  const Eigen::Index n_out = output_dim();
  Eigen::VectorXd var(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const Eigen::VectorXd v =
        factors_[static_cast<std::size_t>(i)]
            .triangularView<Eigen::Lower>()
            .solve(k);
    var[i] = std::max(0.0, hp_.signal_variance - v.squaredNorm());
  }
  return var;
}

LogMarginalLikelihood log_marginal_likelihood(const Dataset& dataset,
                                              const Hyperparameters& hp) {
  LmlTerms terms = lml_impl(dataset, hp, true);
  return {terms.value, std::move(terms.gradient)};
}

namespace {

// --- projected L-BFGS over log hyperparameters ------------------------------

struct ParamSpace {
  Eigen::Index dim = 0;    // input dimensions
  Eigen::Index n_out = 0;  // output dimensions
  Eigen::VectorXd lo, hi;  // log-space box

  Eigen::Index size() const { return 1 + dim + n_out; }

  Hyperparameters unpack(const Eigen::VectorXd& x) const {
    Hyperparameters hp;
    hp.signal_variance = std::exp(x[0]);
    hp.lengthscales = x.segment(1, dim).array().exp();
    hp.noise_variance = x.segment(1 + dim, n_out).array().exp();
    return hp;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
};

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& g,
                                   const ParamSpace& space) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= space.lo[i] + 1e-14 && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= space.hi[i] - 1e-14 && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

// Minimizes f(x) = -lml(exp(x)). Returns the final point and value; assumes
// the initial point evaluates successfully (the caller handles that case).
struct LbfgsOutcome {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
};

LbfgsOutcome lbfgs_minimize(const Dataset& dataset, const ParamSpace& space,
                            Eigen::VectorXd x0, const OptimizeOptions& opts) {
  const auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad,
                        double& f) -> bool {
    try {
      LmlTerms terms = lml_impl(dataset, space.unpack(x), true);
      if (!std::isfinite(terms.value) || !terms.gradient.allFinite()) {
        return false;
      }
      f = -terms.value;
      grad = -terms.gradient;
      return true;
    } catch (const IllConditionedError&) {
      return false;
    }
  };

  Eigen::VectorXd x = space.clamp(std::move(x0));
  Eigen::VectorXd g;
  double f = 0.0;
  if (!eval(x, g, f)) {
    return {x, std::numeric_limits<double>::infinity()};
  }

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
  constexpr std::size_t kHistory = 8;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::VectorXd pg = projected_gradient(x, g, space);
    if (pg.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) break;

    // Two-loop recursion for the quasi-Newton direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha_coef(history.size());
    std::vector<double> rho(history.size());
    for (std::size_t idx = history.size(); idx-- > 0;) {
      const auto& [s, y] = history[idx];
      rho[idx] = 1.0 / y.dot(s);
      alpha_coef[idx] = rho[idx] * s.dot(q);
      q -= alpha_coef[idx] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t idx = 0; idx < history.size(); ++idx) {
      const auto& [s, y] = history[idx];
      const double beta = rho[idx] * y.dot(q);
      q += s * (alpha_coef[idx] - beta);
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(g) >= 0.0) dir = -g;  // fall back to steepest descent

    double t = (iter == 0 && history.empty())
                   ? std::min(1.0, 1.0 / std::max(1e-12, g.norm()))
                   : 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double fn = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      xn = space.clamp(x + t * dir);
      const Eigen::VectorXd step = xn - x;
      if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
      if (eval(xn, gn, fn)) {
        const double directional = g.dot(step);
        const double bound =
            (directional < 0.0) ? f + 1e-4 * directional : f;
        if (fn <= bound && fn < f) {
          accepted = true;
          break;
        }
        if (fn < f && ls == 59) {  // last resort: keep any improvement
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      history.emplace_back(s, y);
      if (history.size() > kHistory) history.pop_front();
    }
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
  }
  return {x, f};
}

}  // namespace

Hyperparameters optimize_hyperparameters(const Dataset& dataset, int restarts,
                                         std::uint64_t seed,
                                         const OptimizeOptions& options) {
  dataset.validate();
  if (restarts < 1) {
    throw std::invalid_argument("restarts must be at least 1");
  }

  const Eigen::Index dim = dataset.input_dim();
  const Eigen::Index n_out = dataset.output_dim();
  const Eigen::Index n_d = dataset.count();

  // Data-scale heuristics: lengthscales start at the per-dimension spread of
  // the inputs, variances at the mean square of the targets.
  Eigen::VectorXd input_std(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double mean = dataset.inputs.row(d).mean();
    const double var =
        (dataset.inputs.row(d).array() - mean).square().sum() /
        static_cast<double>(n_d);
    input_std[d] = std::sqrt(var);
    if (!(input_std[d] > 1e-12)) input_std[d] = 1.0;
  }
  Eigen::VectorXd target_ms(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    target_ms[i] = std::max(
        dataset.targets.col(i).squaredNorm() / static_cast<double>(n_d), 1e-8);
  }
  const double pooled_ms = target_ms.mean();

  ParamSpace space;
  space.dim = dim;
  space.n_out = n_out;
  Eigen::VectorXd center(space.size());
  space.lo.resize(space.size());
  space.hi.resize(space.size());
  center[0] = std::log(pooled_ms);
  space.lo[0] = std::log(1e-6 * pooled_ms);
  space.hi[0] = std::log(1e4 * pooled_ms);
  for (Eigen::Index d = 0; d < dim; ++d) {
    center[1 + d] = std::log(input_std[d]);
    space.lo[1 + d] = std::log(1e-3 * input_std[d]);
    space.hi[1 + d] = std::log(1e3 * input_std[d]);
  }
  for (Eigen::Index i = 0; i < n_out; ++i) {
    center[1 + dim + i] = std::log(1e-2 * target_ms[i]);
    space.lo[1 + dim + i] = std::log(1e-6 * target_ms[i]);
    space.hi[1 + dim + i] = std::log(1e2 * target_ms[i]);
  }

  // Restart 0 is the heuristic center; later restarts scatter log-uniform
  // multipliers in [1e-2, 1e2] around it. Starts are drawn up front so the
  // result is a pure function of the seed.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(std::log(1e-2), std::log(1e2));
  std::vector<Eigen::VectorXd> starts;
  starts.reserve(static_cast<std::size_t>(restarts));
  starts.push_back(space.clamp(center));
  for (int r = 1; r < restarts; ++r) {
    Eigen::VectorXd x = center;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += offset(rng);
    starts.push_back(space.clamp(std::move(x)));
  }

  bool any_success = false;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (const auto& x0 : starts) {
    const LbfgsOutcome outcome = lbfgs_minimize(dataset, space, x0, options);
    if (!std::isfinite(outcome.f)) continue;
    any_success = true;
    if (outcome.f < best_f) {
      best_f = outcome.f;
      best_x = outcome.x;
    }
  }
  if (!any_success) {
    throw OptimizationError(
        "all hyperparameter restarts failed to factorize the kernel");
  }
  return space.unpack(best_x);
}

}  // namespace softctrl
