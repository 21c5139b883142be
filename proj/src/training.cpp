/*
 Copyright 2026 The pilambda Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "pilambda/training.hpp"

#include <cmath>

namespace pilambda {

void TrainConfig::validate() const {
  require(mu >= 0.0 && mu <= 1.0, "train: mu must lie in [0, 1]");
  require(learning_rate > 0.0, "train: learning_rate must be positive");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, "train: betas must lie in (0, 1)");
  require(epsilon > 0.0, "train: epsilon must be positive");
  require(max_steps >= 0, "train: max_steps must be nonnegative");
  require(loss_tol >= 0.0, "train: loss_tol must be nonnegative");
}

namespace {

// Points are reduced in fixed blocks whose boundaries do not depend on the
// worker count; blocks are then summed in index order.
constexpr std::size_t kBlock = 32;

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

void check_points(const ValueModel& model, const std::vector<LabeledPoint>& points, double mu) {
  require(!points.empty(), "loss: no labeled points");
  require(mu >= 0.0 && mu <= 1.0, "loss: mu must lie in [0, 1]");
  const int d = model_dim_state(model);
  for (const auto& p : points) {
    require_dim(p.x.size(), d, "loss point");
    require_dim(p.lam.size(), d, "loss gradient label");
  }
}

struct LossParts {
  double value = 0.0;
  double gradient = 0.0;
};

}  // namespace

double loss(const ValueModel& model, const std::vector<LabeledPoint>& points, double mu, const Parallelism& par) {
  check_points(model, points, mu);
  const auto blocks = parallel_map<LossParts>(block_count(points.size()), par, [&](std::size_t b) {
    LossParts part;
    const std::size_t end = std::min(points.size(), (b + 1) * kBlock);
    double v = 0.0;
    StateVec g;
    for (std::size_t k = b * kBlock; k < end; ++k) {
      const auto& p = points[k];
      eval_value_and_gradient(model, p.x, v, g);
      part.value += (p.phi - v) * (p.phi - v);
      part.gradient += (p.lam - g).squaredNorm();
    }
    return part;
  });
  LossParts total;
  for (const auto& part : blocks) {
    total.value += part.value;
    total.gradient += part.gradient;
  }
  return mu * total.value + (1.0 - mu) * total.gradient;
}

ParamVec loss_gradient(const ValueModel& model, const std::vector<LabeledPoint>& points, double mu,
                       const Parallelism& par) {
  check_points(model, points, mu);
  const Eigen::Index n_params = param_count(model);
  const auto blocks = parallel_map<ParamVec>(block_count(points.size()), par, [&](std::size_t b) {
    ParamVec acc = ParamVec::Zero(n_params);
    const std::size_t end = std::min(points.size(), (b + 1) * kBlock);
    double v = 0.0;
    StateVec g;
    for (std::size_t k = b * kBlock; k < end; ++k) {
      const auto& p = points[k];
      eval_value_and_gradient(model, p.x, v, g);
      const double w_value = 2.0 * mu * (v - p.phi);
      const StateVec w_grad = 2.0 * (1.0 - mu) * (g - p.lam);
      accumulate_param_vjp(model, p.x, w_value, w_grad, acc);
    }
    return acc;
  });
  ParamVec total = ParamVec::Zero(n_params);
  for (const auto& block : blocks) total += block;
  return total;
}

void adam_step(ParamVec& theta, const ParamVec& grad, AdamState& state, const TrainConfig& config) {
  require(theta.size() == grad.size() && state.m.size() == theta.size() && state.v.size() == theta.size(),
          "adam_step: size mismatch");
  state.t += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double m_corr = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double v_corr = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double m_hat = state.m[k] / m_corr;
    const double v_hat = state.v[k] / v_corr;
    theta[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

TrainResult train(ValueModel model, const std::vector<LabeledPoint>& points, const TrainConfig& config,
                  const Parallelism& par, AdamState* adam, const LossTrace& trace) {
  config.validate();
  const Eigen::Index n_params = param_count(model);
  AdamState local;
  AdamState& st = adam != nullptr ? *adam : local;
  if (st.m.size() != n_params) st = AdamState::zeros(n_params);

  for (int step = 0;; ++step) {
    const double current = loss(model, points, config.mu, par);
    if (!std::isfinite(current)) throw TrainingDivergence("non-finite training loss", model);
    if (trace) trace(step, current);
    if (current <= config.loss_tol || step == config.max_steps) return {std::move(model), current, step};

    const ParamVec grad = loss_gradient(model, points, config.mu, par);
    if (!grad.allFinite()) throw TrainingDivergence("non-finite loss gradient", model);
    ParamVec theta = get_params(model);
    adam_step(theta, grad, st, config);
    if (!theta.allFinite()) throw TrainingDivergence("non-finite parameters after ADAM step", model);
    set_params(model, theta);
  }
}

}  // namespace pilambda
