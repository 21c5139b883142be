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

#ifndef PILAMBDA_TRAINING_HPP
#define PILAMBDA_TRAINING_HPP

#include "pilambda/characteristics.hpp"
#include "pilambda/parallel.hpp"
#include "pilambda/value_model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pilambda {

struct TrainConfig {
  double mu = 0.5;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_steps = 1000;
  double loss_tol = 1e-10;

  void validate() const;
};

struct AdamState {
  ParamVec m;
  ParamVec v;
  long t = 0;

  static AdamState zeros(Eigen::Index n) { return {ParamVec::Zero(n), ParamVec::Zero(n), 0}; }
};

/// μ Σ (φ − Φ̂(x))² + (1 − μ) Σ ‖λ − ∇Φ̂(x)‖², summed over points in order.
double loss(const ValueModel& model, const std::vector<LabeledPoint>& points, double mu,
            const Parallelism& par = {1});

/// Exact gradient of `loss` with respect to the parameter vector.
ParamVec loss_gradient(const ValueModel& model, const std::vector<LabeledPoint>& points, double mu,
                       const Parallelism& par = {1});

/// One bias-corrected ADAM update of `theta` in place.
void adam_step(ParamVec& theta, const ParamVec& grad, AdamState& state, const TrainConfig& config);

struct TrainResult {
  ValueModel model;
  double final_loss = 0.0;
  int steps_taken = 0;
};

/// Non-finite loss or gradient during training.
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(const std::string& what, ValueModel last_finite)
      : std::runtime_error(what), last_finite_(std::move(last_finite)) {}
  const ValueModel& last_finite() const { return last_finite_; }

 private:
  ValueModel last_finite_;
};

/// Called with (step, loss) before each update and once after the last one.
using LossTrace = std::function<void(int, double)>;

/**
 * Full-batch ADAM on the μ-weighted loss. Stops after `max_steps` updates or
 * as soon as the loss is at most `loss_tol`. `adam` carries optimizer state
 * across calls when provided; otherwise a fresh state is used.
 */
TrainResult train(ValueModel model, const std::vector<LabeledPoint>& points, const TrainConfig& config,
                  const Parallelism& par = {1}, AdamState* adam = nullptr, const LossTrace& trace = {});

}  // namespace pilambda

#endif  // PILAMBDA_TRAINING_HPP
