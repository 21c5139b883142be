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

#include "pilambda/driver.hpp"

#include "pilambda/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pilambda {

void PiConfig::validate(const ControlProblem& problem) const {
  require(n_trajectories > 0, "config: n_trajectories must be positive");
  require(n_iterations > 0, "config: n_iterations must be positive");
  domain_box.validate("config.domain_box");
  require_dim(domain_box.dim(), problem.dim_state, "config.domain_box");
  if (filter_box) {
    filter_box->validate("config.filter_box");
    require_dim(filter_box->dim(), problem.dim_state, "config.filter_box");
  }
  train.validate();
  characteristics.validate();
  require(std::isfinite(spacing), "config: spacing must be finite");
  require(divergence_threshold > 0.0, "config: divergence_threshold must be positive");
  require(residual_points > 0, "config: residual_points must be positive");
  require(summary_window > 0, "config: summary_window must be positive");
  require(probe_points >= 0, "config: probe_points must be nonnegative");
  require(gap_alpha > 1.0, "config: gap_alpha must exceed 1");
  if (rollup) {
    require(problem.dim_state == 4 && problem.dim_control == 1, "config: roll-ups need the cart-pole problem");
  }
}

double PiConfig::effective_spacing() const { return spacing > 0.0 ? spacing : domain_box.diameter() / 50.0; }

Policy greedy_policy(const ControlProblem& problem, const ValueModel& model) {
  require_dim(model_dim_state(model), problem.dim_state, "greedy_policy model");
  return [&problem, &model](const StateVec& x) {
    return minimize_hamiltonian(problem, x, eval_state_gradient(model, x));
  };
}

std::vector<StateVec> initial_states(const PiConfig& config, int iteration) {
  const int key = config.resample_each_iteration ? iteration : 0;
  const auto seed = substream_seed(config.seed, {static_cast<std::uint64_t>(config.n_trajectories),
                                                 static_cast<std::uint64_t>(key)});
  return sample_uniform(config.domain_box, config.n_trajectories, seed);
}

TrajectoryLabels label_characteristic(const ControlProblem& problem, const ValueModel& model, const StateVec& x0,
                                      const PiConfig& config) {
  const Policy policy = greedy_policy(problem, model);
  const GradientField lambda = [&model](const StateVec& x) { return eval_state_gradient(model, x); };
  TrajectoryLabels out;
  Trajectory traj;
  try {
    traj = integrate_characteristic(problem, policy, x0, config.characteristics, lambda);
  } catch (const TrajectoryDivergence&) {
    out.diverged = true;
    return out;
  }
  const auto phi = label_value(problem, traj);
  const auto lam = label_gradient(problem, lambda, traj);
  out.points = resample_arclength(traj, phi, lam, config.effective_spacing());
  if (config.filter_points) out.points = filter_box(out.points, config.filter_box.value_or(config.domain_box));
  return out;
}

IterationOutcome run_iteration(const ControlProblem& problem, const ValueModel& model, const PiConfig& config,
                               int iteration, AdamState* adam) {
  config.validate(problem);
  IterationOutcome outcome{model, {}};
  IterationRecord& rec = outcome.record;
  rec.iteration = iteration;

  const auto starts = initial_states(config, iteration);
  const auto labeled = parallel_map<TrajectoryLabels>(starts.size(), config.par, [&](std::size_t k) {
    return label_characteristic(problem, model, starts[k], config);
  });

  std::vector<LabeledPoint> pooled;
  for (const auto& t : labeled) {
    if (t.diverged) continue;
    ++rec.trajectories_used;
    pooled.insert(pooled.end(), t.points.begin(), t.points.end());
  }
  rec.points_used = static_cast<int>(pooled.size());
  if (pooled.empty()) {
    rec.diverged = true;
    rec.hjb_residual = std::numeric_limits<double>::infinity();
    rec.train_loss = std::numeric_limits<double>::quiet_NaN();
    return outcome;
  }

  try {
    auto trained = train(model, pooled, config.train, config.par, adam);
    outcome.model = std::move(trained.model);
    rec.train_loss = trained.final_loss;
    rec.train_steps = trained.steps_taken;
  } catch (const TrainingDivergence& e) {
    outcome.model = e.last_finite();
    rec.diverged = true;
    rec.train_loss = std::numeric_limits<double>::infinity();
    rec.hjb_residual = std::numeric_limits<double>::infinity();
    return outcome;
  }

  rec.hjb_residual = hjb_residual(problem, outcome.model, config.residual_points, config.domain_box,
                                  config.residual_seed, config.par);
  if (!std::isfinite(rec.hjb_residual) || rec.hjb_residual > config.divergence_threshold) rec.diverged = true;
  return outcome;
}

PiResult run_pi_lambda(const ControlProblem& problem, ValueModel initial_model, const PiConfig& config,
                       const RecordCallback& on_record) {
  config.validate(problem);
  PiResult result{std::move(initial_model), {}, false, 0.0, std::nullopt};
  AdamState adam;
  std::vector<StateVec> probes;
  if (config.probe_points > 0) probes = sample_uniform(config.domain_box, config.probe_points, config.probe_seed);
  const int first_scored = std::max(1, config.n_iterations - config.summary_window + 1);

  for (int k = 1; k <= config.n_iterations; ++k) {
    auto outcome = run_iteration(problem, result.model, config, k, config.carry_adam_state ? &adam : nullptr);
    IterationRecord& rec = outcome.record;
    if (!rec.diverged) {
      if (!probes.empty()) rec.gradient_gap = weighted_gradient_gap(outcome.model, result.model, probes, config.gap_alpha);
      if (config.rollup && k >= first_scored) {
        rec.rollup_count = static_cast<double>(rollup_score(problem, outcome.model, *config.rollup, config.par));
      }
    }
    result.model = std::move(outcome.model);
    result.records.push_back(rec);
    if (on_record) on_record(rec, result.model);
    if (rec.diverged) break;
  }
  summarize(result, config.summary_window);
  return result;
}

void summarize(PiResult& result, int window) {
  require(window > 0, "summarize: window must be positive");
  result.diverged = std::any_of(result.records.begin(), result.records.end(),
                                [](const IterationRecord& r) { return r.diverged; });
  std::vector<const IterationRecord*> done;
  for (const auto& r : result.records) {
    if (!r.diverged) done.push_back(&r);
  }
  const std::size_t take = std::min(done.size(), static_cast<std::size_t>(window));
  if (take == 0) {
    result.mean_residual = std::numeric_limits<double>::infinity();
    result.mean_rollups.reset();
    return;
  }
  double residual = 0.0, rollups = 0.0;
  int rollup_count = 0;
  for (std::size_t i = done.size() - take; i < done.size(); ++i) {
    residual += done[i]->hjb_residual;
    if (done[i]->rollup_count) {
      rollups += *done[i]->rollup_count;
      ++rollup_count;
    }
  }
  result.mean_residual = residual / static_cast<double>(take);
  if (rollup_count > 0) {
    result.mean_rollups = rollups / rollup_count;
  } else {
    result.mean_rollups.reset();
  }
}

}  // namespace pilambda
