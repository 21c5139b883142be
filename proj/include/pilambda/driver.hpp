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

#ifndef PILAMBDA_DRIVER_HPP
#define PILAMBDA_DRIVER_HPP

#include "pilambda/characteristics.hpp"
#include "pilambda/control_problem.hpp"
#include "pilambda/evaluation.hpp"
#include "pilambda/parallel.hpp"
#include "pilambda/training.hpp"
#include "pilambda/value_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pilambda {

struct PiConfig {
  int n_trajectories = 10;
  int n_iterations = 30;
  /// Initial states are drawn uniformly here; it is also the default training filter.
  Box domain_box;
  /// Keep only labeled points inside `filter_box` (or `domain_box` when unset).
  bool filter_points = true;
  std::optional<Box> filter_box;
  std::uint64_t seed = 0;
  TrainConfig train;
  /// Reuse ADAM moments across policy iterations instead of resetting them.
  bool carry_adam_state = false;
  CharacteristicSettings characteristics;
  /// Arc-length spacing of training points; <= 0 selects domain diameter / 50.
  double spacing = 0.0;
  double divergence_threshold = 1e3;
  /// Draw fresh initial states every iteration (keyed on the iteration index).
  bool resample_each_iteration = true;
  int residual_points = 10000;
  std::uint64_t residual_seed = 20240611;
  /// Summary statistics average the last `summary_window` completed iterations.
  int summary_window = 20;
  /// Cart-pole roll-up counting on iterations inside the summary window.
  std::optional<RollupSettings> rollup;
  /// When positive, the weighted gradient gap between successive iterates is
  /// recorded on this many seeded probe points.
  int probe_points = 0;
  double gap_alpha = 2.0;
  std::uint64_t probe_seed = 4096;
  Parallelism par;

  void validate(const ControlProblem& problem) const;
  double effective_spacing() const;
};

struct IterationRecord {
  int iteration = 0;
  double hjb_residual = 0.0;
  double train_loss = 0.0;
  int train_steps = 0;
  int points_used = 0;
  int trajectories_used = 0;
  bool diverged = false;
  std::optional<double> rollup_count;
  std::optional<double> gradient_gap;
};

/// x ↦ argmin_a H(x, ∇Φ̂(x), a). The returned closure references `problem`
/// and `model`, which must outlive it.
Policy greedy_policy(const ControlProblem& problem, const ValueModel& model);

/// Seeded initial states of iteration `iteration`; the stream is keyed on
/// (N, seed, iteration) only, so it is shared across μ and training budgets.
std::vector<StateVec> initial_states(const PiConfig& config, int iteration);

/// Labels from one characteristic, already resampled and box-filtered.
struct TrajectoryLabels {
  std::vector<LabeledPoint> points;
  bool diverged = false;
};

TrajectoryLabels label_characteristic(const ControlProblem& problem, const ValueModel& model, const StateVec& x0,
                                      const PiConfig& config);

struct IterationOutcome {
  ValueModel model;
  IterationRecord record;
};

/// One PI-lambda step: roll characteristics under the greedy policy of
/// `model`, label Φ and λ, train, and measure the new model.
IterationOutcome run_iteration(const ControlProblem& problem, const ValueModel& model, const PiConfig& config,
                               int iteration, AdamState* adam = nullptr);

struct PiResult {
  ValueModel model;
  std::vector<IterationRecord> records;
  bool diverged = false;
  /// Mean residual over the last min(summary_window, completed) iterations.
  double mean_residual = 0.0;
  std::optional<double> mean_rollups;
};

using RecordCallback = std::function<void(const IterationRecord&, const ValueModel&)>;

/// K iterations of PI-lambda; stops at the first diverged iteration.
PiResult run_pi_lambda(const ControlProblem& problem, ValueModel initial_model, const PiConfig& config,
                       const RecordCallback& on_record = {});

/// Recomputes the summary fields of `result` from its records.
void summarize(PiResult& result, int window);

}  // namespace pilambda

#endif  // PILAMBDA_DRIVER_HPP
