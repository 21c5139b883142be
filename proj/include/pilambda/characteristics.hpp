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

#ifndef PILAMBDA_CHARACTERISTICS_HPP
#define PILAMBDA_CHARACTERISTICS_HPP

#include "pilambda/common.hpp"
#include "pilambda/control_problem.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace pilambda {

using Policy = std::function<ControlVec(const StateVec&)>;
using GradientField = std::function<StateVec(const StateVec&)>;

/// Samples of one characteristic curve ẋ = g(x, a(x)).
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;
  std::vector<double> costs;
  std::vector<double> arclens;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// A training observation: state with value and value-gradient labels.
struct LabeledPoint {
  StateVec x;
  double phi = 0.0;
  StateVec lam;
};

struct CharacteristicSettings {
  double step = 0.01;
  double trunc_tol = 1e-6;
  double t_max = 100.0;
  double blowup_bound = 1e6;

  void validate() const;
};

/// Thrown when ‖x‖ exceeds the blow-up bound or becomes non-finite.
class TrajectoryDivergence : public std::runtime_error {
 public:
  TrajectoryDivergence(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/**
 * Integrates the characteristic from x0 with classical fixed-step RK4,
 * re-evaluating the policy at every stage. Stops at the first sample time T
 * with e^{-ρT}(1 + ‖x(T)‖ + ‖λ̂(x(T))‖) < trunc_tol, or at t_max.
 *
 * `gradient_probe` is λ̂ for the truncation test; an empty function counts as 0.
 */
Trajectory integrate_characteristic(const ControlProblem& problem, const Policy& policy, const StateVec& x0,
                                    const CharacteristicSettings& settings,
                                    const GradientField& gradient_probe = {});

/// Discounted tail integrals I_j = ∫_{t_j}^∞ e^{-ρ(τ−t_j)} f(τ) dτ of a sampled
/// integrand, using the exponentially weighted trapezoid on each interval and
/// the constant tail f_last/ρ beyond the last sample.
std::vector<double> discounted_tail_integrals(const std::vector<double>& times, const std::vector<double>& f,
                                              double discount);

/// Φ labels: discounted tail integrals of the running cost.
std::vector<double> label_value(const ControlProblem& problem, const Trajectory& traj);

/// λ labels: for each component i, discounted tail integral of
/// r_i = Σ_n ∂g_n/∂x_i λ_prev,n + ∂l/∂x_i evaluated along the trajectory.
std::vector<StateVec> label_gradient(const ControlProblem& problem, const GradientField& prev_lambda,
                                     const Trajectory& traj);

/// Keeps the first sample and then each sample whose arc length is at least
/// `spacing` past the previously kept one. Labels travel with their sample.
std::vector<LabeledPoint> resample_arclength(const Trajectory& traj, const std::vector<double>& labels_phi,
                                             const std::vector<StateVec>& labels_lam, double spacing);

/// Points with every coordinate inside the closed box.
std::vector<LabeledPoint> filter_box(const std::vector<LabeledPoint>& points, const Box& box);

/// CSV dump: t, x..., a..., l, arclen, phi, lam...
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<double>& phi,
                          const std::vector<StateVec>& lam);

}  // namespace pilambda

#endif  // PILAMBDA_CHARACTERISTICS_HPP
