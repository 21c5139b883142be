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

#ifndef PILAMBDA_EVALUATION_HPP
#define PILAMBDA_EVALUATION_HPP

#include "pilambda/characteristics.hpp"
#include "pilambda/control_problem.hpp"
#include "pilambda/parallel.hpp"
#include "pilambda/value_model.hpp"

#include <cstdint>
#include <numbers>
#include <vector>

namespace pilambda {

/// Mean over `n_points` seeded uniform samples in `box` of
/// |ρΦ̂(x) − g(x, a*)·∇Φ̂(x) − l(x, a*)| with a* the greedy control.
/// Returns +inf when the model produces a non-finite value anywhere.
double hjb_residual(const ControlProblem& problem, const ValueModel& model, int n_points, const Box& box,
                    std::uint64_t seed, const Parallelism& par = {1});

/// Same metric on explicit sample points.
double hjb_residual(const ControlProblem& problem, const ValueModel& model, const std::vector<StateVec>& points,
                    const Parallelism& par = {1});

struct RollupSettings {
  double sim_step = 0.01;
  double duration = 20.0;
  double required_upright = 10.0;
  double angle_limit = std::numbers::pi / 4.0;
  double position_limit = 10.0;
  int grid = 10;
  /// Require one unbroken upright stretch instead of cumulative upright time.
  bool consecutive = false;
  double blowup_bound = 1e6;
};

/// Outcome of one closed-loop run from a grid initial state.
struct RollupRun {
  double omega0 = 0.0;
  double psi0 = 0.0;
  double upright_time = 0.0;
  bool position_ok = true;
  bool success = false;
};

/// Simulates one closed-loop cart-pole run with zero-order hold on the policy.
RollupRun simulate_rollup(const ControlProblem& cartpole, const Policy& policy, double omega0, double psi0,
                          const RollupSettings& settings);

/// Number of successful roll-ups (0–100 for the default 10×10 grid) from
/// (ω₀, ψ₀, 0, 0) over the grid of [−2π, 2π) × [−π, π).
int rollup_score(const ControlProblem& cartpole, const Policy& policy, const RollupSettings& settings = {},
                 const Parallelism& par = {1});
int rollup_score(const ControlProblem& cartpole, const ValueModel& model, const RollupSettings& settings = {},
                 const Parallelism& par = {1});

/// Growth and convexity constants of the standing assumption on (g, l).
struct AssumptionConstants {
  double g_bar = 1.0;
  double g2_bar = 1.0;
  double l_bar = 1.0;
  double l1_bar = 1.0;
  double l2_bar = 1.0;
  double c0 = 0.0;
  double c_s = 1.0;
  double c_bar = 1.0;

  void validate() const;
};

/// Uniform bounds on the iterates and the discount thresholds for boundedness
/// (rho1) and contraction (rho2).
struct BoundReport {
  AssumptionConstants constants;
  double alpha = 2.0;
  double C1 = 0.0;  // bound on ā (control growth)
  double C2 = 0.0;  // bound on ā′ (control Lipschitz)
  double C3 = 0.0;  // bound on λ̄ (value-gradient growth)
  double C4 = 0.0;  // bound on λ̄′ (value-gradient Lipschitz)
  double rho1 = 0.0;
  double rho2 = 0.0;

  /// Contraction factor of the weighted gradient gap at discount ρ.
  /// Throws BoundInapplicable when its denominator is not positive.
  double eta(double rho) const;
};

BoundReport theory_bounds(const AssumptionConstants& c, double alpha);

/// (λ̄, λ̄′, ā, ā′) at one policy iteration.
struct BoundState {
  double lam = 0.0;
  double lam_prime = 0.0;
  double a = 0.0;
  double a_prime = 0.0;
};

/// State whose control bounds are induced by (λ̄, λ̄′) through the minimizer.
BoundState induced_bound_state(const AssumptionConstants& c, double lam, double lam_prime);

/// One step of the bound recurrences. Throws BoundInapplicable if ρ does not
/// exceed the growth rate of the current iterate.
BoundState bound_recurrence_step(const AssumptionConstants& c, double rho, const BoundState& s);

/// Mean over probes of ‖∇Φ̂_a(x) − ∇Φ̂_b(x)‖² / (1 + ‖x‖²)^{2α}.
double weighted_gradient_gap(const ValueModel& a, const ValueModel& b, const std::vector<StateVec>& probes,
                             double alpha);

}  // namespace pilambda

#endif  // PILAMBDA_EVALUATION_HPP
