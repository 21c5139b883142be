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

#ifndef PILAMBDA_CONTROL_PROBLEM_HPP
#define PILAMBDA_CONTROL_PROBLEM_HPP

#include "pilambda/common.hpp"

#include <functional>
#include <string>

namespace pilambda {

enum class Sense { Minimize, Maximize };

/**
 * Infinite-horizon discounted deterministic control problem
 *
 *   min  ∫ e^{-ρt} l(x, a) dt   subject to  ẋ = g(x, a),  a ∈ [lower, upper].
 *
 * Dynamics are affine in the control, g(x, a) = g(x, 0) + C(x) a, with
 * C = dynamics_jacobian_control. The running cost is separable-quadratic in
 * the control: l(x, a) = l(x, 0) + ∇_a l(x, 0)·a + ½ Σ_j r_j a_j², where
 * r = control_curvature (r_j = 0 makes component j enter linearly). These two
 * structural facts make the Hamiltonian minimizer closed-form.
 *
 * Maximization problems store the negated reward in `cost`; `sense` records
 * the sign for reporting.
 */
struct ControlProblem {
  using VecFn = std::function<Eigen::VectorXd(const StateVec&, const ControlVec&)>;
  using MatFn = std::function<Matrix(const StateVec&, const ControlVec&)>;
  using ScalarFn = std::function<double(const StateVec&, const ControlVec&)>;

  std::string name;
  int dim_state = 0;
  int dim_control = 0;
  double discount = 1.0;
  Sense sense = Sense::Minimize;
  Eigen::VectorXd control_lower;
  Eigen::VectorXd control_upper;
  Eigen::VectorXd control_curvature;

  VecFn dynamics;
  MatFn dynamics_jacobian_state;
  std::function<Matrix(const StateVec&)> dynamics_jacobian_control;
  ScalarFn cost;
  VecFn cost_grad_state;
  VecFn cost_grad_control;

  /// Optional canonicalization applied after each integration step (angle wrapping).
  std::function<void(StateVec&)> wrap_state;

  /// Throws ContractViolation if sizes or bounds are inconsistent.
  void validate() const;

  /// Converts an internal (minimization) value to the problem's own sign.
  double reported(double internal_value) const {
    return sense == Sense::Maximize ? -internal_value : internal_value;
  }
};

/// g(x, a) with dimension checks.
StateVec evaluate_dynamics(const ControlProblem& problem, const StateVec& x, const ControlVec& a);

/// H(x, λ, a) = g(x, a)·λ + l(x, a).
double hamiltonian(const ControlProblem& problem, const StateVec& x, const StateVec& lam,
                   const ControlVec& a);

/// Admissible argmin over a of H(x, λ, a).
///
/// Curved components are solved by the first-order condition and clipped to
/// the box; linear components are bang-bang. A linear component whose
/// coefficient is exactly zero takes the admissible value closest to 0.
ControlVec minimize_hamiltonian(const ControlProblem& problem, const StateVec& x,
                                const StateVec& lam);

/// Clip `a` into the admissible box.
ControlVec clip_control(const ControlProblem& problem, ControlVec a);

}  // namespace pilambda

#endif  // PILAMBDA_CONTROL_PROBLEM_HPP
