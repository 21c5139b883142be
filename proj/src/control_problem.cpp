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

#include "pilambda/control_problem.hpp"

#include <algorithm>
#include <cmath>

namespace pilambda {

bool Box::contains(const StateVec& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

void Box::validate(const std::string& what) const {
  require(lower.size() == upper.size() && lower.size() > 0, what + ": box bounds must be nonempty and equal length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    require(std::isfinite(lower[i]) && std::isfinite(upper[i]), what + ": box bounds must be finite");
    require(lower[i] <= upper[i], what + ": box lower bound exceeds upper bound");
  }
}

void ControlProblem::validate() const {
  require(dim_state > 0 && dim_control > 0, name + ": dimensions must be positive");
  require(discount > 0.0 && std::isfinite(discount), name + ": discount must be positive");
  require_dim(control_lower.size(), dim_control, "control_lower");
  require_dim(control_upper.size(), dim_control, "control_upper");
  require_dim(control_curvature.size(), dim_control, "control_curvature");
  for (int j = 0; j < dim_control; ++j) {
    require(control_lower[j] <= control_upper[j], name + ": inconsistent control bounds");
    require(control_curvature[j] >= 0.0, name + ": control curvature must be nonnegative");
    if (control_curvature[j] == 0.0) {
      require(std::isfinite(control_lower[j]) && std::isfinite(control_upper[j]),
              name + ": a control entering linearly needs finite bounds");
    }
  }
  require(dynamics && dynamics_jacobian_state && dynamics_jacobian_control && cost &&
              cost_grad_state && cost_grad_control,
          name + ": missing problem callback");
}

StateVec evaluate_dynamics(const ControlProblem& problem, const StateVec& x, const ControlVec& a) {
  require_dim(x.size(), problem.dim_state, "evaluate_dynamics state");
  require_dim(a.size(), problem.dim_control, "evaluate_dynamics control");
  return problem.dynamics(x, a);
}

double hamiltonian(const ControlProblem& problem, const StateVec& x, const StateVec& lam,
                   const ControlVec& a) {
  require_dim(lam.size(), problem.dim_state, "hamiltonian costate");
  return evaluate_dynamics(problem, x, a).dot(lam) + problem.cost(x, a);
}

ControlVec clip_control(const ControlProblem& problem, ControlVec a) {
  for (int j = 0; j < problem.dim_control; ++j) {
    a[j] = std::clamp(a[j], problem.control_lower[j], problem.control_upper[j]);
  }
  return a;
}

ControlVec minimize_hamiltonian(const ControlProblem& problem, const StateVec& x,
                                const StateVec& lam) {
  require_dim(x.size(), problem.dim_state, "minimize_hamiltonian state");
  require_dim(lam.size(), problem.dim_state, "minimize_hamiltonian costate");

  const int p = problem.dim_control;
  const ControlVec zero = ControlVec::Zero(p);
  // Linear coefficient of H in a: C(x)ᵀλ + ∇_a l(x, 0).
  const Eigen::VectorXd coeff =
      problem.dynamics_jacobian_control(x).transpose() * lam + problem.cost_grad_control(x, zero);

  ControlVec a(p);
  for (int j = 0; j < p; ++j) {
    const double lo = problem.control_lower[j];
    const double hi = problem.control_upper[j];
    const double r = problem.control_curvature[j];
    if (r > 0.0) {
      a[j] = std::clamp(-coeff[j] / r, lo, hi);
    } else if (coeff[j] > 0.0) {
      a[j] = lo;
    } else if (coeff[j] < 0.0) {
      a[j] = hi;
    } else {
      a[j] = std::clamp(0.0, lo, hi);
    }
  }
  return a;
}

}  // namespace pilambda
