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

#include "pilambda/evaluation.hpp"

#include "pilambda/driver.hpp"
#include "pilambda/random.hpp"

#include <cmath>
#include <limits>

namespace pilambda {

// ------------------------------------------------------------- HJB residual

double hjb_residual(const ControlProblem& problem, const ValueModel& model, const std::vector<StateVec>& points,
                    const Parallelism& par) {
  require(!points.empty(), "hjb_residual: no sample points");
  require_dim(model_dim_state(model), problem.dim_state, "hjb_residual model");
  constexpr std::size_t block = 256;
  const std::size_t blocks = (points.size() + block - 1) / block;
  const auto sums = parallel_map<double>(blocks, par, [&](std::size_t b) {
    double s = 0.0;
    const std::size_t end = std::min(points.size(), (b + 1) * block);
    for (std::size_t k = b * block; k < end; ++k) {
      const StateVec& x = points[k];
      double v = 0.0;
      StateVec lam;
      eval_value_and_gradient(model, x, v, lam);
      if (!std::isfinite(v) || !lam.allFinite()) return std::numeric_limits<double>::infinity();
      const ControlVec a = minimize_hamiltonian(problem, x, lam);
      s += std::abs(problem.discount * v - problem.dynamics(x, a).dot(lam) - problem.cost(x, a));
    }
    return s;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(points.size());
}

double hjb_residual(const ControlProblem& problem, const ValueModel& model, int n_points, const Box& box,
                    std::uint64_t seed, const Parallelism& par) {
  require(n_points > 0, "hjb_residual: n_points must be positive");
  require_dim(box.dim(), problem.dim_state, "hjb_residual box");
  return hjb_residual(problem, model, sample_uniform(box, n_points, seed), par);
}

// ----------------------------------------------------------------- roll-ups

RollupRun simulate_rollup(const ControlProblem& cartpole, const Policy& policy, double omega0, double psi0,
                          const RollupSettings& settings) {
  require(cartpole.dim_state == 4 && cartpole.dim_control == 1, "rollup: problem is not the cart-pole");
  require(settings.sim_step > 0.0 && settings.duration > 0.0, "rollup: step and duration must be positive");

  RollupRun run;
  run.omega0 = omega0;
  run.psi0 = psi0;
  StateVec x(4);
  x << omega0, psi0, 0.0, 0.0;
  if (cartpole.wrap_state) cartpole.wrap_state(x);

  const double h = settings.sim_step;
  const auto steps = static_cast<long>(std::llround(settings.duration / h));
  double cumulative = 0.0, stretch = 0.0, longest = 0.0;
  bool blew_up = false;
  for (long n = 0; n <= steps; ++n) {
    if (std::abs(x[3]) >= settings.position_limit) run.position_ok = false;
    if (n == steps) break;
    if (std::abs(x[1]) < settings.angle_limit) {
      cumulative += h;
      stretch += h;
      longest = std::max(longest, stretch);
    } else {
      stretch = 0.0;
    }
    // Zero-order hold: the force is fixed over the step.
    const ControlVec a = policy(x);
    auto f = [&](const StateVec& s) -> StateVec { return cartpole.dynamics(s, a); };
    const StateVec k1 = f(x);
    const StateVec k2 = f(x + 0.5 * h * k1);
    const StateVec k3 = f(x + 0.5 * h * k2);
    const StateVec k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > settings.blowup_bound) {
      blew_up = true;
      break;
    }
    if (cartpole.wrap_state) cartpole.wrap_state(x);
  }
  run.upright_time = settings.consecutive ? longest : cumulative;
  run.success = !blew_up && run.position_ok && run.upright_time >= settings.required_upright - 1e-9;
  return run;
}

int rollup_score(const ControlProblem& cartpole, const Policy& policy, const RollupSettings& settings,
                 const Parallelism& par) {
  require(settings.grid > 0, "rollup: grid must be positive");
  constexpr double pi = std::numbers::pi;
  const auto g = static_cast<std::size_t>(settings.grid);
  const auto runs = parallel_map<int>(g * g, par, [&](std::size_t k) {
    const double omega0 = -2.0 * pi + 4.0 * pi * static_cast<double>(k / g) / static_cast<double>(g);
    const double psi0 = -pi + 2.0 * pi * static_cast<double>(k % g) / static_cast<double>(g);
    return simulate_rollup(cartpole, policy, omega0, psi0, settings).success ? 1 : 0;
  });
  int count = 0;
  for (int r : runs) count += r;
  return count;
}

int rollup_score(const ControlProblem& cartpole, const ValueModel& model, const RollupSettings& settings,
                 const Parallelism& par) {
  return rollup_score(cartpole, greedy_policy(cartpole, model), settings, par);
}

// ------------------------------------------------------------ theory bounds

void AssumptionConstants::validate() const {
  for (double v : {g_bar, g2_bar, l_bar, l1_bar, l2_bar, c0, c_s, c_bar}) {
    require(std::isfinite(v) && v >= 0.0, "AssumptionConstants: constants must be finite and nonnegative");
  }
  require(g_bar > 0.0 && l1_bar > 0.0 && c_s > 0.0 && c_bar > 0.0,
          "AssumptionConstants: g_bar, l1_bar, c_s and c_bar must be positive");
}

double BoundReport::eta(double rho) const {
  const auto& c = constants;
  const double coupling = c.c_bar * c.c_bar * C4 / (2.0 * c.c_s) + 0.5 * c.l2_bar + 0.5 * c.g_bar;
  const double advection = c.g_bar + c.c_bar * C2 + 5.0 * alpha * c.g_bar * (1.0 + C1);
  const double denom = rho - advection - coupling;
  if (!(denom > 0.0)) throw BoundInapplicable("contraction factor undefined: discount too small");
  return coupling / denom;
}

BoundReport theory_bounds(const AssumptionConstants& c, double alpha) {
  c.validate();
  require(alpha > 1.0, "theory_bounds: alpha must exceed 1");
  const double g = c.g_bar, g2 = c.g2_bar, l = c.l_bar, l1 = c.l1_bar, l2 = c.l2_bar;
  const double c0 = c.c0, cs = c.c_s, cb = c.c_bar;

  BoundReport r;
  r.constants = c;
  r.alpha = alpha;
  const double inner = std::sqrt(cs * (l * l + c0 * l) / g);
  r.C1 = std::sqrt(cb * l * (1.0 + c0 / l1) / (g * l1)) + c0 / l1;
  r.C2 = (l2 + std::sqrt(cs * l2 + l2 * l2 + g2 * inner)) / cs;
  r.C3 = std::sqrt(l1 * l * (1.0 + c0 / l1) / (g * cb));
  r.C4 = std::sqrt(cs * l2 + l2 * l2 + g2 * inner) / cb;

  r.rho1 = g * (1.0 + r.C1) + cb * r.C2 + 2.0 * g + g * c0 / l1 + l * cb / l1 +
           2.0 * std::sqrt(l * (1.0 + c0 / l1) * g * cb / l1) + 2.0 * cb * l2 / cs +
           2.0 * std::sqrt((l2 + l2 * l2 / cs + g2 * std::sqrt((l * l + c0 * l) / (g * cs))) * cb * cb / cs);
  const double contraction = 2.0 * g + cb * r.C2 + 5.0 * alpha * g * (1.0 + r.C1) + cb * cb * r.C4 / cs + l2;
  r.rho2 = std::max(r.rho1, contraction);
  return r;
}

BoundState induced_bound_state(const AssumptionConstants& c, double lam, double lam_prime) {
  return {lam, lam_prime, (c.c_bar * lam + c.c0) / c.l1_bar, (c.l2_bar + c.c_bar * lam_prime) / c.c_s};
}

BoundState bound_recurrence_step(const AssumptionConstants& c, double rho, const BoundState& s) {
  const double growth = rho - c.g_bar * (1.0 + s.a);
  const double lipschitz = rho - (c.g_bar + c.c_bar * s.a_prime);
  if (!(growth > 0.0) || !(lipschitz > 0.0)) {
    throw BoundInapplicable("bound recurrence undefined: discount does not dominate the iterate's growth");
  }
  BoundState next;
  next.lam = (c.l_bar + c.l_bar * s.a + c.g_bar * s.lam) / growth;
  next.lam_prime = (c.l2_bar + c.l2_bar * s.a_prime + c.g2_bar * s.lam + c.g_bar * s.lam_prime) / lipschitz;
  next.a = (c.c_bar * next.lam + c.c0) / c.l1_bar;
  next.a_prime = (c.l2_bar + c.c_bar * next.lam_prime) / c.c_s;
  return next;
}

// ------------------------------------------------------------ gradient gap

double weighted_gradient_gap(const ValueModel& a, const ValueModel& b, const std::vector<StateVec>& probes,
                             double alpha) {
  require(!probes.empty(), "weighted_gradient_gap: no probe points");
  require(alpha > 1.0, "weighted_gradient_gap: alpha must exceed 1");
  double total = 0.0;
  for (const auto& x : probes) {
    const double diff = (eval_state_gradient(a, x) - eval_state_gradient(b, x)).squaredNorm();
    total += diff / std::pow(1.0 + x.squaredNorm(), 2.0 * alpha);
  }
  return total / static_cast<double>(probes.size());
}

}  // namespace pilambda
