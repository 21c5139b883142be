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

#include "pilambda/characteristics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace pilambda {

void CharacteristicSettings::validate() const {
  require(step > 0.0 && std::isfinite(step), "characteristics: step must be positive");
  require(trunc_tol > 0.0, "characteristics: trunc_tol must be positive");
  require(t_max > 0.0, "characteristics: t_max must be positive");
  require(blowup_bound > 0.0, "characteristics: blowup_bound must be positive");
}

namespace {

void push_sample(Trajectory& traj, const ControlProblem& problem, const Policy& policy, double t,
                 const StateVec& x, double arclen) {
  ControlVec a = policy(x);
  traj.times.push_back(t);
  traj.costs.push_back(problem.cost(x, a));
  traj.states.push_back(x);
  traj.controls.push_back(std::move(a));
  traj.arclens.push_back(arclen);
}

bool truncated(const ControlProblem& problem, const GradientField& probe, double t, const StateVec& x,
               double tol) {
  double magnitude = 1.0 + x.norm();
  if (probe) magnitude += probe(x).norm();
  return std::exp(-problem.discount * t) * magnitude < tol;
}

}  // namespace

Trajectory integrate_characteristic(const ControlProblem& problem, const Policy& policy, const StateVec& x0,
                                    const CharacteristicSettings& settings, const GradientField& gradient_probe) {
  settings.validate();
  require_dim(x0.size(), problem.dim_state, "integrate_characteristic x0");
  require(static_cast<bool>(policy), "integrate_characteristic: empty policy");

  const double h = settings.step;
  auto field = [&](const StateVec& x) -> StateVec { return problem.dynamics(x, policy(x)); };

  Trajectory traj;
  StateVec x = x0;
  if (problem.wrap_state) problem.wrap_state(x);
  double arclen = 0.0;
  push_sample(traj, problem, policy, 0.0, x, arclen);

  const auto max_steps = static_cast<long>(std::ceil(settings.t_max / h - 1e-9));
  for (long n = 1; n <= max_steps; ++n) {
    const StateVec k1 = field(x);
    const StateVec k2 = field(x + 0.5 * h * k1);
    const StateVec k3 = field(x + 0.5 * h * k2);
    const StateVec k4 = field(x + h * k3);
    StateVec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!next.allFinite() || next.norm() > settings.blowup_bound) {
      throw TrajectoryDivergence("characteristic left the blow-up bound at t=" + std::to_string(n * h),
                                 std::move(traj));
    }
    arclen += (next - x).norm();
    if (problem.wrap_state) problem.wrap_state(next);
    x = std::move(next);

    const double t = static_cast<double>(n) * h;
    push_sample(traj, problem, policy, t, x, arclen);
    if (truncated(problem, gradient_probe, t, x, settings.trunc_tol)) break;
  }
  return traj;
}

std::vector<double> discounted_tail_integrals(const std::vector<double>& times, const std::vector<double>& f,
                                              double discount) {
  require(!times.empty(), "discounted_tail_integrals: empty trajectory");
  require(times.size() == f.size(), "discounted_tail_integrals: size mismatch");
  require(discount > 0.0, "discounted_tail_integrals: discount must be positive");

  const std::size_t n = times.size();
  std::vector<double> out(n);
  out[n - 1] = f[n - 1] / discount;
  for (std::size_t j = n - 1; j-- > 0;) {
    const double dt = times[j + 1] - times[j];
    const double decay = std::exp(-discount * dt);
    out[j] = 0.5 * (f[j] + decay * f[j + 1]) * dt + decay * out[j + 1];
  }
  return out;
}

std::vector<double> label_value(const ControlProblem& problem, const Trajectory& traj) {
  require(!traj.empty(), "label_value: empty trajectory");
  return discounted_tail_integrals(traj.times, traj.costs, problem.discount);
}

std::vector<StateVec> label_gradient(const ControlProblem& problem, const GradientField& prev_lambda,
                                     const Trajectory& traj) {
  require(!traj.empty(), "label_gradient: empty trajectory");
  const std::size_t n = traj.size();
  const int d = problem.dim_state;

  // Source r(τ) = D_x gᵀ λ_prev + ∇_x l at every sample.
  Matrix source(d, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const StateVec& x = traj.states[j];
    const ControlVec& a = traj.controls[j];
    StateVec r = problem.cost_grad_state(x, a);
    if (prev_lambda) r.noalias() += problem.dynamics_jacobian_state(x, a).transpose() * prev_lambda(x);
    source.col(static_cast<Eigen::Index>(j)) = r;
  }

  std::vector<StateVec> labels(n, StateVec::Zero(d));
  std::vector<double> component(n);
  for (int i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < n; ++j) component[j] = source(i, static_cast<Eigen::Index>(j));
    const std::vector<double> integral = discounted_tail_integrals(traj.times, component, problem.discount);
    for (std::size_t j = 0; j < n; ++j) labels[j][i] = integral[j];
  }
  return labels;
}

std::vector<LabeledPoint> resample_arclength(const Trajectory& traj, const std::vector<double>& labels_phi,
                                             const std::vector<StateVec>& labels_lam, double spacing) {
  require(spacing > 0.0, "resample_arclength: spacing must be positive");
  require(labels_phi.size() == traj.size() && labels_lam.size() == traj.size(),
          "resample_arclength: label count must match trajectory");
  std::vector<LabeledPoint> out;
  if (traj.empty()) return out;

  // Relative slack so that uniformly accumulated arc lengths hit exact multiples.
  const double slack = 1e-9 * spacing;
  double last = traj.arclens[0];
  out.push_back({traj.states[0], labels_phi[0], labels_lam[0]});
  for (std::size_t j = 1; j < traj.size(); ++j) {
    if (traj.arclens[j] - last >= spacing - slack) {
      out.push_back({traj.states[j], labels_phi[j], labels_lam[j]});
      last = traj.arclens[j];
    }
  }
  return out;
}

std::vector<LabeledPoint> filter_box(const std::vector<LabeledPoint>& points, const Box& box) {
  box.validate("filter_box");
  std::vector<LabeledPoint> out;
  for (const auto& p : points) {
    if (box.contains(p.x)) out.push_back(p);
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<double>& phi,
                          const std::vector<StateVec>& lam) {
  require(phi.size() == traj.size() && lam.size() == traj.size(), "write_trajectory_csv: label count mismatch");
  if (traj.empty()) return;
  const auto d = traj.states[0].size();
  const auto p = traj.controls[0].size();
  out << "t";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < p; ++i) out << ",a" << i;
  out << ",l,arclen,phi";
  for (Eigen::Index i = 0; i < d; ++i) out << ",lam" << i;
  out << '\n' << std::setprecision(17);
  for (std::size_t j = 0; j < traj.size(); ++j) {
    out << traj.times[j];
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << traj.states[j][i];
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << traj.controls[j][i];
    out << ',' << traj.costs[j] << ',' << traj.arclens[j] << ',' << phi[j];
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << lam[j][i];
    out << '\n';
  }
}

}  // namespace pilambda
