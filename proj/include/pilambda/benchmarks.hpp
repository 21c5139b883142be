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

#ifndef PILAMBDA_BENCHMARKS_HPP
#define PILAMBDA_BENCHMARKS_HPP

#include "pilambda/common.hpp"
#include "pilambda/control_problem.hpp"

#include <cstdint>

namespace pilambda {

/// ẋ = Ax + Bu with running cost ‖x‖² + ‖u‖², unbounded controls.
struct LqrSpec {
  Matrix A;
  Matrix B;
  double discount = 1.0;

  void validate() const;
};

/// Pole-on-cart swing-up. State (ω, ψ, v, z): pole angular velocity, pole
/// angle from upright, cart velocity, cart position. Control: force F.
struct CartPoleSpec {
  double ball_mass = 0.1;
  double pole_length = 0.5;
  double cart_mass = 1.0;
  double cart_friction = 5e-4;
  double pole_friction = 2e-6;
  double force_max = 10.0;
  double gravity = 9.8;
  double discount = 5.0;
  double position_weight = 0.2;

  void validate() const;
};

/// Advertising capital model. State (A, Ā, S): stimulus, adaptation level,
/// sales. Control: advertising effort u ∈ [0, u_max]. Maximizes πS − u.
struct AdvertisingSpec {
  double effort_max = 2.0;
  double depreciation = 0.5;   // δ
  double adaptation = 1.0;     // ζ
  double response = 0.5;       // v
  double churn = 0.1;          // α
  double novelty_weight = 0.5; // w̄
  double margin = 0.5;         // π
  double discount = 1.0;

  void validate() const;
};

ControlProblem make_lqr(const LqrSpec& spec);
ControlProblem make_cartpole(const CartPoleSpec& spec);
ControlProblem make_advertising(const AdvertisingSpec& spec);

/// Drift matrices of the three linear-quadratic tests: test 1 is the
/// identity, tests 2 and 3 are (aᵀa + I)/d with a standard normal, drawn from
/// independent seeded substreams.
Matrix lqr_test_matrix(int test, int dim, std::uint64_t seed);

/// Spec with B = I and ρ = 1 for test 1, 2 or 3.
LqrSpec lqr_test_spec(int test, int dim, std::uint64_t seed);

/// Stabilizing solution P ⪰ 0 of AᵀP + PA − PBBᵀP + I = ρP.
/// Φ(x) = xᵀPx is the optimal value, a*(x) = −BᵀPx the optimal policy.
Matrix riccati_oracle(const LqrSpec& spec, int max_newton_iterations = 100);

/// P_K solving (A−BK)ᵀP + P(A−BK) − ρP + I + KᵀK = 0: the value of the fixed
/// policy a = −Kx is xᵀP_K x and its gradient 2P_K x.
Matrix lyapunov_policy_oracle(const LqrSpec& spec, const Matrix& K);

/// Frobenius norm of the discounted Riccati residual.
double riccati_residual(const LqrSpec& spec, const Matrix& P);

/// Solves Mᵀ X + X M + S = 0 for X by Kronecker vectorization (small systems only).
Matrix solve_continuous_lyapunov(const Matrix& M, const Matrix& S);

}  // namespace pilambda

#endif  // PILAMBDA_BENCHMARKS_HPP
