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

#include "pilambda/benchmarks.hpp"
#include "pilambda/characteristics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pilambda;
using namespace pilambda::testing;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

double cartpole_energy(const CartPoleSpec& s, const StateVec& x) {
  const double M = s.ball_mass + s.cart_mass, m = s.ball_mass, l = s.pole_length;
  const double omega = x[0], psi = x[1], v = x[2];
  return 0.5 * M * v * v + m * l * v * omega * std::cos(psi) + (2.0 / 3.0) * m * l * l * omega * omega +
         m * s.gravity * l * std::cos(psi);
}

}  // namespace

TEST(LqrSpecs, TestOneIsIdentity) {
  const LqrSpec spec = lqr_test_spec(1, 5, 7);
  EXPECT_TRUE(spec.A.isIdentity());
  EXPECT_TRUE(spec.B.isIdentity());
  EXPECT_EQ(spec.discount, 1.0);
  const auto p = make_lqr(spec);
  EXPECT_EQ(p.dim_state, 5);
  EXPECT_EQ(p.dim_control, 5);
}

TEST(LqrSpecs, RandomTestsAreSymmetricPositiveAndDistinct) {
  const Matrix A2 = lqr_test_matrix(2, 5, 7), A3 = lqr_test_matrix(3, 5, 7);
  for (const Matrix* A : {&A2, &A3}) {
    EXPECT_TRUE(A->isApprox(A->transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(*A);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 1.0 / 5.0 - 1e-12);
  }
  EXPECT_FALSE(A2.isApprox(A3));
  EXPECT_EQ(lqr_test_matrix(2, 5, 7), A2);
  EXPECT_THROW(lqr_test_matrix(4, 5, 7), ContractViolation);
}

TEST(CartPole, CostValues) {
  const auto p = make_cartpole({});
  EXPECT_DOUBLE_EQ(p.cost(StateVec::Zero(4), ControlVec::Zero(1)), -1.0);
  StateVec x = StateVec::Zero(4);
  x[1] = std::numbers::pi;
  x[3] = 1.0;
  EXPECT_DOUBLE_EQ(p.cost(x, ControlVec::Zero(1)), 1.2);
}

TEST(CartPole, EnergyDriftIsFourthOrder) {
  CartPoleSpec s;
  s.cart_friction = 0.0;
  s.pole_friction = 0.0;
  const auto p = make_cartpole(s);
  StateVec x0(4);
  x0 << 1.0, 2.0, 0.3, 0.0;
  auto drift = [&](double h) {
    const CharacteristicSettings cfg{h, 1e-300, 2.0, 1e6};
    const auto traj = integrate_characteristic(p, zero_policy(1), x0, cfg);
    return std::abs(cartpole_energy(s, traj.states.back()) - cartpole_energy(s, x0));
  };
  const double order = std::log2(drift(0.01) / drift(0.005));
  EXPECT_GE(order, 3.6);
  EXPECT_LE(order, 5.0);
}

TEST(Advertising, RewardAndEquilibria) {
  const AdvertisingSpec s;
  const auto p = make_advertising(s);
  StateVec x(3);
  x << 1.0, 1.0, 2.0;
  EXPECT_DOUBLE_EQ(p.reported(p.cost(x, ControlVec::Ones(1))), 0.0);
  x << 0.0, 0.5, 0.0;
  EXPECT_EQ(evaluate_dynamics(p, x, ControlVec::Zero(1))[2], 0.0);
  x << 2.0, 2.0, 1.0;
  EXPECT_EQ(evaluate_dynamics(p, x, ControlVec::Zero(1))[1], 0.0);
}

TEST(Advertising, StimulusStaysNonnegative) {
  const auto p = make_advertising({});
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    StateVec x0(3);
    x0 << rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0), rng.uniform(0.0, 10.0);
    const double u = rng.uniform(0.0, 2.0);
    const Policy pol = [u](const StateVec&) { return ControlVec::Constant(1, u); };
    const auto traj = integrate_characteristic(p, pol, x0, {0.05, 1e-300, 20.0, 1e6});
    for (const auto& x : traj.states) {
      EXPECT_GE(x[0], 0.0);
      EXPECT_GE(x[1], 0.0);
    }
  }
}

TEST(Riccati, ScalarGoldenRoot) {
  const Matrix P = riccati_oracle({Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0});
  EXPECT_NEAR(P(0, 0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-12);
}

TEST(Riccati, ScalarDecreasesWithDiscount) {
  double previous = std::numeric_limits<double>::infinity();
  for (double rho : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double p = riccati_oracle({Matrix::Zero(1, 1), Matrix::Identity(1, 1), rho})(0, 0);
    EXPECT_NEAR(p, (-rho + std::sqrt(rho * rho + 4.0)) / 2.0, 1e-12);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(Riccati, TestOneIsGoldenRatioTimesIdentity) {
  const Matrix P = riccati_oracle(lqr_test_spec(1, 5, 7));
  EXPECT_LE((P - kGolden * Matrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(Riccati, ResidualSmallOnAllTests) {
  for (int test : {1, 2, 3}) {
    for (int dim : {1, 3, 5, 8}) {
      const auto spec = lqr_test_spec(test, dim, 7);
      const Matrix P = riccati_oracle(spec);
      EXPECT_LE(riccati_residual(spec, P), 1e-8 * (1.0 + P.norm())) << "test " << test << " d " << dim;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(Lyapunov, ScalarExamples) {
  EXPECT_NEAR(lyapunov_policy_oracle({Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0}, Matrix::Zero(1, 1))(0, 0),
              1.0, 1e-14);
  EXPECT_NEAR(lyapunov_policy_oracle({Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1.0}, Matrix::Identity(1, 1))(0, 0),
              2.0, 1e-14);
}

TEST(Lyapunov, OptimalGainReproducesRiccati) {
  for (int test : {1, 2, 3}) {
    const auto spec = lqr_test_spec(test, 4, 7);
    const Matrix P = riccati_oracle(spec);
    const Matrix K = spec.B.transpose() * P;
    EXPECT_LE((lyapunov_policy_oracle(spec, K) - P).norm(), 1e-8);
  }
}

TEST(Lyapunov, ResidualSmall) {
  const auto spec = lqr_test_spec(2, 5, 7);
  const Matrix K = 3.0 * Matrix::Identity(5, 5);
  const Matrix P = lyapunov_policy_oracle(spec, K);
  const Matrix M = spec.A - spec.B * K;
  const Matrix R = M.transpose() * P + P * M - spec.discount * P + Matrix::Identity(5, 5) + K.transpose() * K;
  EXPECT_LE(R.norm(), 1e-10 * (1.0 + P.norm()));
}

TEST(Lyapunov, UnstableClosedLoopFails) {
  // A − BK = 2 with ρ = 1: the discounted cost is infinite.
  EXPECT_THROW(lyapunov_policy_oracle({Matrix::Constant(1, 1, 2.0), Matrix::Identity(1, 1), 1.0}, Matrix::Zero(1, 1)),
               OracleFailure);
}
