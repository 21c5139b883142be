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
#include "pilambda/driver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pilambda;
using namespace pilambda::testing;

namespace {

const LqrSpec kScalar{Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0};

PiConfig lqr_config(int dim, int n, double mu, int iterations) {
  PiConfig c;
  c.n_trajectories = n;
  c.n_iterations = iterations;
  c.domain_box = cube(dim, 1.0);
  c.seed = 1;
  c.train.mu = mu;
  c.residual_points = 2000;
  return c;
}

double fitted_scalar(const ValueModel& m) { return std::get<QuadraticModel>(m).symmetric()(0, 0); }

}  // namespace

TEST(GreedyPolicy, ZeroModelGivesZeroControl) {
  const auto p = make_lqr(lqr_test_spec(1, 3, 7));
  const ValueModel m = QuadraticModel(3);
  EXPECT_EQ(greedy_policy(p, m)(StateVec::Ones(3)).norm(), 0.0);
  const auto cp = make_cartpole({});
  const ValueModel zero_rbf = RbfModel(4, 3);
  StateVec x(4);
  x << 1.0, 2.0, 0.5, -1.0;
  EXPECT_EQ(greedy_policy(cp, zero_rbf)(x)[0], 0.0);
}

TEST(GreedyPolicy, RiccatiModelIsOptimal) {
  const auto spec = lqr_test_spec(2, 4, 7);
  const auto p = make_lqr(spec);
  const Matrix P = riccati_oracle(spec);
  const ValueModel m = QuadraticModel(P);
  const StateVec x = StateVec::LinSpaced(4, -1.0, 1.0);
  EXPECT_LE((greedy_policy(p, m)(x) + spec.B.transpose() * P * x).norm(), 1e-12);
}

TEST(InitialStates, SharedAcrossMuAndBudgetKeyedOnIteration) {
  PiConfig a = lqr_config(3, 5, 0.2, 10), b = lqr_config(3, 5, 0.9, 10);
  b.train.max_steps = 17;
  EXPECT_EQ(initial_states(a, 3), initial_states(b, 3));
  EXPECT_NE(initial_states(a, 3), initial_states(a, 4));
  for (const auto& x : initial_states(a, 1)) EXPECT_TRUE(a.domain_box.contains(x));
  a.resample_each_iteration = false;
  EXPECT_EQ(initial_states(a, 3), initial_states(a, 4));
}

TEST(Config, RejectsInvalidValues) {
  const auto p = make_lqr(kScalar);
  PiConfig c = lqr_config(1, 0, 0.5, 3);
  EXPECT_THROW(c.validate(p), ContractViolation);
  c = lqr_config(2, 3, 0.5, 3);
  EXPECT_THROW(c.validate(p), ContractViolation);
  c = lqr_config(1, 3, 0.5, 3);
  c.rollup = RollupSettings{};
  EXPECT_THROW(c.validate(p), ContractViolation);
  EXPECT_THROW(run_pi_lambda(p, QuadraticModel(1), lqr_config(1, 0, 0.5, 3)), ContractViolation);
}

TEST(LabelCharacteristic, PointsInsideBoxWithSpacing) {
  const auto p = make_lqr(lqr_test_spec(1, 2, 7));
  const ValueModel m = QuadraticModel(Matrix(2.0 * Matrix::Identity(2, 2)));
  PiConfig c = lqr_config(2, 1, 0.5, 1);
  const auto out = label_characteristic(p, m, StateVec::Constant(2, 0.9), c);
  ASSERT_FALSE(out.diverged);
  ASSERT_GT(out.points.size(), 3u);
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    EXPECT_TRUE(c.domain_box.contains(out.points[k].x));
    if (k > 0) EXPECT_GE((out.points[k].x - out.points[k - 1].x).norm(), c.effective_spacing() * 0.999);
  }
}

TEST(LabelCharacteristic, BlowUpIsReportedNotThrown) {
  const auto p = make_lqr(lqr_test_spec(1, 2, 7));
  PiConfig c = lqr_config(2, 1, 0.5, 1);
  c.characteristics.blowup_bound = 10.0;
  EXPECT_TRUE(label_characteristic(p, QuadraticModel(2), StateVec::Ones(2), c).diverged);
}

TEST(RunPiLambda, ScalarConvergesToRiccatiRoot) {
  const auto p = make_lqr(kScalar);
  const auto result = run_pi_lambda(p, QuadraticModel(1), lqr_config(1, 5, 0.5, 30));
  ASSERT_FALSE(result.diverged);
  EXPECT_NEAR(fitted_scalar(result.model), (std::sqrt(5.0) - 1.0) / 2.0, 1e-3);
}

TEST(RunPiLambda, FixedPointIsStationary) {
  const auto p = make_lqr(kScalar);
  const double root = (std::sqrt(5.0) - 1.0) / 2.0;
  const ValueModel exact = QuadraticModel(Matrix::Constant(1, 1, root));
  PiConfig c = lqr_config(1, 4, 0.5, 1);
  c.characteristics.step = 0.001;
  c.characteristics.trunc_tol = 1e-10;
  const auto out = run_iteration(p, exact, c, 1);
  EXPECT_NEAR(fitted_scalar(out.model), root, 1e-4);
  EXPECT_LE(out.record.hjb_residual, 1e-4);
}

TEST(RunPiLambda, SingleIterationGivesOneRecord) {
  const auto p = make_lqr(kScalar);
  const auto result = run_pi_lambda(p, QuadraticModel(1), lqr_config(1, 2, 0.5, 1));
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].iteration, 1);
  EXPECT_EQ(result.mean_residual, result.records[0].hjb_residual);
}

TEST(RunPiLambda, ReproducibleAcrossRunsAndWorkers) {
  const auto p = make_lqr(lqr_test_spec(1, 5, 7));
  const ValueModel init = QuadraticModel(Matrix(2.0 * Matrix::Identity(5, 5)));
  PiConfig c = lqr_config(5, 6, 0.2, 4);
  c.train.max_steps = 200;
  c.probe_points = 100;
  c.par.workers = 1;
  const auto a = run_pi_lambda(p, init, c);
  const auto b = run_pi_lambda(p, init, c);
  c.par.workers = 8;
  const auto w = run_pi_lambda(p, init, c);
  for (const auto* other : {&b, &w}) {
    ASSERT_EQ(a.records.size(), other->records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      EXPECT_EQ(a.records[k].hjb_residual, other->records[k].hjb_residual);
      EXPECT_EQ(a.records[k].train_loss, other->records[k].train_loss);
      EXPECT_EQ(a.records[k].points_used, other->records[k].points_used);
      EXPECT_EQ(a.records[k].gradient_gap, other->records[k].gradient_gap);
    }
    EXPECT_EQ(get_params(a.model), get_params(other->model));
  }
}

TEST(RunPiLambda, FittedGradientJacobianIsSymmetric) {
  const auto p = make_lqr(lqr_test_spec(2, 3, 7));
  const auto result = run_pi_lambda(p, QuadraticModel(Matrix(2.0 * Matrix::Identity(3, 3))), lqr_config(3, 6, 0.2, 5));
  const auto& q = std::get<QuadraticModel>(result.model);
  // Dλ̂ = Q + Qᵀ.
  const StateVec e0 = StateVec::Unit(3, 0), e1 = StateVec::Unit(3, 1);
  EXPECT_EQ(q.gradient(e0)[1], q.gradient(e1)[0]);
}

TEST(RunPiLambda, DivergenceStopsTheRun) {
  // ẋ = 3x + u with zero control outruns the blow-up bound on every trajectory.
  const auto p = make_lqr({Matrix::Constant(1, 1, 3.0), Matrix::Identity(1, 1), 1.0});
  PiConfig c = lqr_config(1, 3, 0.5, 5);
  c.characteristics.blowup_bound = 100.0;
  const auto result = run_pi_lambda(p, QuadraticModel(1), c);
  EXPECT_TRUE(result.diverged);
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_TRUE(std::isinf(result.records[0].hjb_residual));
}

TEST(Summarize, WindowOverCompletedIterations) {
  PiResult r{QuadraticModel(1), {}, false, 0.0, std::nullopt};
  for (int k = 1; k <= 5; ++k) {
    IterationRecord rec;
    rec.iteration = k;
    rec.hjb_residual = k;
    if (k >= 4) rec.rollup_count = 10.0 * k;
    r.records.push_back(rec);
  }
  summarize(r, 3);
  EXPECT_DOUBLE_EQ(r.mean_residual, 4.0);
  ASSERT_TRUE(r.mean_rollups.has_value());
  EXPECT_DOUBLE_EQ(*r.mean_rollups, 45.0);
  summarize(r, 20);
  EXPECT_DOUBLE_EQ(r.mean_residual, 3.0);
  EXPECT_FALSE(r.diverged);
  EXPECT_THROW(summarize(r, 0), ContractViolation);
}
