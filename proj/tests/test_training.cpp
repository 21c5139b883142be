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
#include "pilambda/random.hpp"
#include "pilambda/training.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace pilambda;
using namespace pilambda::testing;

namespace {

std::vector<LabeledPoint> random_points(Rng& rng, int count, int dim) {
  std::vector<LabeledPoint> pts;
  for (int k = 0; k < count; ++k) {
    StateVec x(dim), lam(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
      lam[i] = rng.normal();
    }
    pts.push_back({x, rng.normal(), lam});
  }
  return pts;
}

std::vector<LabeledPoint> labels_from(const ValueModel& m, const std::vector<LabeledPoint>& at) {
  std::vector<LabeledPoint> out;
  for (const auto& p : at) out.push_back({p.x, eval_value(m, p.x), eval_state_gradient(m, p.x)});
  return out;
}

ValueModel random_rbf(Rng& rng, int dim, int modes) {
  RbfModel m = RbfModel::initialized(modes, cube(dim, 1.0), rng.uniform() * 1e6);
  ParamVec theta = m.params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.3 * rng.normal();
  m.set_params(theta);
  return m;
}

// Oracle labels of the policy a = 0 on ẋ = 0: Φ = x², λ = 2x.
std::vector<LabeledPoint> scalar_lyapunov_labels(int count) {
  const LqrSpec spec{Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0};
  const double pk = lyapunov_policy_oracle(spec, Matrix::Zero(1, 1))(0, 0);
  std::vector<LabeledPoint> pts;
  for (int k = 0; k < count; ++k) {
    const double x = -1.0 + 2.0 * k / (count - 1);
    pts.push_back({StateVec::Constant(1, x), pk * x * x, StateVec::Constant(1, 2.0 * pk * x)});
  }
  return pts;
}

}  // namespace

TEST(Loss, HandValue) {
  const std::vector<LabeledPoint> pts{{StateVec::Zero(1), 2.0, StateVec::Constant(1, 3.0)}};
  EXPECT_DOUBLE_EQ(loss(QuadraticModel(1), pts, 0.5), 6.5);
}

TEST(Loss, SelfLabelsGiveZeroLossAndGradient) {
  Rng rng(3);
  const ValueModel m = random_rbf(rng, 3, 5);
  const auto pts = labels_from(m, random_points(rng, 40, 3));
  EXPECT_EQ(loss(m, pts, 0.3), 0.0);
  EXPECT_LE(loss_gradient(m, pts, 0.3).norm(), 1e-12);
}

TEST(Loss, ValueOnlyIgnoresGradientLabels) {
  Rng rng(4);
  const ValueModel m = random_rbf(rng, 2, 4);
  auto pts = random_points(rng, 30, 2);
  const double before = loss(m, pts, 1.0);
  for (auto& p : pts) p.lam *= -7.0;
  EXPECT_EQ(loss(m, pts, 1.0), before);
}

TEST(Loss, GradientOnlyIgnoresValueLabels) {
  Rng rng(5);
  const ValueModel m = random_rbf(rng, 2, 4);
  auto pts = random_points(rng, 30, 2);
  const ParamVec before = loss_gradient(m, pts, 0.0);
  for (auto& p : pts) p.phi += 11.0;
  EXPECT_EQ(loss_gradient(m, pts, 0.0), before);
}

TEST(Loss, ConvexDecomposition) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const ValueModel m = trial % 2 ? random_rbf(rng, 3, 6) : ValueModel{QuadraticModel(Matrix::Random(3, 3))};
    const auto pts = random_points(rng, 50, 3);
    const double mu = rng.uniform();
    const double whole = loss(m, pts, mu);
    const double parts = mu * loss(m, pts, 1.0) + (1.0 - mu) * loss(m, pts, 0.0);
    EXPECT_LE(std::abs(whole - parts), 1e-12 * std::abs(whole));
  }
}

TEST(LossGradient, MatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    ValueModel m = trial % 2 ? random_rbf(rng, 2, 3) : ValueModel{QuadraticModel(Matrix::Random(2, 2))};
    const auto pts = random_points(rng, 15, 2);
    const double mu = rng.uniform();
    const ParamVec theta = get_params(m);
    const auto fd = central_gradient(
        [&](const Eigen::VectorXd& t) {
          ValueModel probe = m;
          set_params(probe, t);
          return loss(probe, pts, mu);
        },
        theta, 1e-5 * (1.0 + theta.norm()));
    EXPECT_LE(max_rel_error(loss_gradient(m, pts, mu), fd), 1e-6);
  }
}

TEST(LossGradient, WorkerCountDoesNotChangeBits) {
  Rng rng(8);
  const ValueModel m = random_rbf(rng, 4, 8);
  const auto pts = random_points(rng, 1000, 4);
  EXPECT_EQ(loss(m, pts, 0.4, {1}), loss(m, pts, 0.4, {8}));
  EXPECT_EQ(loss_gradient(m, pts, 0.4, {1}), loss_gradient(m, pts, 0.4, {8}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  ParamVec theta = ParamVec::Zero(1);
  AdamState st = AdamState::zeros(1);
  adam_step(theta, ParamVec::Constant(1, 2.0 * (theta[0] - 1.0)), st, cfg);
  EXPECT_NEAR(theta[0], cfg.learning_rate, 1e-8);
  EXPECT_EQ(st.t, 1);
}

TEST(Train, ZeroBudgetReturnsModelUnchanged) {
  Rng rng(9);
  const ValueModel m = random_rbf(rng, 2, 3);
  TrainConfig cfg;
  cfg.max_steps = 0;
  const auto out = train(m, random_points(rng, 10, 2), cfg);
  EXPECT_EQ(get_params(out.model), get_params(m));
  EXPECT_EQ(out.steps_taken, 0);
}

TEST(Train, FitsLyapunovOracle) {
  TrainConfig cfg;
  cfg.mu = 0.5;
  cfg.max_steps = 1000;
  const auto out = train(QuadraticModel(1), scalar_lyapunov_labels(21), cfg);
  EXPECT_NEAR(std::get<QuadraticModel>(out.model).symmetric()(0, 0), 1.0, 1e-3);
}

TEST(Train, LossTrendsDownOnQuadraticFit) {
  const auto spec = lqr_test_spec(2, 3, 7);
  const Matrix P = riccati_oracle(spec);
  Rng rng(10);
  std::vector<LabeledPoint> pts;
  for (int k = 0; k < 200; ++k) {
    StateVec x(3);
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    pts.push_back({x, x.dot(P * x), 2.0 * P * x});
  }
  std::vector<double> trace;
  TrainConfig cfg;
  cfg.mu = 0.2;
  cfg.max_steps = 1000;
  train(QuadraticModel(3), pts, cfg, {1}, nullptr, [&](int, double l) { trace.push_back(l); });
  ASSERT_EQ(trace.size(), 1001u);
  for (std::size_t k = 0; k + 100 < trace.size(); ++k) EXPECT_LE(trace[k + 100], trace[k]) << "step " << k;
}

TEST(Train, StopsAtLossTolerance) {
  TrainConfig cfg;
  cfg.max_steps = 500;
  cfg.loss_tol = 1e-300;
  const auto pts = scalar_lyapunov_labels(5);
  const ValueModel exact = QuadraticModel(Matrix::Identity(1, 1));
  EXPECT_EQ(train(exact, pts, cfg).steps_taken, 0);
}

TEST(Train, DeterministicAcrossRunsAndWorkers) {
  Rng rng(11);
  const ValueModel m = random_rbf(rng, 3, 6);
  const auto pts = random_points(rng, 600, 3);
  TrainConfig cfg;
  cfg.max_steps = 50;
  const auto a = train(m, pts, cfg, {1});
  const auto b = train(m, pts, cfg, {1});
  const auto c = train(m, pts, cfg, {8});
  EXPECT_EQ(get_params(a.model), get_params(b.model));
  EXPECT_EQ(get_params(a.model), get_params(c.model));
}

TEST(Train, CarriedStateContinuesMoments) {
  const auto pts = scalar_lyapunov_labels(9);
  TrainConfig cfg;
  cfg.max_steps = 10;
  AdamState st;
  auto first = train(QuadraticModel(1), pts, cfg, {1}, &st);
  EXPECT_EQ(st.t, 10);
  train(first.model, pts, cfg, {1}, &st);
  EXPECT_EQ(st.t, 20);
}

TEST(Train, DivergenceReportsLastFiniteModel) {
  std::vector<LabeledPoint> pts{{StateVec::Constant(1, 1e200), 0.0, StateVec::Zero(1)}};
  TrainConfig cfg;
  const ValueModel m = QuadraticModel(Matrix::Constant(1, 1, 1e200));
  try {
    train(m, pts, cfg);
    FAIL() << "expected TrainingDivergence";
  } catch (const TrainingDivergence& e) {
    EXPECT_EQ(get_params(e.last_finite()), get_params(m));
  }
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig cfg;
  cfg.mu = 1.5;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.max_steps = -1;
  EXPECT_THROW(cfg.validate(), ContractViolation);
}
