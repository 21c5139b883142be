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

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace pilambda {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double max_real_eigenvalue(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace

void LqrSpec::validate() const {
  require(A.rows() > 0 && A.rows() == A.cols(), "LqrSpec: A must be square and nonempty");
  require(B.rows() == A.rows() && B.cols() > 0, "LqrSpec: B must have as many rows as A");
  require(discount > 0.0, "LqrSpec: discount must be positive");
  require(A.allFinite() && B.allFinite(), "LqrSpec: matrices must be finite");
}

void CartPoleSpec::validate() const {
  require(ball_mass > 0 && pole_length > 0 && cart_mass > 0, "CartPoleSpec: masses and length must be positive");
  require(force_max > 0, "CartPoleSpec: force_max must be positive");
  require(cart_friction >= 0 && pole_friction >= 0, "CartPoleSpec: friction must be nonnegative");
  require(discount > 0, "CartPoleSpec: discount must be positive");
}

void AdvertisingSpec::validate() const {
  require(effort_max >= 0, "AdvertisingSpec: effort_max must be nonnegative");
  require(depreciation > 0 && adaptation > 0 && churn > 0, "AdvertisingSpec: δ, ζ, α must be positive");
  require(discount > 0, "AdvertisingSpec: discount must be positive");
}

ControlProblem make_lqr(const LqrSpec& spec) {
  spec.validate();
  const Matrix A = spec.A;
  const Matrix B = spec.B;
  const int d = static_cast<int>(A.rows());
  const int p = static_cast<int>(B.cols());

  ControlProblem prob;
  prob.name = "lqr";
  prob.dim_state = d;
  prob.dim_control = p;
  prob.discount = spec.discount;
  prob.control_lower = Eigen::VectorXd::Constant(p, -std::numeric_limits<double>::infinity());
  prob.control_upper = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  prob.control_curvature = Eigen::VectorXd::Constant(p, 2.0);
  prob.dynamics = [A, B](const StateVec& x, const ControlVec& a) -> Eigen::VectorXd { return A * x + B * a; };
  prob.dynamics_jacobian_state = [A](const StateVec&, const ControlVec&) -> Matrix { return A; };
  prob.dynamics_jacobian_control = [B](const StateVec&) -> Matrix { return B; };
  prob.cost = [](const StateVec& x, const ControlVec& a) { return x.squaredNorm() + a.squaredNorm(); };
  prob.cost_grad_state = [](const StateVec& x, const ControlVec&) -> Eigen::VectorXd { return 2.0 * x; };
  prob.cost_grad_control = [](const StateVec&, const ControlVec& a) -> Eigen::VectorXd { return 2.0 * a; };
  prob.validate();
  return prob;
}

ControlProblem make_cartpole(const CartPoleSpec& spec) {
  spec.validate();
  const CartPoleSpec s = spec;
  const double total_mass = s.ball_mass + s.cart_mass;
  const double ml = s.ball_mass * s.pole_length;

  // Pole angular acceleration and its ingredients, shared by g and D_x g.
  struct Accel {
    double num, den, omega_dot;
  };
  auto accel = [s, total_mass, ml](const StateVec& x, double force) {
    const double omega = x[0], sn = std::sin(x[1]), cs = std::cos(x[1]);
    const double num = s.gravity * sn +
                       (s.cart_friction * sign_of(x[2]) - force - ml * omega * omega * sn) * cs / total_mass -
                       s.pole_friction * omega / ml;
    const double den = s.pole_length * (4.0 / 3.0 - s.ball_mass * cs * cs / total_mass);
    return Accel{num, den, num / den};
  };

  ControlProblem prob;
  prob.name = "cartpole";
  prob.dim_state = 4;
  prob.dim_control = 1;
  prob.discount = s.discount;
  prob.control_lower = Eigen::VectorXd::Constant(1, -s.force_max);
  prob.control_upper = Eigen::VectorXd::Constant(1, s.force_max);
  prob.control_curvature = Eigen::VectorXd::Zero(1);

  prob.dynamics = [s, accel, total_mass, ml](const StateVec& x, const ControlVec& a) -> Eigen::VectorXd {
    const double force = a[0];
    const double omega_dot = accel(x, force).omega_dot;
    const double omega = x[0], sn = std::sin(x[1]), cs = std::cos(x[1]);
    Eigen::VectorXd dx(4);
    dx[0] = omega_dot;
    dx[1] = omega;
    dx[2] = (force + ml * (omega * omega * sn - omega_dot * cs) - s.cart_friction * sign_of(x[2])) / total_mass;
    dx[3] = x[2];
    return dx;
  };

  prob.dynamics_jacobian_state = [s, accel, total_mass, ml](const StateVec& x, const ControlVec& a) -> Matrix {
    const double force = a[0];
    const Accel ac = accel(x, force);
    const double omega = x[0], sn = std::sin(x[1]), cs = std::cos(x[1]);
    const double fric = s.cart_friction * sign_of(x[2]);

    const double dnum_domega = -2.0 * ml * omega * sn * cs / total_mass - s.pole_friction / ml;
    const double dnum_dpsi =
        s.gravity * cs + (-ml * omega * omega * cs * cs - (fric - force - ml * omega * omega * sn) * sn) / total_mass;
    const double dden_dpsi = 2.0 * s.pole_length * s.ball_mass * cs * sn / total_mass;

    const double dwd_domega = dnum_domega / ac.den;
    const double dwd_dpsi = dnum_dpsi / ac.den - ac.num * dden_dpsi / (ac.den * ac.den);

    Matrix J = Matrix::Zero(4, 4);
    J(0, 0) = dwd_domega;
    J(0, 1) = dwd_dpsi;
    J(1, 0) = 1.0;
    J(2, 0) = ml * (2.0 * omega * sn - dwd_domega * cs) / total_mass;
    J(2, 1) = ml * (omega * omega * cs - dwd_dpsi * cs + ac.omega_dot * sn) / total_mass;
    J(3, 2) = 1.0;
    return J;
  };

  prob.dynamics_jacobian_control = [s, total_mass, ml](const StateVec& x) -> Matrix {
    const double cs = std::cos(x[1]);
    const double den = s.pole_length * (4.0 / 3.0 - s.ball_mass * cs * cs / total_mass);
    const double dwd_dforce = -cs / (total_mass * den);
    Matrix C = Matrix::Zero(4, 1);
    C(0, 0) = dwd_dforce;
    C(2, 0) = (1.0 - ml * cs * dwd_dforce) / total_mass;
    return C;
  };

  const double eta = s.position_weight;
  prob.cost = [eta](const StateVec& x, const ControlVec&) { return -std::cos(x[1]) + eta * x[3] * x[3]; };
  prob.cost_grad_state = [eta](const StateVec& x, const ControlVec&) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(4);
    g[1] = std::sin(x[1]);
    g[3] = 2.0 * eta * x[3];
    return g;
  };
  prob.cost_grad_control = [](const StateVec&, const ControlVec&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Zero(1);
  };
  prob.wrap_state = [](StateVec& x) {
    constexpr double pi = std::numbers::pi;
    x[1] = x[1] - 2.0 * pi * std::floor((x[1] + pi) / (2.0 * pi));
  };
  prob.validate();
  return prob;
}

ControlProblem make_advertising(const AdvertisingSpec& spec) {
  spec.validate();
  const AdvertisingSpec s = spec;

  ControlProblem prob;
  prob.name = "advertising";
  prob.dim_state = 3;
  prob.dim_control = 1;
  prob.discount = s.discount;
  prob.sense = Sense::Maximize;
  prob.control_lower = Eigen::VectorXd::Zero(1);
  prob.control_upper = Eigen::VectorXd::Constant(1, s.effort_max);
  prob.control_curvature = Eigen::VectorXd::Zero(1);

  prob.dynamics = [s](const StateVec& x, const ControlVec& a) -> Eigen::VectorXd {
    const double stim = x[0], adapt = x[1], sales = x[2];
    Eigen::VectorXd dx(3);
    dx[0] = a[0] - s.depreciation * stim;
    dx[1] = s.adaptation * (stim - adapt);
    dx[2] = s.response * std::log(stim + 1.0) - s.churn * sales + s.novelty_weight * std::max(0.0, stim - adapt);
    return dx;
  };
  // max{0, A − Ā} is differentiated with the one-sided value 0 on the kink A = Ā.
  prob.dynamics_jacobian_state = [s](const StateVec& x, const ControlVec&) -> Matrix {
    const double active = x[0] > x[1] ? 1.0 : 0.0;
    Matrix J = Matrix::Zero(3, 3);
    J(0, 0) = -s.depreciation;
    J(1, 0) = s.adaptation;
    J(1, 1) = -s.adaptation;
    J(2, 0) = s.response / (x[0] + 1.0) + s.novelty_weight * active;
    J(2, 1) = -s.novelty_weight * active;
    J(2, 2) = -s.churn;
    return J;
  };
  prob.dynamics_jacobian_control = [](const StateVec&) -> Matrix {
    Matrix C = Matrix::Zero(3, 1);
    C(0, 0) = 1.0;
    return C;
  };
  // Internal cost is the negated reward πS − u.
  prob.cost = [s](const StateVec& x, const ControlVec& a) { return a[0] - s.margin * x[2]; };
  prob.cost_grad_state = [s](const StateVec&, const ControlVec&) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    g[2] = -s.margin;
    return g;
  };
  prob.cost_grad_control = [](const StateVec&, const ControlVec&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Ones(1);
  };
  prob.validate();
  return prob;
}

Matrix lqr_test_matrix(int test, int dim, std::uint64_t seed) {
  require(dim > 0, "lqr_test_matrix: dimension must be positive");
  require(test >= 1 && test <= 3, "lqr_test_matrix: test must be 1, 2 or 3");
  if (test == 1) return Matrix::Identity(dim, dim);
  Rng rng(substream_seed(seed, {static_cast<std::uint64_t>(test)}));
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  }
  return (a.transpose() * a + Matrix::Identity(dim, dim)) / static_cast<double>(dim);
}

LqrSpec lqr_test_spec(int test, int dim, std::uint64_t seed) {
  return LqrSpec{lqr_test_matrix(test, dim, seed), Matrix::Identity(dim, dim), 1.0};
}

Matrix solve_continuous_lyapunov(const Matrix& M, const Matrix& S) {
  const Eigen::Index n = M.rows();
  require(M.cols() == n && S.rows() == n && S.cols() == n, "solve_continuous_lyapunov: shape mismatch");
  const Matrix I = Matrix::Identity(n, n);
  Matrix K = Matrix::Zero(n * n, n * n);
  // Column-major vec: vec(MᵀX) = (I ⊗ Mᵀ) vec X, vec(XM) = (Mᵀ ⊗ I) vec X.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * M.transpose();
      K.block(i * n, j * n, n, n) += M(j, i) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(S.data(), n * n);
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw OracleFailure("Lyapunov operator is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(sol.data(), n, n);
  return 0.5 * (X + X.transpose());
}

double riccati_residual(const LqrSpec& spec, const Matrix& P) {
  const Eigen::Index d = spec.A.rows();
  const Matrix R = spec.A.transpose() * P + P * spec.A - P * spec.B * spec.B.transpose() * P +
                   Matrix::Identity(d, d) - spec.discount * P;
  return R.norm();
}

Matrix riccati_oracle(const LqrSpec& spec, int max_newton_iterations) {
  spec.validate();
  const Eigen::Index d = spec.A.rows();
  const Matrix I = Matrix::Identity(d, d);
  // Discounting shifts the drift: AᵀP + PA − ρP = A_sᵀP + PA_s.
  const Matrix As = spec.A - 0.5 * spec.discount * I;
  const Matrix BBt = spec.B * spec.B.transpose();

  auto rhs = [&](const Matrix& P) -> Matrix { return As.transpose() * P + P * As - P * BBt * P + I; };

  // Forward Riccati flow from P = 0 approaches the stabilizing root; it is
  // only used to find a stabilizing gain for the Newton-Kleinman polish.
  Matrix P = Matrix::Zero(d, d);
  const double scale = 1.0 + As.norm() + BBt.norm();
  const double h = 0.05 / scale;
  for (int step = 0; step < 200000; ++step) {
    const Matrix k1 = rhs(P);
    const Matrix k2 = rhs(P + 0.5 * h * k1);
    const Matrix k3 = rhs(P + 0.5 * h * k2);
    const Matrix k4 = rhs(P + h * k3);
    P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!P.allFinite()) throw OracleFailure("Riccati flow diverged");
    if (k1.norm() < 1e-6 * (1.0 + P.norm())) break;
  }
  P = 0.5 * (P + P.transpose());

  for (int it = 0; it < max_newton_iterations; ++it) {
    const Matrix K = spec.B.transpose() * P;
    const Matrix closed = As - spec.B * K;
    if (max_real_eigenvalue(closed) >= 0.0) throw OracleFailure("Riccati iterate is not stabilizing");
    const Matrix next = solve_continuous_lyapunov(closed, I + K.transpose() * K);
    const double change = (next - P).norm();
    P = next;
    if (riccati_residual(spec, P) <= 1e-12 * (1.0 + P.norm()) || change <= 1e-15 * (1.0 + P.norm())) {
      return P;
    }
  }
  if (riccati_residual(spec, P) <= 1e-8 * (1.0 + P.norm())) return P;
  throw OracleFailure("Riccati Newton iteration did not converge");
}

Matrix lyapunov_policy_oracle(const LqrSpec& spec, const Matrix& K) {
  spec.validate();
  const Eigen::Index d = spec.A.rows();
  require(K.rows() == spec.B.cols() && K.cols() == d, "lyapunov_policy_oracle: K must be p×d");
  const Matrix closed = spec.A - spec.B * K;
  if (max_real_eigenvalue(closed) >= 0.5 * spec.discount) {
    throw OracleFailure("closed loop grows faster than the discount; policy value is infinite");
  }
  const Matrix shifted = closed - 0.5 * spec.discount * Matrix::Identity(d, d);
  return solve_continuous_lyapunov(shifted, Matrix::Identity(d, d) + K.transpose() * K);
}

}  // namespace pilambda
