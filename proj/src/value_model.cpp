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

#include "pilambda/value_model.hpp"

#include "pilambda/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

namespace pilambda {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// ---------------------------------------------------------------- quadratic

QuadraticModel::QuadraticModel(Matrix q) : q_(std::move(q)) {
  require(q_.rows() == q_.cols() && q_.rows() > 0, "QuadraticModel: Q must be square");
}

double QuadraticModel::value(const StateVec& x) const {
  require_dim(x.size(), dim_state(), "QuadraticModel::value");
  return 0.5 * x.dot((q_ + q_.transpose()) * x);
}

StateVec QuadraticModel::gradient(const StateVec& x) const {
  require_dim(x.size(), dim_state(), "QuadraticModel::gradient");
  return (q_ + q_.transpose()) * x;
}

ParamJacobians QuadraticModel::param_jacobians(const StateVec& x) const {
  require_dim(x.size(), dim_state(), "QuadraticModel::param_jacobians");
  const int d = dim_state();
  ParamJacobians J{ParamVec(d * d), Matrix::Zero(d, d * d)};
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const int k = a * d + b;
      J.value[k] = x[a] * x[b];
      J.gradient(a, k) += x[b];
      J.gradient(b, k) += x[a];
    }
  }
  return J;
}

void QuadraticModel::value_and_gradient(const StateVec& x, double& value, StateVec& gradient) const {
  gradient = this->gradient(x);
  value = 0.5 * x.dot(gradient);
}

void QuadraticModel::accumulate_vjp(const StateVec& x, double w_value, const StateVec& w_grad,
                                    ParamVec& out) const {
  const int d = dim_state();
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      out[a * d + b] += w_value * x[a] * x[b] + w_grad[a] * x[b] + w_grad[b] * x[a];
    }
  }
}

ParamVec QuadraticModel::params() const {
  const int d = dim_state();
  ParamVec theta(d * d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) theta[a * d + b] = q_(a, b);
  }
  return theta;
}

void QuadraticModel::set_params(const ParamVec& theta) {
  require_dim(theta.size(), param_count(), "QuadraticModel::set_params");
  const int d = dim_state();
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) q_(a, b) = theta[a * d + b];
  }
}

// ---------------------------------------------------------------------- rbf

RbfModel::RbfModel(int dim, int modes)
    : centers_(Matrix::Zero(modes, dim)), log_widths_(Matrix::Zero(modes, dim)), weights_(Eigen::VectorXd::Zero(modes)) {
  require(dim > 0 && modes > 0, "RbfModel: dimension and mode count must be positive");
  refresh();
}

RbfModel::RbfModel(Matrix centers, Matrix log_widths, Eigen::VectorXd weights)
    : centers_(std::move(centers)), log_widths_(std::move(log_widths)), weights_(std::move(weights)) {
  require(centers_.rows() > 0 && centers_.cols() > 0, "RbfModel: dimension and mode count must be positive");
  require(log_widths_.rows() == centers_.rows() && log_widths_.cols() == centers_.cols() &&
              weights_.size() == centers_.rows(),
          "RbfModel: inconsistent parameter shapes");
  refresh();
}

void RbfModel::refresh() { inv_var_ = (-2.0 * log_widths_.array()).exp().matrix(); }

RbfModel RbfModel::initialized(int modes, const Box& box, std::uint64_t seed) {
  box.validate("RbfModel::initialized");
  RbfModel model(box.dim(), modes);
  Rng rng(seed);
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < box.dim(); ++j) {
      model.centers_(i, j) = rng.uniform(box.lower[j], box.upper[j]);
      const double edge = box.upper[j] - box.lower[j];
      model.log_widths_(i, j) = std::log(edge > 0.0 ? edge / 4.0 : 1.0);
    }
  }
  model.refresh();
  return model;
}

double RbfModel::activation(int mode, const StateVec& x) const {
  double e = 0.0;
  for (int j = 0; j < dim_state(); ++j) {
    const double u = x[j] - centers_(mode, j);
    e += u * u * inv_var_(mode, j);
  }
  return std::exp(-0.5 * e);
}

double RbfModel::value(const StateVec& x) const {
  require_dim(x.size(), dim_state(), "RbfModel::value");
  double v = 0.0;
  for (int i = 0; i < modes(); ++i) v += weights_[i] * activation(i, x);
  return v;
}

StateVec RbfModel::gradient(const StateVec& x) const {
  double v = 0.0;
  StateVec g;
  value_and_gradient(x, v, g);
  return g;
}

void RbfModel::value_and_gradient(const StateVec& x, double& value, StateVec& gradient) const {
  require_dim(x.size(), dim_state(), "RbfModel::value_and_gradient");
  const int d = dim_state();
  value = 0.0;
  gradient.setZero(d);
  for (int i = 0; i < modes(); ++i) {
    const double wphi = weights_[i] * activation(i, x);
    value += wphi;
    for (int j = 0; j < d; ++j) gradient[j] += wphi * (centers_(i, j) - x[j]) * inv_var_(i, j);
  }
}

// With δ = c − x and e = δ/σ², the mode-i derivatives are
//   ∂Φ̂/∂w = φ,  ∂Φ̂/∂c_k = −wφ e_k,  ∂Φ̂/∂s_k = wφ δ_k e_k,
//   ∂G_j/∂w = φ e_j,
//   ∂G_j/∂c_k = wφ (−e_k e_j + [j=k]/σ_j²),
//   ∂G_j/∂s_k = wφ (δ_k e_k e_j − 2[j=k] e_j).
ParamJacobians RbfModel::param_jacobians(const StateVec& x) const {
  require_dim(x.size(), dim_state(), "RbfModel::param_jacobians");
  const int d = dim_state();
  const int stride = 2 * d + 1;
  ParamJacobians J{ParamVec::Zero(param_count()), Matrix::Zero(d, param_count())};
  Eigen::VectorXd delta(d), e(d);
  for (int i = 0; i < modes(); ++i) {
    const double phi = activation(i, x);
    const double w = weights_[i];
    for (int j = 0; j < d; ++j) {
      delta[j] = centers_(i, j) - x[j];
      e[j] = delta[j] * inv_var_(i, j);
    }
    const int base = i * stride;
    for (int k = 0; k < d; ++k) {
      J.value[base + k] = -w * phi * e[k];
      J.value[base + d + k] = w * phi * delta[k] * e[k];
      for (int j = 0; j < d; ++j) {
        J.gradient(j, base + k) = w * phi * (-e[k] * e[j] + (j == k ? inv_var_(i, j) : 0.0));
        J.gradient(j, base + d + k) = w * phi * (delta[k] * e[k] * e[j] - (j == k ? 2.0 * e[j] : 0.0));
      }
    }
    J.value[base + 2 * d] = phi;
    for (int j = 0; j < d; ++j) J.gradient(j, base + 2 * d) = phi * e[j];
  }
  return J;
}

void RbfModel::accumulate_vjp(const StateVec& x, double w_value, const StateVec& w_grad, ParamVec& out) const {
  const int d = dim_state();
  const int stride = 2 * d + 1;
  for (int i = 0; i < modes(); ++i) {
    const double phi = activation(i, x);
    const double wphi = weights_[i] * phi;
    double eg = 0.0;  // Σ_j w_grad_j e_j
    for (int j = 0; j < d; ++j) eg += w_grad[j] * (centers_(i, j) - x[j]) * inv_var_(i, j);
    const int base = i * stride;
    for (int k = 0; k < d; ++k) {
      const double delta = centers_(i, k) - x[k];
      const double e = delta * inv_var_(i, k);
      out[base + k] += w_value * (-wphi * e) + wphi * (-e * eg + w_grad[k] * inv_var_(i, k));
      out[base + d + k] += w_value * (wphi * delta * e) + wphi * (delta * e * eg - 2.0 * w_grad[k] * e);
    }
    out[base + 2 * d] += w_value * phi + phi * eg;
  }
}

ParamVec RbfModel::params() const {
  const int d = dim_state();
  const int stride = 2 * d + 1;
  ParamVec theta(param_count());
  for (int i = 0; i < modes(); ++i) {
    for (int j = 0; j < d; ++j) {
      theta[i * stride + j] = centers_(i, j);
      theta[i * stride + d + j] = log_widths_(i, j);
    }
    theta[i * stride + 2 * d] = weights_[i];
  }
  return theta;
}

void RbfModel::set_params(const ParamVec& theta) {
  require_dim(theta.size(), param_count(), "RbfModel::set_params");
  const int d = dim_state();
  const int stride = 2 * d + 1;
  for (int i = 0; i < modes(); ++i) {
    for (int j = 0; j < d; ++j) {
      centers_(i, j) = theta[i * stride + j];
      log_widths_(i, j) = theta[i * stride + d + j];
    }
    weights_[i] = theta[i * stride + 2 * d];
  }
  refresh();
}

// ------------------------------------------------------------------ variant

double eval_value(const ValueModel& model, const StateVec& x) {
  return std::visit([&](const auto& m) { return m.value(x); }, model);
}

StateVec eval_state_gradient(const ValueModel& model, const StateVec& x) {
  return std::visit([&](const auto& m) { return m.gradient(x); }, model);
}

void eval_value_and_gradient(const ValueModel& model, const StateVec& x, double& value, StateVec& gradient) {
  std::visit([&](const auto& m) { m.value_and_gradient(x, value, gradient); }, model);
}

ParamJacobians eval_param_jacobians(const ValueModel& model, const StateVec& x) {
  return std::visit([&](const auto& m) { return m.param_jacobians(x); }, model);
}

void accumulate_param_vjp(const ValueModel& model, const StateVec& x, double w_value, const StateVec& w_grad,
                          ParamVec& out) {
  std::visit([&](const auto& m) { m.accumulate_vjp(x, w_value, w_grad, out); }, model);
}

int model_dim_state(const ValueModel& model) {
  return std::visit([](const auto& m) { return m.dim_state(); }, model);
}

int param_count(const ValueModel& model) {
  return std::visit([](const auto& m) { return m.param_count(); }, model);
}

ParamVec get_params(const ValueModel& model) {
  return std::visit([](const auto& m) { return m.params(); }, model);
}

void set_params(ValueModel& model, const ParamVec& theta) {
  std::visit([&](auto& m) { m.set_params(theta); }, model);
}

std::string family_name(const ValueModel& model) {
  return std::visit(overloaded{[](const QuadraticModel&) { return std::string("quadratic"); },
                               [](const RbfModel&) { return std::string("rbf"); }},
                    model);
}

// --------------------------------------------------------------- checkpoint

void save_checkpoint(std::ostream& out, const ValueModel& model) {
  const int modes = std::holds_alternative<RbfModel>(model) ? std::get<RbfModel>(model).modes() : 0;
  const ParamVec theta = get_params(model);
  out << "pilambda-checkpoint\n"
      << "version 1\n"
      << "family " << family_name(model) << '\n'
      << "state_dim " << model_dim_state(model) << '\n'
      << "modes " << modes << '\n'
      << "param_count " << theta.size() << '\n'
      << std::setprecision(17);
  for (Eigen::Index k = 0; k < theta.size(); ++k) out << theta[k] << '\n';
}

namespace {

template <typename T>
T read_field(std::istream& in, const std::string& key) {
  std::string got;
  T value{};
  if (!(in >> got) || got != key || !(in >> value)) {
    throw ContractViolation("checkpoint: expected field '" + key + "'");
  }
  return value;
}

}  // namespace

ValueModel load_checkpoint(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "pilambda-checkpoint") throw ContractViolation("checkpoint: bad magic");
  const int version = read_field<int>(in, "version");
  require(version == 1, "checkpoint: unsupported version " + std::to_string(version));
  const std::string family = read_field<std::string>(in, "family");
  const int dim = read_field<int>(in, "state_dim");
  const int modes = read_field<int>(in, "modes");
  const long count = read_field<long>(in, "param_count");
  require(dim > 0 && count >= 0, "checkpoint: invalid sizes");

  ParamVec theta(count);
  for (long k = 0; k < count; ++k) {
    if (!(in >> theta[k])) throw ContractViolation("checkpoint: truncated parameter list");
  }
  ValueModel model = family == "quadratic" ? ValueModel{QuadraticModel(dim)}
                     : family == "rbf"     ? ValueModel{RbfModel(dim, modes)}
                                           : throw ContractViolation("checkpoint: unknown family " + family);
  set_params(model, theta);
  return model;
}

void save_checkpoint(const std::string& path, const ValueModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  save_checkpoint(out, model);
}

ValueModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace pilambda
