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

#ifndef PILAMBDA_VALUE_MODEL_HPP
#define PILAMBDA_VALUE_MODEL_HPP

#include "pilambda/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

namespace pilambda {

/// Derivatives with respect to the flat parameter vector.
struct ParamJacobians {
  ParamVec value;   // ∂Φ̂/∂θ, length |θ|
  Matrix gradient;  // ∂(∇Φ̂)/∂θ, d × |θ|
};

/**
 * Φ̂(x) = ½ xᵀ(Qᵀ + Q)x. Only the symmetric part of Q enters.
 * Parameter order: Q row-major.
 */
class QuadraticModel {
 public:
  explicit QuadraticModel(int dim) : q_(Matrix::Zero(dim, dim)) {}
  explicit QuadraticModel(Matrix q);

  int dim_state() const { return static_cast<int>(q_.rows()); }
  int param_count() const { return static_cast<int>(q_.size()); }

  const Matrix& matrix() const { return q_; }
  /// ½(Q + Qᵀ).
  Matrix symmetric() const { return 0.5 * (q_ + q_.transpose()); }

  double value(const StateVec& x) const;
  StateVec gradient(const StateVec& x) const;
  void value_and_gradient(const StateVec& x, double& value, StateVec& gradient) const;
  ParamJacobians param_jacobians(const StateVec& x) const;
  /// out += w_value ∂Φ̂/∂θ + Σ_i w_grad[i] ∂(∇Φ̂)_i/∂θ.
  void accumulate_vjp(const StateVec& x, double w_value, const StateVec& w_grad, ParamVec& out) const;

  ParamVec params() const;
  void set_params(const ParamVec& theta);

 private:
  Matrix q_;
};

/**
 * Gaussian radial basis network with anisotropic diagonal widths,
 *
 *   Φ̂(x) = Σ_i w_i exp(−Σ_j (x_j − c_ij)² / (2 σ_ij²)),   σ_ij = exp(s_ij).
 *
 * (2d + 1) parameters per mode, stored mode-major as (c_i, s_i, w_i).
 */
class RbfModel {
 public:
  RbfModel(int dim, int modes);
  /// Rows of `centers` and `log_widths` are modes.
  RbfModel(Matrix centers, Matrix log_widths, Eigen::VectorXd weights);

  /// Centers uniform in `box`, every width a quarter of the box edge, weights 0.
  static RbfModel initialized(int modes, const Box& box, std::uint64_t seed);

  int dim_state() const { return static_cast<int>(centers_.cols()); }
  int modes() const { return static_cast<int>(centers_.rows()); }
  int param_count() const { return modes() * (2 * dim_state() + 1); }

  const Matrix& centers() const { return centers_; }
  const Matrix& log_widths() const { return log_widths_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Activation φ_i(x) of one mode.
  double activation(int mode, const StateVec& x) const;

  double value(const StateVec& x) const;
  StateVec gradient(const StateVec& x) const;
  void value_and_gradient(const StateVec& x, double& value, StateVec& gradient) const;
  ParamJacobians param_jacobians(const StateVec& x) const;
  void accumulate_vjp(const StateVec& x, double w_value, const StateVec& w_grad, ParamVec& out) const;

  ParamVec params() const;
  void set_params(const ParamVec& theta);

 private:
  void refresh();

  Matrix centers_;     // modes × d
  Matrix log_widths_;  // modes × d
  Eigen::VectorXd weights_;
  Matrix inv_var_;     // exp(−2 s), kept in sync with log_widths_
};

using ValueModel = std::variant<QuadraticModel, RbfModel>;

double eval_value(const ValueModel& model, const StateVec& x);
StateVec eval_state_gradient(const ValueModel& model, const StateVec& x);
void eval_value_and_gradient(const ValueModel& model, const StateVec& x, double& value, StateVec& gradient);
ParamJacobians eval_param_jacobians(const ValueModel& model, const StateVec& x);
void accumulate_param_vjp(const ValueModel& model, const StateVec& x, double w_value, const StateVec& w_grad,
                          ParamVec& out);

int model_dim_state(const ValueModel& model);
int param_count(const ValueModel& model);
ParamVec get_params(const ValueModel& model);
void set_params(ValueModel& model, const ParamVec& theta);
std::string family_name(const ValueModel& model);

/**
 * Text checkpoint:
 *
 *   pilambda-checkpoint
 *   version 1
 *   family quadratic|rbf
 *   state_dim <d>
 *   modes <n>            (0 for quadratic)
 *   param_count <|θ|>
 *   <one parameter per line, %.17g, in parameter order>
 */
void save_checkpoint(std::ostream& out, const ValueModel& model);
ValueModel load_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ValueModel& model);
ValueModel load_checkpoint(const std::string& path);

}  // namespace pilambda

#endif  // PILAMBDA_VALUE_MODEL_HPP
