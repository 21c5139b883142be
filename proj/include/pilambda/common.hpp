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

#ifndef PILAMBDA_COMMON_HPP
#define PILAMBDA_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pilambda {

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;
using ParamVec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed axis-aligned box, one [lower, upper] interval per coordinate.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const StateVec& x) const;
  double diameter() const { return (upper - lower).norm(); }
  /// Throws ContractViolation unless lower <= upper componentwise and all entries finite.
  void validate(const std::string& what) const;
};

/// Caller broke a documented precondition (dimension mismatch, empty input, bad config value).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An independent reference solver (Riccati, Lyapunov) failed to produce a solution.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form bound constants are not defined for the requested discount.
class BoundInapplicable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw ContractViolation(std::string(what) + ": expected dimension " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace pilambda

#endif  // PILAMBDA_COMMON_HPP
