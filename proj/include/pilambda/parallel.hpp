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

#ifndef PILAMBDA_PARALLEL_HPP
#define PILAMBDA_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pilambda {

/// Worker count for the OpenMP kernels. `workers == 1` runs the serial
/// reference path; 0 means "OpenMP default".
struct Parallelism {
  int workers = 0;

  bool serial() const { return workers == 1; }
  int resolved() const;
};

inline int Parallelism::resolved() const {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  return 1;
#endif
}

/// Evaluate `body(i)` for i in [0, n) and store results by index. Every
/// reduction over the output is done afterwards in index order, so results
/// do not depend on the worker count.
template <typename T, typename Body>
std::vector<T> parallel_map(std::size_t n, const Parallelism& par, Body&& body) {
  std::vector<T> out(n);
  if (par.serial() || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = body(i);
    return out;
  }
  // Exceptions must not cross the OpenMP region; the lowest-index one is rethrown.
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(par.resolved())
  for (long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = body(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace pilambda

#endif  // PILAMBDA_PARALLEL_HPP
