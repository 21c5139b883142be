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

#include "pilambda/random.hpp"

namespace pilambda {

std::vector<StateVec> sample_uniform(const Box& box, int count, std::uint64_t seed) {
  box.validate("sample_uniform");
  require(count >= 0, "sample_uniform: count must be nonnegative");
  Rng rng(seed);
  std::vector<StateVec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(rng.uniform_in(box));
  return out;
}

}  // namespace pilambda
