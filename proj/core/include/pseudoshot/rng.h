// Copyright 2026 The Pseudoshot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSEUDOSHOT_RNG_H_
#define PSEUDOSHOT_RNG_H_

#include <cstdint>
#include <random>

namespace pseudoshot {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index). Used to give every episode,
// phase and seed its own generator so results do not depend on call order.
inline Rng MakeStream(uint64_t seed, uint64_t stream, uint64_t salt = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32),
                    static_cast<uint32_t>(salt), static_cast<uint32_t>(salt >> 32)};
  return Rng(seq);
}

}  // namespace pseudoshot

#endif  // PSEUDOSHOT_RNG_H_
