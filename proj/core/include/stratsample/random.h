// Copyright 2026 The StratSample Authors.
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

#ifndef STRATSAMPLE_RANDOM_H_
#define STRATSAMPLE_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace stratsample {

// All randomness in the library flows through this engine. The caller owns
// it; an Rng must not be shared between threads without external locking.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one engine output.
// Unlike std::uniform_real_distribution the result is identical across
// standard library implementations.
double uniform01(Rng& rng);

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent sub-seed from a root seed and a path of indices,
// e.g. derive_seed(root, {question, sample}).
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path);

}  // namespace stratsample

#endif  // STRATSAMPLE_RANDOM_H_
