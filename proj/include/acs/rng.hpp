/*
 * Copyright 2026 The ACS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace acs {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent sub-seed from a base seed and a path of tags, so
// that every consumer (batch order, attack init, selection units, ...) owns a
// stream that does not shift when another consumer draws more numbers.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(base);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags.
namespace seed_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kBatches = 2;
inline constexpr std::uint64_t kTrainAttack = 3;
inline constexpr std::uint64_t kSelection = 4;
inline constexpr std::uint64_t kUnits = 5;
inline constexpr std::uint64_t kRandomSolver = 6;
inline constexpr std::uint64_t kEval = 7;
inline constexpr std::uint64_t kRetry = 8;
}  // namespace seed_tag

}  // namespace acs
