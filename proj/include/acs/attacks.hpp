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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "acs/models.hpp"
#include "acs/tensor.hpp"

namespace acs::attacks {

enum class Norm { kLinf, kL2 };

// What the ascent maximizes: CE against the label, or CE against a soft
// target given as logits (the TRADES inner problem).
enum class LossKind { kLabel, kSoft };

struct AttackSpec {
  Norm norm = Norm::kLinf;
  double epsilon = 0.0;
  double step_size = 0.0;
  int iters = 1;
  int restarts = 1;
  bool random_init = false;
  LossKind loss = LossKind::kLabel;

  void validate() const;
  bool operator==(const AttackSpec&) const = default;
};

Norm parse_norm(const std::string& name);
const char* norm_name(Norm norm);

// Projects onto {||p - center|| <= eps} intersected with [0, 1]^d. Feasible
// points come back bit-identical.
void project(std::span<double> point, std::span<const double> center, Norm norm, double epsilon);
std::vector<double> projected(std::span<const double> point, std::span<const double> center,
                              Norm norm, double epsilon);

// linf: per-coordinate U(-eps, eps). l2: Gaussian direction scaled by u * eps,
// u ~ U(0, 1). Both are clipped to the box afterwards.
std::vector<double> random_init(std::span<const double> x, Norm norm, double epsilon,
                                std::uint64_t seed);

struct Targets {
  std::span<const std::size_t> labels;     // LossKind::kLabel
  const tensor::Tensor* logits = nullptr;  // LossKind::kSoft, (B, k)
};

// Called after every projected step with the new (B, d) iterate.
using IterateObserver =
    std::function<void(int restart, int iter, const tensor::Tensor& iterate)>;

struct AttackOptions {
  bool keep_restarts = false;
  IterateObserver observer;
};

struct BatchAttack {
  tensor::Tensor adversarial;  // (B, d), best iterate over restarts
  std::vector<double> loss;    // loss attained at `adversarial`
  std::vector<char> ok;        // 0 when every restart of the row was abandoned
  // Filled when keep_restarts: per restart, the best iterate of that restart
  // and whether it survived.
  std::vector<tensor::Tensor> restart_points;
  std::vector<std::vector<char>> restart_ok;
};

// Batched PGD. Rows are independent: row b with seed s gives the same result
// whatever batch it sits in. Candidates are the iterates after each step; the
// highest loss wins, ties keep the earliest restart and iterate. A row whose
// loss or gradient turns non-finite abandons that restart.
BatchAttack attack_batch(const models::Model& model, const tensor::Tensor& inputs,
                         const Targets& targets, const AttackSpec& spec,
                         std::span<const std::uint64_t> row_seeds, const AttackOptions& options = {});

// Single-sample wrappers; throw kAttackFailed when no restart survives.
std::vector<double> attack(const models::Model& model, std::span<const double> x, std::size_t label,
                           const AttackSpec& spec, std::uint64_t seed);
std::vector<double> attack_soft(const models::Model& model, std::span<const double> x,
                                std::span<const double> target_logits, const AttackSpec& spec,
                                std::uint64_t seed);

}  // namespace acs::attacks
