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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acs/attacks.hpp"
#include "acs/models.hpp"
#include "acs/tensor.hpp"

namespace acs::objectives {

enum class Kind { kVanilla, kAdversarial, kTrades };

Kind parse_kind(const std::string& name);
const char* kind_name(Kind kind);

// Per-sample training loss:
//   vanilla      CE(f(x), y)
//   adversarial  CE(f(x_adv), y), x_adv maximizing CE against y
//   trades       CE(f(x), y) + lambda_inv * CE(f(x_adv), softmax f(x)),
//                x_adv maximizing the second term
struct Objective {
  Kind kind = Kind::kVanilla;
  attacks::AttackSpec attack;
  double lambda_inv = 0.0;

  static Objective vanilla();
  static Objective adversarial(const attacks::AttackSpec& attack);
  static Objective trades(const attacks::AttackSpec& attack, double lambda_inv);

  void validate() const;
  // `attack` with the loss kind this objective maximizes.
  attacks::AttackSpec inner_attack() const;
};

struct PhiValue {
  double loss = 0.0;
  std::optional<std::vector<double>> x_adv;
};

PhiValue phi(const Objective& objective, const models::Model& model, std::span<const double> x,
             std::size_t label, std::uint64_t seed);

// Flat theta-gradient with x_adv frozen. The seeded form reruns the attack.
std::vector<double> phi_grad(const Objective& objective, const models::Model& model,
                             std::span<const double> x, std::size_t label, std::uint64_t seed);
std::vector<double> phi_grad_at(const Objective& objective, const models::Model& model,
                                std::span<const double> x, std::size_t label,
                                std::span<const double> x_adv);

// The final dense block of phi_grad, computed from one forward pass per branch.
std::vector<double> last_layer_grad(const Objective& objective, const models::Model& model,
                                    std::span<const double> x, std::size_t label,
                                    std::uint64_t seed);
std::vector<double> last_layer_grad_at(const Objective& objective, const models::Model& model,
                                       std::span<const double> x, std::size_t label,
                                       std::span<const double> x_adv);

// Batched forms. Rows are independent; a row attacked with seed s matches the
// single-sample result with seed s.
struct AdversarialBatch {
  tensor::Tensor x_adv;
  std::vector<char> ok;
};

AdversarialBatch adversarial_batch(const Objective& objective, const models::Model& model,
                                   const tensor::Tensor& inputs, std::span<const std::size_t> labels,
                                   std::span<const std::uint64_t> row_seeds);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// scale * sum_b weights[b] * Phi_b and its gradient. Rows with
// adversarial[b] == 0 use the vanilla loss; an empty mask means all rows use
// the objective.
LossGrad weighted_loss_grad(const Objective& objective, const models::Model& model,
                            const tensor::Tensor& inputs, std::span<const std::size_t> labels,
                            const tensor::Tensor& x_adv, std::span<const double> weights,
                            double scale, std::span<const char> adversarial = {});

// One last-layer gradient row per sample, (B, last_layer_size).
tensor::Tensor last_layer_features(const Objective& objective, const models::Model& model,
                                   const tensor::Tensor& inputs,
                                   std::span<const std::size_t> labels,
                                   const tensor::Tensor& x_adv);

}  // namespace acs::objectives
