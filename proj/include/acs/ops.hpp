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

#include <cstddef>
#include <span>

// Fused softmax / cross-entropy primitives. All use the max-shifted
// log-sum-exp.
namespace acs::tensor {

void softmax(std::span<const double> logits, std::span<double> out);
void log_softmax(std::span<const double> logits, std::span<double> out);

// -log softmax(logits)[label]. When `dlogits` is non-empty it receives
// softmax(logits) - onehot(label).
double cross_entropy(std::span<const double> logits, std::size_t label,
                     std::span<double> dlogits = {});

// -sum softmax(target) * log softmax(logits). Optional outputs:
//   dlogits = softmax(logits) - softmax(target)
//   dtarget = -softmax(target) * (log softmax(logits) - <softmax(target), log softmax(logits)>)
double soft_cross_entropy(std::span<const double> logits, std::span<const double> target,
                          std::span<double> dlogits = {}, std::span<double> dtarget = {});

// Lowest index among maximal entries.
std::size_t argmax(std::span<const double> values);

}  // namespace acs::tensor
