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

#include "acs/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "acs/error.hpp"

namespace acs::tensor {

namespace {

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

void softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - m);
    s += out[c];
  }
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] /= s;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  const double lse = log_sum_exp(logits);
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] = logits[c] - lse;
}

double cross_entropy(std::span<const double> logits, std::size_t label, std::span<double> dlogits) {
  if (label >= logits.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) +
                                                 " out of range for " +
                                                 std::to_string(logits.size()) + " classes");
  }
  const double loss = log_sum_exp(logits) - logits[label];
  if (!dlogits.empty()) {
    softmax(logits, dlogits);
    dlogits[label] -= 1.0;
  }
  return loss;
}

double soft_cross_entropy(std::span<const double> logits, std::span<const double> target,
                          std::span<double> dlogits, std::span<double> dtarget) {
  if (logits.size() != target.size()) {
    throw Error(ErrorCode::kShapeMismatch, "soft cross-entropy: logits have " +
                                               std::to_string(logits.size()) + " entries, target " +
                                               std::to_string(target.size()));
  }
  const std::size_t k = logits.size();
  std::vector<double> p(k), logq(k);
  softmax(target, p);
  log_softmax(logits, logq);
  double loss = 0.0;
  for (std::size_t c = 0; c < k; ++c) loss -= p[c] * logq[c];
  if (!dlogits.empty()) {
    softmax(logits, dlogits);
    for (std::size_t c = 0; c < k; ++c) dlogits[c] -= p[c];
  }
  if (!dtarget.empty()) {
    // d/dt_j [-sum_c p_c logq_c] = -p_j (logq_j - sum_c p_c logq_c)
    for (std::size_t c = 0; c < k; ++c) dtarget[c] = -p[c] * (logq[c] + loss);
  }
  return loss;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace acs::tensor
