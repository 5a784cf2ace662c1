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

#include "acs/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "acs/error.hpp"

namespace acs {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kTapeConsumed: return "tape_consumed";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kAttackFailed: return "attack_failed";
    case ErrorCode::kDegenerateSelection: return "degenerate_selection";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kWrongMagic: return "wrong_magic";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCountMismatch: return "count_mismatch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kSchemaMismatch: return "schema_mismatch";
    case ErrorCode::kTraining: return "training";
  }
  return "unknown";
}

namespace tensor {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t expected =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  if (expected != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor shape " + shape_to_string(shape_) + " needs " +
                                               std::to_string(expected) + " values, got " +
                                               std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> Tensor::release() && {
  shape_.clear();
  return std::move(data_);
}

}  // namespace tensor
}  // namespace acs
