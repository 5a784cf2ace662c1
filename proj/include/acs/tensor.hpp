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
#include <string>
#include <vector>

namespace acs::tensor {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

// Dense row-major float64 array. Immutable after construction; operations
// produce new tensors.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  // Wraps a flat vector as a (1, n) batch.
  static Tensor row_vector(std::span<const double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Leading dimension and the flattened size of the rest.
  std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const noexcept { return rows() == 0 ? 0 : data_.size() / rows(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  double operator[](std::size_t i) const { return data_[i]; }

  bool all_finite() const noexcept;

  // Moves the buffer out; leaves the tensor empty.
  std::vector<double> release() &&;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace acs::tensor
