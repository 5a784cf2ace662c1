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
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "acs/tensor.hpp"

namespace acs::tensor {

// y = x W + b with W stored (in x out) row-major at `offset`, b right after.
struct DenseOp {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;
  std::size_t param_count() const { return in * out + out; }
};

// ReLU with subgradient 0 at 0.
struct ReluOp {
  std::size_t width = 0;
};

// Cross-correlation over a (C, H, W) layout. Kernel stored
// (out_c, in_c, k, k) at `offset`, bias (out_c) right after.
struct Conv2dOp {
  std::size_t in_channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t offset = 0;

  std::size_t out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  std::size_t in_dim() const { return in_channels * in_height * in_width; }
  std::size_t out_dim() const { return out_channels * out_height() * out_width(); }
  std::size_t param_count() const {
    return out_channels * in_channels * kernel * kernel + out_channels;
  }
};

// Non-overlapping max pooling (window == stride); ties go to the first index.
struct MaxPool2dOp {
  std::size_t channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t size = 2;

  std::size_t out_height() const { return in_height / size; }
  std::size_t out_width() const { return in_width / size; }
  std::size_t in_dim() const { return channels * in_height * in_width; }
  std::size_t out_dim() const { return channels * out_height() * out_width(); }
};

using Op = std::variant<DenseOp, ReluOp, Conv2dOp, MaxPool2dOp>;

struct Layout {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t dim() const { return channels * height * width; }
  bool operator==(const Layout&) const = default;
};

// A straight-line feedforward graph; parameters live in one flat vector that
// the graph only describes.
class Graph {
 public:
  explicit Graph(Layout input);

  Graph& dense(std::size_t out);
  Graph& relu();
  Graph& conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                std::size_t padding);
  Graph& max_pool(std::size_t size);

  const std::vector<Op>& ops() const noexcept { return ops_; }
  std::size_t input_dim() const noexcept { return input_.dim(); }
  const Layout& input_layout() const noexcept { return input_; }
  std::size_t output_dim() const noexcept { return current_.dim(); }
  std::size_t param_count() const noexcept { return param_count_; }

  // The final op, when it is dense; nullptr otherwise.
  const DenseOp* final_dense() const;

 private:
  Layout input_;
  Layout current_;
  std::vector<Op> ops_;
  std::size_t param_count_ = 0;
};

struct GradTargets {
  bool params = true;
  bool input = true;
};

struct Gradients {
  std::vector<double> params;  // empty unless requested
  Tensor input;                // empty unless requested
};

// Saved intermediates of one forward pass. Single-consumer: exactly one
// backward pass is allowed. Holds a view of the parameters, which must
// outlive the tape.
class Tape {
 public:
  Tape() = default;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Parameter gradients are summed over the batch.
  Gradients backward(const Tensor& upstream, GradTargets targets = {});

  bool consumed() const noexcept { return consumed_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t batch() const noexcept { return batch_; }
  // Activations feeding the final dense op, shaped (batch, width).
  const Tensor& penultimate() const;

 private:
  friend struct TapeBuilder;

  struct Node {
    Op op;
    Tensor saved;                  // op input (dense/conv/relu)
    std::vector<std::uint32_t> argmax;  // max-pool winners
  };

  const Graph* graph_ = nullptr;
  std::span<const double> theta_;
  Shape logits_shape_;
  Shape input_shape_;
  std::size_t batch_ = 0;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

struct ForwardResult {
  Tensor logits;
  Tape tape;
};

enum class FiniteCheck { kThrow, kSkip };

// Accepts a (d,) sample or a (batch, d) matrix; logits follow the same rank.
// With kThrow, non-finite logits are rejected; kSkip leaves per-row handling
// to the caller (the attack loop abandons such rows).
ForwardResult forward(const Graph& graph, std::span<const double> theta, const Tensor& input,
                      FiniteCheck check = FiniteCheck::kThrow);

// Forward without keeping intermediates.
Tensor forward_values(const Graph& graph, std::span<const double> theta, const Tensor& input);

std::vector<double> grad_params(Tape& tape, const Tensor& upstream);
Tensor grad_input(Tape& tape, const Tensor& upstream);

}  // namespace acs::tensor
