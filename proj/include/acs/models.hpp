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
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "acs/graph.hpp"
#include "acs/tensor.hpp"

namespace acs::models {

enum class Activation { kNone, kRelu };

struct DenseLayer {
  std::size_t units = 0;
  Activation activation = Activation::kRelu;
  bool operator==(const DenseLayer&) const = default;
};

// Convolution followed by an optional activation and max-pool (pool <= 1
// disables pooling).
struct ConvLayer {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  Activation activation = Activation::kRelu;
  std::size_t pool = 2;
  bool operator==(const ConvLayer&) const = default;
};

using LayerSpec = std::variant<DenseLayer, ConvLayer>;

// Hidden layers only; the final dense classifier with `classes` outputs is
// implied and always present.
struct ModelSpec {
  std::string arch = "mlp";
  tensor::Layout input;
  std::vector<LayerSpec> layers;
  std::size_t classes = 2;

  bool operator==(const ModelSpec&) const = default;
};

ModelSpec make_mlp(std::size_t input_dim, std::vector<std::size_t> widths, std::size_t classes);
// Two conv blocks (3x3, pad 1, ReLU, 2x2 max-pool) and two dense layers.
ModelSpec make_cnn_small(tensor::Layout input, std::size_t classes, std::size_t conv1 = 8,
                         std::size_t conv2 = 16, std::size_t hidden = 64);

void validate(const ModelSpec& spec);
tensor::Graph build_graph(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);

// Structured text: one `key = value` line per field.
std::string spec_to_text(const ModelSpec& spec);
ModelSpec spec_from_text(const std::string& text);

class Model {
 public:
  Model(ModelSpec spec, std::vector<double> theta, std::uint64_t seed = 0);

  const ModelSpec& spec() const noexcept { return spec_; }
  const tensor::Graph& graph() const noexcept { return graph_; }
  std::span<const double> theta() const noexcept { return theta_; }
  std::vector<double>& mutable_theta() noexcept { return theta_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_dim() const noexcept { return graph_.input_dim(); }
  std::size_t classes() const noexcept { return spec_.classes; }

  // Offset and size of the final dense block inside theta.
  std::size_t last_layer_offset() const;
  std::size_t last_layer_size() const;
  std::size_t penultimate_dim() const;

  tensor::ForwardResult forward(const tensor::Tensor& input,
                                tensor::FiniteCheck check = tensor::FiniteCheck::kThrow) const;
  tensor::Tensor logits(const tensor::Tensor& input) const;

 private:
  ModelSpec spec_;
  tensor::Graph graph_;
  std::vector<double> theta_;
  std::uint64_t seed_;
};

// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases zero.
Model init(const ModelSpec& spec, std::uint64_t seed);

double ce_loss(std::span<const double> logits, std::size_t label);
double ce_soft_loss(std::span<const double> logits, std::span<const double> target_logits);

// Activations feeding the final dense layer; (d,) -> (h,), (B, d) -> (B, h).
tensor::Tensor penultimate(const Model& model, const tensor::Tensor& input);

// Checkpoint: "ACSCKPT 1" line, spec text, "params = N", "end" line, then N
// little-endian float32 values.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace acs::models
