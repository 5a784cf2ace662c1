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
#include <vector>

#include "acs/graph.hpp"
#include "acs/tensor.hpp"

namespace acs::data {

// n x d inputs in [0, 1] plus labels in [0, k). Read-only after construction.
class Dataset {
 public:
  Dataset(std::vector<double> inputs, std::vector<std::size_t> labels, std::size_t classes,
          tensor::Layout layout, std::string provenance);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return layout_.dim(); }
  std::size_t classes() const noexcept { return classes_; }
  const tensor::Layout& layout() const noexcept { return layout_; }
  const std::string& provenance() const noexcept { return provenance_; }

  std::span<const double> inputs() const noexcept { return inputs_; }
  std::span<const std::size_t> labels() const noexcept { return labels_; }
  std::span<const double> row(std::size_t i) const { return {inputs_.data() + i * dim(), dim()}; }
  std::size_t label(std::size_t i) const { return labels_[i]; }

  // Rows `indices` stacked into a (B, d) tensor.
  tensor::Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> gather_labels(std::span<const std::size_t> indices) const;
  // A new dataset holding `indices`; `tag` is appended to the provenance.
  Dataset subset(std::span<const std::size_t> indices, const std::string& tag) const;

 private:
  std::vector<double> inputs_;
  std::vector<std::size_t> labels_;
  std::size_t classes_;
  tensor::Layout layout_;
  std::string provenance_;
};

// k Gaussian clusters whose means sit on the unit circle of the first two
// coordinates; labels balanced within one, order shuffled; min-max rescaled
// (one global affine map) into [0, 1].
Dataset gen_blobs(std::size_t n, std::size_t k, std::size_t d, double spread, std::uint64_t seed);

// Two interleaved half circles on an evenly spaced angle grid, optional
// Gaussian noise, global min-max rescaling into [0, 1]^2.
Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

// IDX (MNIST) image/label pair; pixels scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
// Writes inputs quantized to round(255 x).
void save_idx(const Dataset& dataset, const std::filesystem::path& images,
              const std::filesystem::path& labels);

// blobs:n=..,k=..,d=..,spread=..,seed=..   moons:n=..,noise=..,seed=..
// idx:images=PATH,labels=PATH
Dataset from_uri(const std::string& uri);

struct Batch {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // empty when unweighted
};

// Seeded permutation of `active` cut into consecutive batches; the last one
// may be short. Weights, when given, are aligned with `active` and travel
// with their samples.
std::vector<Batch> batches(std::span<const std::size_t> active, std::size_t batch_size,
                           std::uint64_t seed, std::span<const double> weights = {});
std::vector<Batch> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

}  // namespace acs::data
