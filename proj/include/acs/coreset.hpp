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
#include <span>
#include <string>
#include <vector>

#include "acs/attacks.hpp"
#include "acs/data.hpp"
#include "acs/models.hpp"
#include "acs/objectives.hpp"

namespace acs::coreset {

enum class Solver { kCraig, kGradMatch, kRandom };

Solver parse_solver(const std::string& name);
const char* solver_name(Solver solver);

struct SelectionConfig {
  Solver solver = Solver::kGradMatch;
  double fraction = 0.5;          // share of units kept
  std::size_t unit_batch_size = 1;
  attacks::AttackSpec selection_attack;
  bool normalize_weights = true;
  double residual_tol = 0.0;      // gradmatch early stop
  double lambda_reg = 0.0;        // gradmatch ridge term
  // Top up a solver result smaller than the budget with random units of
  // weight 1.
  bool fill_budget = true;

  void validate() const;
};

// unit -> member sample indices.
using UnitMap = std::vector<std::vector<std::size_t>>;

// Seeded partition of [0, n) into units of `unit_size` (last one may be
// short). unit_size == 1 keeps the natural order.
UnitMap make_units(std::size_t n, std::size_t unit_size, std::uint64_t seed);

struct GradientFeatureMatrix {
  std::size_t dim = 0;
  std::vector<double> rows;  // units x dim, row-major
  UnitMap unit_map;

  std::size_t units() const noexcept { return unit_map.size(); }
  std::span<const double> row(std::size_t u) const { return {rows.data() + u * dim, dim}; }

  // One unit per row, unit u holding sample u.
  static GradientFeatureMatrix from_rows(std::size_t units, std::size_t dim,
                                         std::vector<double> rows);
  void validate() const;
};

struct Coreset {
  std::vector<std::size_t> unit_ids;
  std::vector<double> gamma;
  std::vector<std::size_t> sample_ids;   // members of the selected units
  std::vector<double> sample_weights;    // aligned with sample_ids
};

// Broadcasts unit weights to their members.
void expand(Coreset& coreset, const UnitMap& units);
// Rescales gamma and sample weights so the sample weights sum to `total`.
void normalize(Coreset& coreset, double total);

std::size_t units_for_fraction(std::size_t unit_count, double fraction);

struct SolverTrace {
  std::vector<double> gains;           // craig: marginal gain per pick
  std::vector<double> residual_norms;  // gradmatch: after each pick
  std::vector<std::size_t> order;      // pick order
};

// Budgeted facility-location greedy (lazy evaluation, exact). gamma is the
// cluster size of each pick.
Coreset solve_craig(const GradientFeatureMatrix& features, std::size_t k_units,
                    SolverTrace* trace = nullptr);

// Orthogonal matching pursuit toward the full gradient sum, non-negative
// weights from an exact NNLS refit over the picked atoms, zero weights dropped.
Coreset solve_gradmatch(const GradientFeatureMatrix& features, std::size_t k_units,
                        double residual_tol, double lambda_reg = 0.0, SolverTrace* trace = nullptr);

// Uniform without replacement, unit weights.
Coreset solve_random(std::size_t unit_count, std::size_t k_units, std::uint64_t seed);

// || sum_i g_i - sum_j gamma_j g_j ||_2
double matching_error(const GradientFeatureMatrix& features, const Coreset& coreset);

// Per-unit sums of last-layer gradients under the training objective with
// its attack replaced by the selection attack. A sample whose attack fails
// is retried once with a fresh seed.
GradientFeatureMatrix extract_features(const data::Dataset& dataset, const models::Model& model,
                                       const objectives::Objective& objective,
                                       const SelectionConfig& config, std::uint64_t seed);

struct Selection {
  GradientFeatureMatrix features;
  Coreset coreset;           // expanded, normalized when configured
  std::size_t k_units = 0;
  std::size_t solver_units = 0;  // units chosen by the solver before any top-up
  double matching_error = 0.0;   // before normalization
};

// Adds random units (weight 1) not yet in the coreset until it holds k_units.
void fill_to_budget(Coreset& coreset, std::size_t unit_count, std::size_t k_units,
                    std::uint64_t seed);

Selection select(const data::Dataset& dataset, const models::Model& model,
                 const objectives::Objective& objective, const SelectionConfig& config,
                 std::uint64_t seed);

// One line-delimited JSON record for the select-trace export.
std::string trace_record(int epoch, Solver solver, const Selection& selection);

}  // namespace acs::coreset
