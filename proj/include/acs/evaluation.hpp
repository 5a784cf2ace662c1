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

#include "acs/attacks.hpp"
#include "acs/data.hpp"
#include "acs/models.hpp"

namespace acs::evaluation {

// argmax(logits) == label, ties to the lowest class.
double clean_accuracy(const models::Model& model, const data::Dataset& dataset);

// A sample is robust when it is classified correctly on the clean input and
// at the point returned by every restart. Restart seeds depend only on
// (seed, sample index, restart), so runs that differ only in epsilon share
// their random starts.
double robust_accuracy(const models::Model& model, const data::Dataset& dataset,
                       const attacks::AttackSpec& spec, std::uint64_t seed);

// PGD-50 with step eps / 8, random start.
attacks::AttackSpec default_eval_attack(attacks::Norm norm, double epsilon, int restarts = 10);

struct AttackResult {
  std::string name;
  attacks::AttackSpec spec;
  double robust_acc = 0.0;
  double wall_time = 0.0;
};

struct EvalReport {
  double clean_acc = 0.0;
  double clean_time = 0.0;
  std::vector<AttackResult> attacks;
  std::uint64_t seed = 0;
  std::vector<std::string> anomalies;  // robust above clean by more than 0.02

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

struct NamedAttack {
  std::string name;
  attacks::AttackSpec spec;
};

EvalReport evaluate(const models::Model& model, const data::Dataset& dataset,
                    std::span<const NamedAttack> attacks, std::uint64_t seed);

struct CurvePoint {
  double epsilon = 0.0;
  double robust_acc = 0.0;
};

// Robust accuracy for each epsilon with the rest of `base` fixed.
std::vector<CurvePoint> epsilon_curve(const models::Model& model, const data::Dataset& dataset,
                                      const attacks::AttackSpec& base,
                                      std::span<const double> epsilons, std::uint64_t seed);

struct RunSummary {
  std::string label;
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  double total_time = 0.0;
  int epochs = 0;
};

struct Comparison {
  RunSummary run;
  double speed_up = 1.0;          // reference total time / this total time
  double clean_delta = 0.0;       // this - reference, in accuracy units
  double robust_delta = 0.0;
  double relative_robust_error = 0.0;  // (err - err_ref) / err_ref
};

// Reads a metrics file (line-delimited epoch records). Throws
// kSchemaMismatch on records missing required fields.
RunSummary summarize_metrics(const std::filesystem::path& path);

// The first run is the reference.
std::vector<Comparison> compare_runs(std::span<const RunSummary> runs);
std::string comparison_table(std::span<const Comparison> rows);
std::string comparison_json(std::span<const Comparison> rows);

}  // namespace acs::evaluation
