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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "acs/attacks.hpp"
#include "acs/coreset.hpp"
#include "acs/data.hpp"
#include "acs/models.hpp"
#include "acs/objectives.hpp"

namespace acs::training {

enum class Mode { kFull, kCoreset, kHalfHalf, kFatBaseline };
Mode parse_mode(const std::string& name);
const char* mode_name(Mode mode);

// Epochs after the warm start but before the first selection.
//   skip  no update (the run's budget stays that of the coreset schedule)
//   full  keep training on the whole dataset
enum class WarmGap { kSkip, kFull };
WarmGap parse_warm_gap(const std::string& name);
const char* warm_gap_name(WarmGap gap);

enum class Phase { kFull, kWarm, kSelection, kSubset, kSkip };
const char* phase_name(Phase phase);
Phase parse_phase(const std::string& name);

struct TrainConfig {
  double lr = 0.1;
  int epochs = 40;
  std::vector<int> milestones;
  double lr_decay = 0.1;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  double kappa = 0.5;
  int period = 8;
  WarmGap warm_gap = WarmGap::kSkip;
  Mode mode = Mode::kFull;
  objectives::Objective objective;  // training objective with its attack
  coreset::SelectionConfig selection;
  std::uint64_t seed = 0;

  // In-training evaluation; robust accuracy every `eval_every` epochs and at
  // the last epoch (0 = last epoch only).
  int eval_every = 5;
  attacks::AttackSpec eval_attack;
  bool eval_robust = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  Phase phase = Phase::kFull;
  double lr = 0.0;
  double loss = 0.0;  // mean weighted objective over the epoch's batches
  double clean_acc = 0.0;
  std::optional<double> robust_acc;
  double wall_time = 0.0;  // training work only, evaluation excluded
  double cpu_time = 0.0;   // process CPU seconds over the same span
  std::optional<double> matching_error;
  std::size_t active = 0;

  std::string to_json() const;
  static EpochRecord from_json(const std::string& line);
};

// round(kappa * E * fraction)
int warm_threshold(double kappa, int epochs, double fraction);

// alpha * decay^(milestones strictly before epoch t), epochs 1-based.
double learning_rate(const TrainConfig& config, int epoch);

// The objective actually optimized in a mode (fat_baseline pins the attack).
objectives::Objective effective_objective(const TrainConfig& config);

struct Hooks {
  std::function<void(int epoch, const coreset::Selection&)> on_selection;
  std::function<void(const EpochRecord&, const models::Model&)> on_epoch;
};

struct TrainResult {
  models::Model model;
  std::vector<EpochRecord> records;
};

// Coreset schedule plus the full, half-half and fat baselines. `eval` (may be null) receives the
// per-epoch accuracy measurements; the training set is used otherwise.
// Throws TrainingError naming the epoch on selection failure or non-finite
// loss.
TrainResult train(const data::Dataset& dataset, models::Model model, const TrainConfig& config,
                  const data::Dataset* eval = nullptr, const Hooks& hooks = {});

// train() restricted to mode half_half: coreset members get the adversarial
// loss with their weights, the other samples the clean loss with weight 1,
// all in the same batches.
TrainResult train_half_half(const data::Dataset& dataset, models::Model model,
                            const TrainConfig& config, const data::Dataset* eval = nullptr,
                            const Hooks& hooks = {});

}  // namespace acs::training
