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

#include "acs/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>

#include <json.hpp>

#include "acs/error.hpp"
#include "acs/evaluation.hpp"
#include "acs/rng.hpp"

namespace acs::training {

using nlohmann::json;
using tensor::Tensor;

Mode parse_mode(const std::string& name) {
  if (name == "full") return Mode::kFull;
  if (name == "coreset") return Mode::kCoreset;
  if (name == "half_half") return Mode::kHalfHalf;
  if (name == "fat_baseline") return Mode::kFatBaseline;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown mode '" + name + "' (expected full, coreset, half_half or fat_baseline)");
}

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kFull: return "full";
    case Mode::kCoreset: return "coreset";
    case Mode::kHalfHalf: return "half_half";
    case Mode::kFatBaseline: return "fat_baseline";
  }
  return "?";
}

WarmGap parse_warm_gap(const std::string& name) {
  if (name == "skip") return WarmGap::kSkip;
  if (name == "full") return WarmGap::kFull;
  throw Error(ErrorCode::kInvalidArgument, "unknown warm gap policy '" + name + "' (expected skip or full)");
}

const char* warm_gap_name(WarmGap gap) { return gap == WarmGap::kSkip ? "skip" : "full"; }

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kFull: return "full";
    case Phase::kWarm: return "warm";
    case Phase::kSelection: return "selection";
    case Phase::kSubset: return "subset";
    case Phase::kSkip: return "skip";
  }
  return "?";
}

Phase parse_phase(const std::string& name) {
  for (Phase p : {Phase::kFull, Phase::kWarm, Phase::kSelection, Phase::kSubset, Phase::kSkip}) {
    if (name == phase_name(p)) return p;
  }
  throw Error(ErrorCode::kSchemaMismatch, "unknown phase '" + name + "'");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(lr > 0.0 && std::isfinite(lr))) bad("learning rate must be > 0");
  if (!(lr_decay > 0.0)) bad("lr decay must be > 0");
  if (!(weight_decay >= 0.0)) bad("weight decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum must be in [0, 1)");
  if (batch_size < 1) bad("batch size must be >= 1");
  if (!(kappa >= 0.0 && kappa <= 1.0)) bad("kappa must be in [0, 1]");
  if (period < 1) bad("selection period must be >= 1");
  if (eval_every < 0) bad("eval cadence must be >= 0");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] < 1 || milestones[i] >= epochs) bad("milestones must lie in [1, epochs)");
    if (i > 0 && milestones[i] <= milestones[i - 1]) bad("milestones must be strictly increasing");
  }
  effective_objective(*this).validate();
  if (mode == Mode::kCoreset || mode == Mode::kHalfHalf) selection.validate();
  if (eval_robust) eval_attack.validate();
}

int warm_threshold(double kappa, int epochs, double fraction) {
  return static_cast<int>(std::lround(kappa * static_cast<double>(epochs) * fraction));
}

double learning_rate(const TrainConfig& config, int epoch) {
  double lr = config.lr;
  for (int m : config.milestones) {
    if (m < epoch) lr *= config.lr_decay;
  }
  return lr;
}

objectives::Objective effective_objective(const TrainConfig& config) {
  if (config.mode != Mode::kFatBaseline) return config.objective;
  attacks::AttackSpec a = config.objective.attack;
  a.norm = attacks::Norm::kLinf;
  a.iters = 1;
  a.restarts = 1;
  a.random_init = true;
  return objectives::Objective::adversarial(a);
}

std::string EpochRecord::to_json() const {
  json j;
  j["schema"] = "acs.metrics.v1";
  j["epoch"] = epoch;
  j["phase"] = phase_name(phase);
  j["lr"] = lr;
  j["loss"] = loss;
  j["clean_acc"] = clean_acc;
  j["robust_acc"] = robust_acc ? json(*robust_acc) : json(nullptr);
  j["wall_time"] = wall_time;
  j["cpu_time"] = cpu_time;
  j["matching_error"] = matching_error ? json(*matching_error) : json(nullptr);
  j["active"] = active;
  return j.dump();
}

EpochRecord EpochRecord::from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    if (j.at("schema").get<std::string>() != "acs.metrics.v1") {
      throw Error(ErrorCode::kSchemaMismatch, "not an epoch record");
    }
    EpochRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.phase = parse_phase(j.at("phase").get<std::string>());
    r.lr = j.at("lr").get<double>();
    r.loss = j.at("loss").get<double>();
    r.clean_acc = j.at("clean_acc").get<double>();
    if (!j.at("robust_acc").is_null()) r.robust_acc = j.at("robust_acc").get<double>();
    r.wall_time = j.at("wall_time").get<double>();
    r.cpu_time = j.value("cpu_time", 0.0);
    if (!j.at("matching_error").is_null()) r.matching_error = j.at("matching_error").get<double>();
    r.active = j.at("active").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("malformed epoch record: ") + e.what());
  }
}

namespace {

struct ActiveSet {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // empty means unit weights
  std::vector<char> adversarial_by_sample;  // half_half: per dataset index
};

class Trainer {
 public:
  Trainer(const data::Dataset& dataset, models::Model model, const TrainConfig& config)
      : dataset_(dataset),
        model_(std::move(model)),
        config_(config),
        objective_(effective_objective(config)),
        velocity_(model_.theta().size(), 0.0) {}

  // Returns the mean per-batch loss.
  double run_epoch(int epoch, const ActiveSet& active) {
    const auto batches = data::batches(active.indices, config_.batch_size,
                                       derive_seed(config_.seed, {seed_tag::kBatches,
                                                                  static_cast<std::uint64_t>(epoch)}),
                                       active.weights);
    const double lr = learning_rate(config_, epoch);
    const double scale = 1.0 / static_cast<double>(config_.batch_size);
    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      const Tensor x = dataset_.gather(batch.indices);
      const auto labels = dataset_.gather_labels(batch.indices);
      std::vector<char> mask;
      if (!active.adversarial_by_sample.empty()) {
        mask.resize(batch.indices.size());
        for (std::size_t b = 0; b < mask.size(); ++b) {
          mask[b] = active.adversarial_by_sample[batch.indices[b]];
        }
      }
      const Tensor x_adv = adversarial(epoch, batch.indices, x, labels, mask);
      objectives::LossGrad lg;
      try {
        lg = objectives::weighted_loss_grad(objective_, model_, x, labels, x_adv, batch.weights,
                                            scale, mask);
      } catch (const Error& e) {
        throw TrainingError(epoch, e.what());
      }
      if (!std::isfinite(lg.loss)) throw TrainingError(epoch, "non-finite training loss");
      step(lg.grad, lr);
      loss_sum += lg.loss;
    }
    return batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
  }

  models::Model& model() { return model_; }
  const objectives::Objective& objective() const { return objective_; }

 private:
  Tensor adversarial(int epoch, std::span<const std::size_t> indices, const Tensor& x,
                     std::span<const std::size_t> labels, std::span<const char> mask) {
    if (objective_.kind == objectives::Kind::kVanilla) return x;
    std::vector<std::size_t> rows;
    for (std::size_t b = 0; b < indices.size(); ++b) {
      if (mask.empty() || mask[b]) rows.push_back(b);
    }
    if (rows.empty()) return x;
    std::vector<std::size_t> sub_idx(rows.size()), sub_labels(rows.size());
    std::vector<std::uint64_t> seeds(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sub_idx[r] = indices[rows[r]];
      sub_labels[r] = labels[rows[r]];
      seeds[r] = derive_seed(config_.seed, {seed_tag::kTrainAttack,
                                            static_cast<std::uint64_t>(epoch), sub_idx[r]});
    }
    const Tensor sub = rows.size() == indices.size() ? x : dataset_.gather(sub_idx);
    objectives::AdversarialBatch adv;
    try {
      adv = objectives::adversarial_batch(objective_, model_, sub, sub_labels, seeds);
    } catch (const Error& e) {
      throw TrainingError(epoch, e.what());
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!adv.ok[r]) {
        throw TrainingError(epoch, "training attack failed on sample " + std::to_string(sub_idx[r]));
      }
    }
    if (rows.size() == indices.size()) return std::move(adv.x_adv);
    std::vector<double> out(x.values().begin(), x.values().end());
    const std::size_t d = x.cols();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = adv.x_adv.row(r);
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(rows[r] * d));
    }
    return Tensor(x.shape(), std::move(out));
  }

  void step(const std::vector<double>& grad, double lr) {
    auto& theta = model_.mutable_theta();
    const double mu = config_.momentum, wd = config_.weight_decay;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = grad[i] + wd * theta[i];
      velocity_[i] = mu * velocity_[i] + d;
      theta[i] -= lr * velocity_[i];
    }
  }

  const data::Dataset& dataset_;
  models::Model model_;
  const TrainConfig& config_;
  objectives::Objective objective_;
  std::vector<double> velocity_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TrainResult train(const data::Dataset& dataset, models::Model model, const TrainConfig& config,
                  const data::Dataset* eval, const Hooks& hooks) {
  config.validate();
  if (model.input_dim() != dataset.dim() || model.classes() != dataset.classes()) {
    throw Error(ErrorCode::kShapeMismatch,
                "model expects " + std::to_string(model.input_dim()) + " inputs / " +
                    std::to_string(model.classes()) + " classes, dataset has " +
                    std::to_string(dataset.dim()) + " / " + std::to_string(dataset.classes()));
  }
  const data::Dataset& eval_set = eval ? *eval : dataset;
  const std::size_t n = dataset.size();
  const bool selective = config.mode == Mode::kCoreset || config.mode == Mode::kHalfHalf;
  const bool degenerate = selective && config.selection.fraction >= 1.0;
  const int t_warm = warm_threshold(config.kappa, config.epochs, config.selection.fraction);
  const double kappa_epochs = config.kappa * static_cast<double>(config.epochs);

  ActiveSet everything;
  everything.indices.resize(n);
  std::iota(everything.indices.begin(), everything.indices.end(), std::size_t{0});

  Trainer trainer(dataset, std::move(model), config);
  std::optional<ActiveSet> current;
  TrainResult result{trainer.model(), {}};

  for (int t = 1; t <= config.epochs; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const std::clock_t cpu_start = std::clock();
    EpochRecord rec;
    rec.epoch = t;
    rec.lr = learning_rate(config, t);
    const bool trigger = static_cast<double>(t) >= kappa_epochs && t % config.period == 0;
    const ActiveSet* active = &everything;

    if (!selective) {
      rec.phase = Phase::kFull;
    } else if (degenerate) {
      // The coreset of a full budget is the whole dataset with unit weights.
      rec.phase = t <= t_warm ? Phase::kWarm : (trigger ? Phase::kSelection : Phase::kSubset);
    } else if (t <= t_warm) {
      rec.phase = Phase::kWarm;
    } else if (trigger) {
      rec.phase = Phase::kSelection;
      coreset::Selection sel;
      try {
        sel = coreset::select(dataset, trainer.model(), trainer.objective(), config.selection,
                              derive_seed(config.seed, {seed_tag::kSelection, static_cast<std::uint64_t>(t)}));
      } catch (const Error& e) {
        throw TrainingError(t, std::string("coreset selection failed: ") + e.what());
      }
      rec.matching_error = sel.matching_error;
      ActiveSet next;
      if (config.mode == Mode::kCoreset) {
        next.indices = sel.coreset.sample_ids;
        next.weights = sel.coreset.sample_weights;
      } else {
        // Half-half: weights normalized over the coreset members alone; the
        // rest of the data keeps weight 1 and the clean loss.
        coreset::Coreset core = sel.coreset;
        if (config.selection.normalize_weights) {
          coreset::normalize(core, static_cast<double>(core.sample_ids.size()));
        }
        next.indices = everything.indices;
        next.weights.assign(n, 1.0);
        next.adversarial_by_sample.assign(n, 0);
        for (std::size_t i = 0; i < core.sample_ids.size(); ++i) {
          next.weights[core.sample_ids[i]] = core.sample_weights[i];
          next.adversarial_by_sample[core.sample_ids[i]] = 1;
        }
      }
      current = std::move(next);
      if (hooks.on_selection) hooks.on_selection(t, sel);
    } else if (current) {
      rec.phase = Phase::kSubset;
    } else {
      rec.phase = config.warm_gap == WarmGap::kSkip ? Phase::kSkip : Phase::kWarm;
    }
    if (current && (rec.phase == Phase::kSelection || rec.phase == Phase::kSubset)) active = &*current;

    if (rec.phase != Phase::kSkip) {
      rec.loss = trainer.run_epoch(t, *active);
      rec.active = active->indices.size();
    }
    rec.wall_time = std::max(seconds_since(start), 1e-9);
    rec.cpu_time = std::max(static_cast<double>(std::clock() - cpu_start) / CLOCKS_PER_SEC, 1e-9);

    rec.clean_acc = evaluation::clean_accuracy(trainer.model(), eval_set);
    const bool cadence = t == config.epochs || (config.eval_every > 0 && t % config.eval_every == 0);
    if (config.eval_robust && cadence) {
      try {
        rec.robust_acc = evaluation::robust_accuracy(trainer.model(), eval_set, config.eval_attack,
                                                     derive_seed(config.seed, {seed_tag::kEval}));
      } catch (const Error& e) {
        throw TrainingError(t, std::string("evaluation failed: ") + e.what());
      }
    }
    result.records.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, trainer.model());
  }
  result.model = trainer.model();
  return result;
}

TrainResult train_half_half(const data::Dataset& dataset, models::Model model,
                            const TrainConfig& config, const data::Dataset* eval,
                            const Hooks& hooks) {
  if (config.mode != Mode::kHalfHalf) {
    throw Error(ErrorCode::kInvalidArgument, "train_half_half needs mode half_half");
  }
  return train(dataset, std::move(model), config, eval, hooks);
}

}  // namespace acs::training
