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

#include "acs/config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "acs/error.hpp"
#include "acs/rng.hpp"
#include "default_config.hpp"
#include "text_util.hpp"

namespace acs::config {

const std::string& default_text() {
  static const std::string text(kDefaultConfigText);
  return text;
}

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

// Parses `key = value` lines. Blank lines and lines starting with '#' are
// ignored; values may be empty.
Entries parse_lines(const std::string& text, const std::string& origin) {
  Entries out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = text_util::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", origin + ":" + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    std::string key = text_util::trim(t.substr(0, eq));
    std::string value = text_util::trim(t.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError(key, origin + ":" + std::to_string(line_no) + ": duplicate key");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

template <typename F>
auto typed(const std::string& key, const std::string& value, F&& f) {
  try {
    return f(value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.entries_ = parse_lines(default_text(), "default config");
  return c;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c = defaults();
  for (const auto& [k, v] : parse_lines(text, origin)) c.set(k, v);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = text_util::trim(value);
      return;
    }
  }
  throw ConfigError(key, "unknown configuration key");
}

void RunConfig::apply_overrides(const std::vector<std::string>& overrides) {
  for (const std::string& raw : overrides) {
    std::string s = raw;
    if (s.rfind("--", 0) == 0) s = s.substr(2);
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(s, "override needs the form --section.key=value");
    set(text_util::trim(s.substr(0, eq)), s.substr(eq + 1));
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw ConfigError(key, "unknown configuration key");
}

bool RunConfig::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "# resolved configuration\n";
  for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
  return os.str();
}

namespace {

double get_double(const RunConfig& c, const std::string& key) {
  return typed(key, c.get(key), [](const std::string& v) { return text_util::parse_double(v); });
}

long long get_int(const RunConfig& c, const std::string& key) {
  return typed(key, c.get(key), [](const std::string& v) { return text_util::parse_int(v); });
}

std::size_t get_size(const RunConfig& c, const std::string& key) {
  return typed(key, c.get(key), [](const std::string& v) { return text_util::parse_size(v); });
}

bool get_bool(const RunConfig& c, const std::string& key) {
  return typed(key, c.get(key), [](const std::string& v) { return text_util::parse_bool(v); });
}

std::vector<std::size_t> get_sizes(const RunConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  std::vector<std::size_t> out;
  if (text_util::trim(v).empty()) return out;
  for (const auto& item : text_util::split(v, ',')) {
    out.push_back(typed(key, item, [](const std::string& s) { return text_util::parse_size(s); }));
  }
  return out;
}

attacks::AttackSpec get_attack(const RunConfig& c, const std::string& prefix) {
  attacks::AttackSpec a;
  a.norm = typed(prefix + "norm", c.get(prefix + "norm"),
                 [](const std::string& v) { return attacks::parse_norm(v); });
  a.epsilon = get_double(c, prefix + "epsilon");
  a.step_size = get_double(c, prefix + "step_size");
  a.iters = static_cast<int>(get_int(c, prefix + "iters"));
  a.restarts = static_cast<int>(get_int(c, prefix + "restarts"));
  a.random_init = get_bool(c, prefix + "random_init");
  try {
    a.validate();
  } catch (const Error& e) {
    throw ConfigError(prefix + "*", e.what());
  }
  return a;
}

}  // namespace

std::uint64_t RunConfig::seed() const {
  return typed("train.seed", get("train.seed"), [](const std::string& v) { return text_util::parse_u64(v); });
}

std::string RunConfig::run_name() const {
  const std::string& name = get("run.name");
  if (name.empty()) throw ConfigError("run.name", "must not be empty");
  return name;
}

int RunConfig::checkpoint_every() const {
  const long long n = get_int(*this, "run.checkpoint_every");
  if (n < 0) throw ConfigError("run.checkpoint_every", "must be >= 0");
  return static_cast<int>(n);
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.mode = typed("train.mode", get("train.mode"), [](const std::string& v) { return training::parse_mode(v); });
  t.lr = get_double(*this, "train.lr");
  t.epochs = static_cast<int>(get_int(*this, "train.epochs"));
  for (std::size_t m : get_sizes(*this, "train.milestones")) t.milestones.push_back(static_cast<int>(m));
  t.lr_decay = get_double(*this, "train.lr_decay");
  t.weight_decay = get_double(*this, "train.weight_decay");
  t.momentum = get_double(*this, "train.momentum");
  t.batch_size = get_size(*this, "train.batch_size");
  t.kappa = get_double(*this, "train.kappa");
  t.period = static_cast<int>(get_int(*this, "train.period"));
  t.warm_gap = typed("train.warm_gap", get("train.warm_gap"),
                     [](const std::string& v) { return training::parse_warm_gap(v); });
  t.seed = seed();

  const auto kind = typed("train.objective", get("train.objective"),
                          [](const std::string& v) { return objectives::parse_kind(v); });
  const attacks::AttackSpec attack = get_attack(*this, "attack.");
  switch (kind) {
    case objectives::Kind::kVanilla: t.objective = objectives::Objective::vanilla(); break;
    case objectives::Kind::kAdversarial: t.objective = objectives::Objective::adversarial(attack); break;
    case objectives::Kind::kTrades:
      t.objective = objectives::Objective::trades(attack, get_double(*this, "train.lambda_inv"));
      break;
  }

  t.selection.solver = typed("selection.solver", get("selection.solver"),
                             [](const std::string& v) { return coreset::parse_solver(v); });
  t.selection.fraction = get_double(*this, "selection.fraction");
  t.selection.unit_batch_size = get_size(*this, "selection.unit_batch_size");
  t.selection.normalize_weights = get_bool(*this, "selection.normalize_weights");
  t.selection.fill_budget = get_bool(*this, "selection.fill_budget");
  t.selection.residual_tol = get_double(*this, "selection.residual_tol");
  t.selection.lambda_reg = get_double(*this, "selection.lambda_reg");
  t.selection.selection_attack = get_attack(*this, "selection.attack.");

  t.eval_every = static_cast<int>(get_int(*this, "eval.every"));
  t.eval_robust = get_bool(*this, "eval.robust");
  t.eval_attack = get_attack(*this, "eval.");

  auto check = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  };
  check(t.objective.kind == objectives::Kind::kTrades ? "train.lambda_inv" : "attack",
        [&] { training::effective_objective(t).validate(); });
  if (t.mode == training::Mode::kCoreset || t.mode == training::Mode::kHalfHalf) {
    check("selection", [&] { t.selection.validate(); });
  }
  check("train", [&] { t.validate(); });
  return t;
}

models::ModelSpec RunConfig::model_spec(const data::Dataset& dataset) const {
  const std::string& arch = get("model.arch");
  const auto hidden = get_sizes(*this, "model.hidden");
  if (arch == "mlp") {
    return models::make_mlp(dataset.dim(), hidden, dataset.classes());
  }
  if (arch == "cnn_small" || arch == "cnn-small") {
    const auto conv = get_sizes(*this, "model.conv");
    if (conv.size() != 2) throw ConfigError("model.conv", "cnn_small needs two channel counts");
    const std::size_t dense = hidden.empty() ? 64 : hidden.front();
    try {
      return models::make_cnn_small(dataset.layout(), dataset.classes(), conv[0], conv[1], dense);
    } catch (const Error& e) {
      throw ConfigError("model.arch", e.what());
    }
  }
  throw ConfigError("model.arch", "unknown architecture '" + arch + "' (expected mlp or cnn_small)");
}

std::pair<data::Dataset, data::Dataset> RunConfig::datasets() const {
  const std::string& uri = get("data.train");
  data::Dataset all = typed("data.train", uri, [](const std::string& v) { return data::from_uri(v); });
  const std::string& eval_uri = get("data.eval");
  if (!eval_uri.empty()) {
    data::Dataset eval = typed("data.eval", eval_uri, [](const std::string& v) { return data::from_uri(v); });
    if (eval.dim() != all.dim() || eval.classes() > all.classes()) {
      throw ConfigError("data.eval", "evaluation data does not match the training data shape");
    }
    return {std::move(all), std::move(eval)};
  }
  const std::size_t holdout = get_size(*this, "data.holdout");
  if (holdout == 0) {
    data::Dataset eval = all;
    return {std::move(all), std::move(eval)};
  }
  if (holdout >= all.size()) throw ConfigError("data.holdout", "must be smaller than the dataset");
  std::vector<std::size_t> train_idx(all.size() - holdout), eval_idx(holdout);
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  std::iota(eval_idx.begin(), eval_idx.end(), all.size() - holdout);
  return {all.subset(train_idx, "train"), all.subset(eval_idx, "holdout")};
}

}  // namespace acs::config
