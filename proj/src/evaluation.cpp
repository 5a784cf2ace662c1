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

#include "acs/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "acs/error.hpp"
#include "acs/ops.hpp"
#include "acs/rng.hpp"

namespace acs::evaluation {

using nlohmann::json;
using tensor::Tensor;

namespace {

constexpr std::size_t kChunk = 512;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<char> correct_mask(const models::Model& model, const Tensor& x,
                               std::span<const std::size_t> labels) {
  const Tensor z = model.logits(x);
  std::vector<char> ok(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) ok[b] = tensor::argmax(z.row(b)) == labels[b];
  return ok;
}

}  // namespace

double clean_accuracy(const models::Model& model, const data::Dataset& dataset) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    std::vector<std::size_t> idx(std::min(dataset.size(), start + kChunk) - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto labels = dataset.gather_labels(idx);
    const auto ok = correct_mask(model, dataset.gather(idx), labels);
    correct += static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

double robust_accuracy(const models::Model& model, const data::Dataset& dataset,
                       const attacks::AttackSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.epsilon == 0.0) return clean_accuracy(model, dataset);
  attacks::AttackSpec s = spec;
  s.loss = attacks::LossKind::kLabel;
  attacks::AttackOptions options;
  options.keep_restarts = true;

  std::size_t robust = 0;
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    std::vector<std::size_t> all(std::min(dataset.size(), start + kChunk) - start);
    std::iota(all.begin(), all.end(), start);
    const auto all_labels = dataset.gather_labels(all);
    const auto clean_ok = correct_mask(model, dataset.gather(all), all_labels);
    std::vector<std::size_t> idx;
    for (std::size_t b = 0; b < all.size(); ++b) {
      if (clean_ok[b]) idx.push_back(all[b]);
    }
    if (idx.empty()) continue;
    const Tensor x = dataset.gather(idx);
    const auto labels = dataset.gather_labels(idx);
    std::vector<std::uint64_t> seeds(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) seeds[b] = derive_seed(seed, {seed_tag::kEval, idx[b]});
    const attacks::BatchAttack res =
        attacks::attack_batch(model, x, attacks::Targets{labels, nullptr}, s, seeds, options);
    std::vector<char> still(idx.size(), 1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      if (!res.ok[b]) {
        throw Error(ErrorCode::kAttackFailed,
                    "every restart failed on evaluation sample " + std::to_string(idx[b]));
      }
    }
    for (std::size_t r = 0; r < res.restart_points.size(); ++r) {
      const auto ok = correct_mask(model, res.restart_points[r], labels);
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (res.restart_ok[r][b] && !ok[b]) still[b] = 0;
      }
    }
    robust += static_cast<std::size_t>(std::count(still.begin(), still.end(), 1));
  }
  return static_cast<double>(robust) / static_cast<double>(dataset.size());
}

attacks::AttackSpec default_eval_attack(attacks::Norm norm, double epsilon, int restarts) {
  attacks::AttackSpec s;
  s.norm = norm;
  s.epsilon = epsilon;
  s.step_size = epsilon / 8.0;
  s.iters = 50;
  s.restarts = restarts;
  s.random_init = true;
  return s;
}

namespace {

json spec_json(const attacks::AttackSpec& s) {
  return json{{"norm", attacks::norm_name(s.norm)}, {"epsilon", s.epsilon},
              {"step_size", s.step_size},          {"iters", s.iters},
              {"restarts", s.restarts},            {"random_init", s.random_init}};
}

attacks::AttackSpec spec_from(const json& j) {
  attacks::AttackSpec s;
  s.norm = attacks::parse_norm(j.at("norm").get<std::string>());
  s.epsilon = j.at("epsilon").get<double>();
  s.step_size = j.at("step_size").get<double>();
  s.iters = j.at("iters").get<int>();
  s.restarts = j.at("restarts").get<int>();
  s.random_init = j.at("random_init").get<bool>();
  return s;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["schema"] = "acs.eval.v1";
  j["clean_acc"] = clean_acc;
  j["clean_time"] = clean_time;
  j["seed"] = seed;
  j["attacks"] = json::array();
  for (const auto& a : attacks) {
    j["attacks"].push_back(
        {{"name", a.name}, {"spec", spec_json(a.spec)}, {"robust_acc", a.robust_acc}, {"wall_time", a.wall_time}});
  }
  j["anomalies"] = anomalies;
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "acs.eval.v1") {
      throw Error(ErrorCode::kSchemaMismatch, "not an evaluation report");
    }
    EvalReport r;
    r.clean_acc = j.at("clean_acc").get<double>();
    r.clean_time = j.at("clean_time").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& a : j.at("attacks")) {
      r.attacks.push_back({a.at("name").get<std::string>(), spec_from(a.at("spec")),
                           a.at("robust_acc").get<double>(), a.at("wall_time").get<double>()});
    }
    r.anomalies = j.at("anomalies").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("malformed evaluation report: ") + e.what());
  }
}

EvalReport evaluate(const models::Model& model, const data::Dataset& dataset,
                    std::span<const NamedAttack> attacks, std::uint64_t seed) {
  EvalReport report;
  report.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  report.clean_acc = clean_accuracy(model, dataset);
  report.clean_time = seconds_since(t0);
  for (const auto& a : attacks) {
    t0 = std::chrono::steady_clock::now();
    const double acc = robust_accuracy(model, dataset, a.spec, seed);
    report.attacks.push_back({a.name, a.spec, acc, seconds_since(t0)});
    if (acc > report.clean_acc + 0.02) {
      report.anomalies.push_back(a.name + ": robust accuracy exceeds clean accuracy");
    }
  }
  return report;
}

std::vector<CurvePoint> epsilon_curve(const models::Model& model, const data::Dataset& dataset,
                                      const attacks::AttackSpec& base,
                                      std::span<const double> epsilons, std::uint64_t seed) {
  std::vector<CurvePoint> out;
  for (double eps : epsilons) {
    attacks::AttackSpec s = base;
    s.epsilon = eps;
    out.push_back({eps, robust_accuracy(model, dataset, s, seed)});
  }
  return out;
}

RunSummary summarize_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open metrics file " + path.string());
  RunSummary s;
  s.label = path.parent_path().filename().string();
  if (s.label.empty()) s.label = path.filename().string();
  bool any_robust = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.at("schema").get<std::string>() != "acs.metrics.v1") {
        throw Error(ErrorCode::kSchemaMismatch, "unexpected schema");
      }
      s.total_time += j.at("wall_time").get<double>();
      s.clean_acc = j.at("clean_acc").get<double>();
      s.epochs = std::max(s.epochs, j.at("epoch").get<int>());
      const auto& r = j.at("robust_acc");
      if (!r.is_null()) {
        s.robust_acc = r.get<double>();
        any_robust = true;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaMismatch,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaMismatch,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0 || s.epochs == 0) {
    throw Error(ErrorCode::kSchemaMismatch, path.string() + ": no epoch records");
  }
  if (!any_robust) {
    throw Error(ErrorCode::kSchemaMismatch, path.string() + ": no robust accuracy recorded");
  }
  return s;
}

std::vector<Comparison> compare_runs(std::span<const RunSummary> runs) {
  if (runs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "comparison needs at least two runs");
  const RunSummary& ref = runs.front();
  const double ref_err = 1.0 - ref.robust_acc;
  std::vector<Comparison> out;
  for (const auto& r : runs) {
    Comparison c;
    c.run = r;
    c.speed_up = r.total_time > 0.0 ? ref.total_time / r.total_time : 0.0;
    c.clean_delta = r.clean_acc - ref.clean_acc;
    c.robust_delta = r.robust_acc - ref.robust_acc;
    const double err = 1.0 - r.robust_acc;
    c.relative_robust_error = ref_err > 0.0 ? (err - ref_err) / ref_err : 0.0;
    out.push_back(c);
  }
  return out;
}

std::string comparison_table(std::span<const Comparison> rows) {
  std::size_t width = 3;
  for (const auto& r : rows) width = std::max(width, r.run.label.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %10s %8s %9s %9s %9s\n", static_cast<int>(width),
                "run", "clean", "robust", "time_s", "speedup", "d_clean", "d_robust", "rel_err");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %8.4f %8.4f %10.3f %8.3f %+9.4f %+9.4f %+9.4f\n",
                  static_cast<int>(width), r.run.label.c_str(), r.run.clean_acc, r.run.robust_acc,
                  r.run.total_time, r.speed_up, r.clean_delta, r.robust_delta,
                  r.relative_robust_error);
    os << buf;
  }
  return os.str();
}

std::string comparison_json(std::span<const Comparison> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"run", r.run.label},
                   {"clean_acc", r.run.clean_acc},
                   {"robust_acc", r.run.robust_acc},
                   {"total_time", r.run.total_time},
                   {"epochs", r.run.epochs},
                   {"speed_up", r.speed_up},
                   {"clean_delta", r.clean_delta},
                   {"robust_delta", r.robust_delta},
                   {"relative_robust_error", r.relative_robust_error}});
  }
  return arr.dump(2);
}

}  // namespace acs::evaluation
