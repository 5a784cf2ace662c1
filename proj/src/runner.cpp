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

#include "acs/runner.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "acs/coreset.hpp"
#include "acs/error.hpp"
#include "acs/models.hpp"
#include "acs/rng.hpp"

namespace acs::runner {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path output_root() {
  const char* env = std::getenv("ACS_OUTPUT_ROOT");
  return (env != nullptr && *env != '\0') ? fs::path(env) : fs::path("runs");
}

fs::path run_directory(const config::RunConfig& config) { return output_root() / config.run_name(); }

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 init failed");
  }
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return os.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class LineSink {
 public:
  explicit LineSink(const fs::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  void write(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct Prepared {
  training::TrainConfig train;
  data::Dataset train_set;
  data::Dataset eval_set;
  models::ModelSpec spec;
};

Prepared prepare(const config::RunConfig& config) {
  training::TrainConfig train = config.train_config();
  config.run_name();
  config.checkpoint_every();
  auto [train_set, eval_set] = config.datasets();
  models::ModelSpec spec = config.model_spec(train_set);
  return {std::move(train), std::move(train_set), std::move(eval_set), std::move(spec)};
}

}  // namespace

RunOutcome run_train(const config::RunConfig& config, std::ostream* log) {
  Prepared p = prepare(config);
  const int checkpoint_every = config.checkpoint_every();
  const fs::path dir = run_directory(config);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create run directory " + dir.string() + ": " + ec.message());

  write_text(dir / kConfigFile, config.to_text());
  LineSink metrics(dir / kMetricsFile);
  LineSink trace(dir / kTraceFile);

  training::Hooks hooks;
  hooks.on_selection = [&](int epoch, const coreset::Selection& sel) {
    trace.write(coreset::trace_record(epoch, p.train.selection.solver, sel));
  };
  hooks.on_epoch = [&](const training::EpochRecord& rec, const models::Model& model) {
    metrics.write(rec.to_json());
    if (checkpoint_every > 0 && rec.epoch % checkpoint_every == 0) {
      models::save_checkpoint(model, dir / ("checkpoint_epoch_" + std::to_string(rec.epoch) + ".bin"));
    }
    if (log != nullptr) {
      *log << "epoch " << rec.epoch << " " << training::phase_name(rec.phase) << " loss="
           << rec.loss << " clean=" << rec.clean_acc;
      if (rec.robust_acc) *log << " robust=" << *rec.robust_acc;
      *log << " time=" << rec.wall_time << "s\n";
    }
  };

  models::Model model = models::init(p.spec, derive_seed(p.train.seed, {seed_tag::kInit}));
  RunOutcome out{dir, training::train(p.train_set, std::move(model), p.train, &p.eval_set, hooks), {}, 0.0};

  const fs::path final_ckpt = dir / kFinalCheckpoint;
  models::save_checkpoint(out.result.model, final_ckpt);
  out.digest = file_digest(final_ckpt);

  const training::EpochRecord& last = out.result.records.back();
  for (const auto& r : out.result.records) out.total_time += r.wall_time;

  evaluation::EvalReport report;
  report.clean_acc = last.clean_acc;
  report.seed = p.train.seed;
  if (last.robust_acc) {
    report.attacks.push_back({"eval", p.train.eval_attack, *last.robust_acc, 0.0});
    if (*last.robust_acc > last.clean_acc + 0.02) report.anomalies.push_back("eval");
  }
  write_text(dir / kReportFile, report.to_json() + "\n");

  json summary = {
      {"schema", "acs.summary.v1"},
      {"run", config.run_name()},
      {"mode", training::mode_name(p.train.mode)},
      {"objective", objectives::kind_name(p.train.objective.kind)},
      {"solver", coreset::solver_name(p.train.selection.solver)},
      {"fraction", p.train.selection.fraction},
      {"seed", p.train.seed},
      {"epochs", last.epoch},
      {"clean_acc", last.clean_acc},
      {"robust_acc", last.robust_acc ? json(*last.robust_acc) : json(nullptr)},
      {"total_time", out.total_time},
      {"train_size", p.train_set.size()},
      {"eval_size", p.eval_set.size()},
      {"checkpoint", kFinalCheckpoint},
      {"checkpoint_sha256", out.digest},
  };
  write_text(dir / kSummaryFile, summary.dump(2) + "\n");
  return out;
}

evaluation::EvalReport run_evaluate(const EvaluateRequest& request) {
  request.attack.validate();
  const models::Model model = models::load_checkpoint(request.checkpoint);
  const data::Dataset dataset = data::from_uri(request.dataset_uri);
  if (dataset.dim() != model.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset dimension " + std::to_string(dataset.dim()) +
                                               " does not match the model input " +
                                               std::to_string(model.input_dim()));
  }
  const std::vector<evaluation::NamedAttack> attacks = {
      {std::string(attacks::norm_name(request.attack.norm)) + "-pgd" + std::to_string(request.attack.iters),
       request.attack}};
  evaluation::EvalReport report = evaluation::evaluate(model, dataset, attacks, request.seed);
  if (!request.output.empty()) write_text(request.output, report.to_json() + "\n");
  return report;
}

std::vector<evaluation::Comparison> compare_paths(const std::vector<fs::path>& paths) {
  if (paths.size() < 2) throw Error(ErrorCode::kInvalidArgument, "compare needs at least two runs");
  std::vector<evaluation::RunSummary> runs;
  for (const fs::path& p : paths) {
    const fs::path metrics = fs::is_directory(p) ? p / kMetricsFile : p;
    evaluation::RunSummary s = evaluation::summarize_metrics(metrics);
    if (fs::is_directory(p)) s.label = p.filename().empty() ? p.parent_path().filename().string()
                                                            : p.filename().string();
    runs.push_back(std::move(s));
  }
  return evaluation::compare_runs(runs);
}

SweepOutcome run_sweep(const config::RunConfig& base, const std::string& axis,
                       const std::vector<std::string>& values, std::ostream* log) {
  if (!base.has(axis)) throw ConfigError(axis, "unknown sweep axis");
  if (axis == "run.name") throw ConfigError(axis, "cannot sweep the run name");
  if (values.empty()) throw ConfigError(axis, "sweep needs at least one value");
  const std::string root = base.run_name();

  std::vector<config::RunConfig> configs;
  for (const std::string& v : values) {
    config::RunConfig c = base;
    c.set(axis, v);
    c.set("run.name", root + "/" + axis + "=" + c.get(axis));
    prepare(c);
    configs.push_back(std::move(c));
  }

  SweepOutcome out;
  std::vector<evaluation::RunSummary> summaries;
  for (const config::RunConfig& c : configs) {
    if (log != nullptr) *log << "== " << c.run_name() << "\n";
    RunOutcome r = run_train(c, log);
    evaluation::RunSummary s = evaluation::summarize_metrics(r.directory / kMetricsFile);
    s.label = axis + "=" + c.get(axis);
    summaries.push_back(std::move(s));
    out.runs.push_back(std::move(r));
  }
  if (summaries.size() == 1) {
    const std::vector<evaluation::RunSummary> pair = {summaries[0], summaries[0]};
    out.rows = {evaluation::compare_runs(pair).front()};
  } else {
    out.rows = evaluation::compare_runs(summaries);
  }
  out.table = evaluation::comparison_table(out.rows);
  const fs::path dir = output_root() / root;
  write_text(dir / "sweep.txt", out.table);
  write_text(dir / "sweep.json", evaluation::comparison_json(out.rows) + "\n");
  return out;
}

std::string select_trace_text(const fs::path& run_dir) {
  const fs::path p = fs::is_directory(run_dir) ? run_dir / kTraceFile : run_dir;
  return read_text(p);
}

}  // namespace acs::runner
