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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "acs/config.hpp"
#include "acs/evaluation.hpp"
#include "acs/training.hpp"

namespace acs::runner {

// Fixed artifact names inside a run directory.
inline constexpr const char* kConfigFile = "config.resolved";
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kTraceFile = "select_trace.jsonl";
inline constexpr const char* kFinalCheckpoint = "checkpoint_final.bin";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kReportFile = "report.json";

// $ACS_OUTPUT_ROOT, or "runs".
std::filesystem::path output_root();
std::filesystem::path run_directory(const config::RunConfig& config);

// Lowercase hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

struct RunOutcome {
  std::filesystem::path directory;
  training::TrainResult result;
  std::string digest;  // of the final checkpoint
  double total_time = 0.0;
};

// Trains per `config` and writes every artifact of the run directory.
// `log` (may be null) gets one line per epoch.
RunOutcome run_train(const config::RunConfig& config, std::ostream* log = nullptr);

struct EvaluateRequest {
  std::filesystem::path checkpoint;
  std::string dataset_uri;
  attacks::AttackSpec attack;
  std::uint64_t seed = 0;
  std::filesystem::path output;  // empty: not written
};

evaluation::EvalReport run_evaluate(const EvaluateRequest& request);

// Accepts run directories or metrics files; the first is the reference.
std::vector<evaluation::Comparison> compare_paths(const std::vector<std::filesystem::path>& paths);

struct SweepOutcome {
  std::vector<RunOutcome> runs;
  std::vector<evaluation::Comparison> rows;
  std::string table;
};

// One run per value of `axis`, in order, under <run dir>/<axis>=<value>.
// Every configuration is validated before the first run starts.
SweepOutcome run_sweep(const config::RunConfig& base, const std::string& axis,
                       const std::vector<std::string>& values, std::ostream* log = nullptr);

// The selection trace of a run directory.
std::string select_trace_text(const std::filesystem::path& run_dir);

}  // namespace acs::runner
