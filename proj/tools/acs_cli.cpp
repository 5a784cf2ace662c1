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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "acs/acs.h"

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { acs_string_free(s); }
};

int fail(acs_status st) {
  std::cerr << "error (" << acs_status_name(st) << "): " << acs_last_error() << "\n";
  return acs_exit_code(st);
}

void print_line(const char* line, void*) {
  std::cerr << line << "\n";
}

// Config file (or the defaults) plus --section.key=value overrides.
acs_status load_config(const std::string& path, const std::vector<std::string>& overrides,
                       acs_config** out) {
  acs_status st = path.empty() ? acs_config_default(out) : acs_config_load(path.c_str(), out);
  if (st != ACS_OK) return st;
  for (const std::string& o : overrides) {
    if (o.rfind("--", 0) != 0) {
      std::fprintf(stderr, "unexpected argument '%s'\n", o.c_str());
      acs_config_free(*out);
      *out = nullptr;
      return ACS_ERR_USAGE;
    }
    st = acs_config_override(*out, o.c_str());
    if (st != ACS_OK) {
      acs_config_free(*out);
      *out = nullptr;
      return st;
    }
  }
  return ACS_OK;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial coreset training toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(acs_version()));

  std::string config_path;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "train a model from a config; extra --section.key=value flags override it");
  train->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  train->add_flag("-q,--quiet", quiet, "no per-epoch progress");
  train->allow_extras();

  std::string checkpoint, data_uri, norm = "linf", report_path;
  double epsilon = 0.1, step_size = -1.0;
  int iters = 50, restarts = 10;
  bool no_random_init = false;
  std::uint64_t seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "clean and robust accuracy of a checkpoint");
  evaluate->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  evaluate->add_option("--data", data_uri, "dataset URI")->required();
  evaluate->add_option("--norm", norm, "linf or l2")->capture_default_str();
  evaluate->add_option("--epsilon", epsilon, "attack radius")->capture_default_str();
  evaluate->add_option("--step-size", step_size, "step size (default epsilon/8)");
  evaluate->add_option("--iters", iters, "attack iterations")->capture_default_str();
  evaluate->add_option("--restarts", restarts, "random restarts")->capture_default_str();
  evaluate->add_flag("--no-random-init", no_random_init, "start at the clean input");
  evaluate->add_option("--seed", seed, "attack seed")->capture_default_str();
  evaluate->add_option("-o,--out", report_path, "report file");

  std::vector<std::string> compare_inputs;
  std::string table_path, json_path;
  auto* compare = app.add_subcommand("compare", "compare runs; the first is the reference");
  compare->add_option("runs", compare_inputs, "run directories or metrics files")->required();
  compare->add_option("-o,--out", table_path, "also write the table here");
  compare->add_option("--json", json_path, "write the records here");

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "sequential runs over one config key");
  sweep->add_option("-c,--config", config_path, "config file (defaults when omitted)");
  sweep->add_option("--axis", axis, "config key to vary")->required();
  sweep->add_option("--values", values, "values, comma separated")->required()->delimiter(',');
  sweep->add_flag("-q,--quiet", quiet, "no per-epoch progress");
  sweep->allow_extras();

  std::string run_dir, trace_out;
  auto* trace = app.add_subcommand("select-trace", "selection records of a run");
  trace->add_option("run", run_dir, "run directory")->required();
  trace->add_option("-o,--out", trace_out, "write here instead of standard output");

  std::string digest_path;
  auto* digest = app.add_subcommand("digest", "SHA-256 of a file");
  digest->add_option("file", digest_path, "file")->required();

  auto* defaults = app.add_subcommand("defaults", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const acs_log_fn log = quiet ? nullptr : print_line;

  if (*train) {
    acs_config* cfg = nullptr;
    acs_status st = load_config(config_path, train->remaining(), &cfg);
    if (st != ACS_OK) return fail(st);
    Owned out;
    st = acs_train(cfg, log, nullptr, &out.s);
    acs_config_free(cfg);
    if (st != ACS_OK) return fail(st);
    std::cout << out.s;
    return 0;
  }

  if (*evaluate) {
    if (step_size < 0.0) step_size = epsilon / 8.0;
    Owned out;
    const acs_status st = acs_evaluate(checkpoint.c_str(), data_uri.c_str(), norm.c_str(), epsilon,
                                       step_size, iters, restarts, no_random_init ? 0 : 1, seed,
                                       report_path.empty() ? nullptr : report_path.c_str(), &out.s);
    if (st != ACS_OK) return fail(st);
    std::cout << out.s << "\n";
    return 0;
  }

  if (*compare) {
    std::vector<const char*> paths;
    for (const auto& p : compare_inputs) paths.push_back(p.c_str());
    Owned table, records;
    const acs_status st = acs_compare(paths.data(), paths.size(), &table.s, &records.s);
    if (st != ACS_OK) return fail(st);
    std::cout << table.s;
    if (!table_path.empty() && !write_file(table_path, table.s)) {
      std::cerr << "error: cannot write " << table_path << "\n";
      return 1;
    }
    if (!json_path.empty() && !write_file(json_path, std::string(records.s) + "\n")) {
      std::cerr << "error: cannot write " << json_path << "\n";
      return 1;
    }
    return 0;
  }

  if (*sweep) {
    acs_config* cfg = nullptr;
    acs_status st = load_config(config_path, sweep->remaining(), &cfg);
    if (st != ACS_OK) return fail(st);
    std::vector<const char*> v;
    for (const auto& s : values) v.push_back(s.c_str());
    Owned table;
    st = acs_sweep(cfg, axis.c_str(), v.data(), v.size(), log, nullptr, &table.s);
    acs_config_free(cfg);
    if (st != ACS_OK) return fail(st);
    std::cout << table.s;
    return 0;
  }

  if (*trace) {
    Owned out;
    const acs_status st = acs_select_trace(run_dir.c_str(), &out.s);
    if (st != ACS_OK) return fail(st);
    if (trace_out.empty()) {
      std::cout << out.s;
    } else if (!write_file(trace_out, out.s)) {
      std::cerr << "error: cannot write " << trace_out << "\n";
      return 1;
    }
    return 0;
  }

  if (*digest) {
    Owned out;
    const acs_status st = acs_file_digest(digest_path.c_str(), &out.s);
    if (st != ACS_OK) return fail(st);
    std::cout << out.s << "\n";
    return 0;
  }

  if (*defaults) {
    std::cout << acs_default_config_text();
    return 0;
  }
  return 2;
}
