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

#include "acs/acs.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <streambuf>
#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "acs/config.hpp"
#include "acs/error.hpp"
#include "acs/evaluation.hpp"
#include "acs/runner.hpp"

struct acs_config {
  acs::config::RunConfig value;
};
struct acs_dataset {
  acs::data::Dataset value;
};
struct acs_model {
  acs::models::Model value;
};

namespace {

thread_local std::string g_last_error;

acs_status status_for(acs::ErrorCode code) {
  using acs::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfig: return ACS_ERR_USAGE;
    case ErrorCode::kIo: return ACS_ERR_IO;
    case ErrorCode::kWrongMagic:
    case ErrorCode::kTruncated:
    case ErrorCode::kCountMismatch:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kShapeMismatch: return ACS_ERR_FORMAT;
    case ErrorCode::kTraining: return ACS_ERR_TRAINING;
    case ErrorCode::kNonFinite:
    case ErrorCode::kAttackFailed:
    case ErrorCode::kDegenerateSelection: return ACS_ERR_NUMERIC;
    case ErrorCode::kTapeConsumed: return ACS_ERR_INTERNAL;
  }
  return ACS_ERR_INTERNAL;
}

template <typename F>
acs_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ACS_OK;
  } catch (const acs::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return ACS_ERR_INTERNAL;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw acs::Error(acs::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

// Forwards whole lines to the callback.
class LogBuf : public std::streambuf {
 public:
  LogBuf(acs_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~LogBuf() override {
    if (!line_.empty()) fn_(line_.c_str(), user_);
  }

 protected:
  int_type overflow(int_type c) override {
    if (traits_type::eq_int_type(c, traits_type::eof())) return traits_type::not_eof(c);
    if (traits_type::to_char_type(c) == '\n') {
      fn_(line_.c_str(), user_);
      line_.clear();
    } else {
      line_.push_back(traits_type::to_char_type(c));
    }
    return c;
  }

 private:
  acs_log_fn fn_;
  void* user_;
  std::string line_;
};

struct LogStream {
  LogStream(acs_log_fn fn, void* user) : buf(fn, user), os(&buf) {}
  std::ostream* get() { return &os; }
  LogBuf buf;
  std::ostream os;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw acs::Error(acs::ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

acs::attacks::AttackSpec attack_spec(const char* norm, double epsilon, double step_size, int iters,
                                     int restarts, int random_init) {
  require(norm, "norm");
  acs::attacks::AttackSpec a;
  a.norm = acs::attacks::parse_norm(norm);
  a.epsilon = epsilon;
  a.step_size = step_size;
  a.iters = iters;
  a.restarts = restarts;
  a.random_init = random_init != 0;
  a.validate();
  return a;
}

}  // namespace

extern "C" {

int acs_exit_code(acs_status status) {
  if (status == ACS_OK) return 0;
  return status == ACS_ERR_USAGE ? 2 : 1;
}

const char* acs_status_name(acs_status status) {
  switch (status) {
    case ACS_OK: return "ok";
    case ACS_ERR_USAGE: return "usage";
    case ACS_ERR_IO: return "io";
    case ACS_ERR_FORMAT: return "format";
    case ACS_ERR_TRAINING: return "training";
    case ACS_ERR_NUMERIC: return "numeric";
    case ACS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* acs_last_error(void) { return g_last_error.c_str(); }

const char* acs_version(void) { return "1.0.0"; }

void acs_string_free(char* s) { std::free(s); }

acs_status acs_config_default(acs_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new acs_config{acs::config::RunConfig::defaults()};
  });
}

acs_status acs_config_load(const char* path, acs_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new acs_config{acs::config::RunConfig::load(path)};
  });
}

acs_status acs_config_parse(const char* text, acs_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new acs_config{acs::config::RunConfig::parse(text)};
  });
}

acs_status acs_config_set(acs_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->value.set(key, value);
  });
}

acs_status acs_config_override(acs_config* config, const char* assignment) {
  return guarded([&] {
    require(config, "config");
    require(assignment, "assignment");
    config->value.apply_overrides({assignment});
  });
}

acs_status acs_config_get(const acs_config* config, const char* key, char** out) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(out, "out");
    *out = dup(config->value.get(key));
  });
}

acs_status acs_config_text(const acs_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup(config->value.to_text());
  });
}

acs_status acs_config_validate(const acs_config* config) {
  return guarded([&] {
    require(config, "config");
    const auto& c = config->value;
    c.train_config();
    c.run_name();
    c.checkpoint_every();
    auto sets = c.datasets();
    c.model_spec(sets.first);
  });
}

const char* acs_default_config_text(void) { return acs::config::default_text().c_str(); }

void acs_config_free(acs_config* config) { delete config; }

acs_status acs_dataset_open(const char* uri, acs_dataset** out) {
  return guarded([&] {
    require(uri, "uri");
    require(out, "out");
    *out = new acs_dataset{acs::data::from_uri(uri)};
  });
}

size_t acs_dataset_size(const acs_dataset* dataset) { return dataset ? dataset->value.size() : 0; }
size_t acs_dataset_dim(const acs_dataset* dataset) { return dataset ? dataset->value.dim() : 0; }
size_t acs_dataset_classes(const acs_dataset* dataset) { return dataset ? dataset->value.classes() : 0; }
void acs_dataset_free(acs_dataset* dataset) { delete dataset; }

acs_status acs_model_load(const char* checkpoint, acs_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = new acs_model{acs::models::load_checkpoint(checkpoint)};
  });
}

size_t acs_model_param_count(const acs_model* model) { return model ? model->value.theta().size() : 0; }

acs_status acs_model_clean_accuracy(const acs_model* model, const acs_dataset* dataset, double* out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    *out = acs::evaluation::clean_accuracy(model->value, dataset->value);
  });
}

acs_status acs_model_robust_accuracy(const acs_model* model, const acs_dataset* dataset,
                                     const char* norm, double epsilon, double step_size, int iters,
                                     int restarts, int random_init, uint64_t seed, double* out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    const auto spec = attack_spec(norm, epsilon, step_size, iters, restarts, random_init);
    *out = acs::evaluation::robust_accuracy(model->value, dataset->value, spec, seed);
  });
}

void acs_model_free(acs_model* model) { delete model; }

acs_status acs_train(const acs_config* config, acs_log_fn log, void* user, char** out) {
  return guarded([&] {
    require(config, "config");
    std::optional<LogStream> stream;
    if (log != nullptr) stream.emplace(log, user);
    const auto outcome = acs::runner::run_train(config->value, stream ? stream->get() : nullptr);
    if (out != nullptr) {
      *out = dup(slurp(outcome.directory / acs::runner::kSummaryFile));
    }
  });
}

acs_status acs_evaluate(const char* checkpoint, const char* dataset_uri, const char* norm,
                        double epsilon, double step_size, int iters, int restarts, int random_init,
                        uint64_t seed, const char* output, char** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(dataset_uri, "dataset_uri");
    acs::runner::EvaluateRequest req;
    req.checkpoint = checkpoint;
    req.dataset_uri = dataset_uri;
    req.attack = attack_spec(norm, epsilon, step_size, iters, restarts, random_init);
    req.seed = seed;
    if (output != nullptr) req.output = output;
    const auto report = acs::runner::run_evaluate(req);
    if (out != nullptr) *out = dup(report.to_json());
  });
}

acs_status acs_compare(const char* const* paths, size_t count, char** out, char** out_json) {
  return guarded([&] {
    require(paths, "paths");
    std::vector<std::filesystem::path> p;
    for (size_t i = 0; i < count; ++i) {
      require(paths[i], "path");
      p.emplace_back(paths[i]);
    }
    const auto rows = acs::runner::compare_paths(p);
    if (out != nullptr) *out = dup(acs::evaluation::comparison_table(rows));
    if (out_json != nullptr) *out_json = dup(acs::evaluation::comparison_json(rows));
  });
}

acs_status acs_sweep(const acs_config* config, const char* axis, const char* const* values,
                     size_t count, acs_log_fn log, void* user, char** out) {
  return guarded([&] {
    require(config, "config");
    require(axis, "axis");
    require(values, "values");
    std::vector<std::string> v;
    for (size_t i = 0; i < count; ++i) {
      require(values[i], "value");
      v.emplace_back(values[i]);
    }
    std::optional<LogStream> stream;
    if (log != nullptr) stream.emplace(log, user);
    const auto outcome = acs::runner::run_sweep(config->value, axis, v, stream ? stream->get() : nullptr);
    if (out != nullptr) *out = dup(outcome.table);
  });
}

acs_status acs_select_trace(const char* run_dir, char** out) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(out, "out");
    *out = dup(acs::runner::select_trace_text(run_dir));
  });
}

acs_status acs_file_digest(const char* path, char** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = dup(acs::runner::file_digest(path));
  });
}

}  // extern "C"
