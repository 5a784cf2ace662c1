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
#include <string>
#include <utility>
#include <vector>

#include "acs/data.hpp"
#include "acs/models.hpp"
#include "acs/training.hpp"

namespace acs::config {

// The documented default configuration, identical to configs/default.conf.
const std::string& default_text();

// Dotted `section.key = value` settings. The key set is fixed by the default
// configuration; anything else is rejected with a ConfigError naming the key.
class RunConfig {
 public:
  static RunConfig defaults();
  // Defaults, then the file's values.
  static RunConfig load(const std::filesystem::path& path);
  // Defaults, then `text`'s values; `origin` labels errors.
  static RunConfig parse(const std::string& text, const std::string& origin = "config");

  void set(const std::string& key, const std::string& value);
  // Applies `--section.key=value` (or `section.key=value`) strings in order.
  void apply_overrides(const std::vector<std::string>& overrides);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  // Canonical text; parsing it gives back an equal configuration.
  std::string to_text() const;

  bool operator==(const RunConfig&) const = default;

  // Typed views. Each throws ConfigError naming the offending key.
  training::TrainConfig train_config() const;
  models::ModelSpec model_spec(const data::Dataset& dataset) const;
  std::uint64_t seed() const;
  std::string run_name() const;
  int checkpoint_every() const;

  // Training and evaluation splits as described by the data.* keys.
  std::pair<data::Dataset, data::Dataset> datasets() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace acs::config
