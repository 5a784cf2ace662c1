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

#include <stdexcept>
#include <string>

namespace acs {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kTapeConsumed,
  kNonFinite,
  kAttackFailed,
  kDegenerateSelection,
  kIo,
  kWrongMagic,
  kTruncated,
  kCountMismatch,
  kConfig,
  kSchemaMismatch,
  kTraining,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the training loop; carries the 1-based epoch that failed.
class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& message)
      : Error(ErrorCode::kTraining, "epoch " + std::to_string(epoch) + ": " + message),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Config errors name the offending key so the CLI can report it.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(ErrorCode::kConfig, key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace acs
