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

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

#include "acs/error.hpp"

namespace acs::text_util {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

inline std::size_t parse_size(const std::string& s) { return static_cast<std::size_t>(parse_u64(s)); }

inline long long parse_int(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "expected an integer, got '" + s + "'");
  }
  return v;
}

// Accepts plain decimals and simple ratios such as "8/255".
inline double parse_double(const std::string& s) {
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double den = parse_double(trim(s.substr(slash + 1)));
    if (den == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero denominator in '" + s + "'");
    return parse_double(trim(s.substr(0, slash))) / den;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected a number, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::kInvalidArgument, "expected a boolean, got '" + s + "'");
}

}  // namespace acs::text_util
