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

#include <cstddef>

// Inner loops with a fixed accumulation order. Results depend only on the
// operands, never on the batch a row happens to sit in.
namespace acs::kernels {

inline void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

inline double dot(std::size_t n, const double* a, const double* b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; j < n; ++j) s += a[j] * b[j];
  return s;
}

}  // namespace acs::kernels
