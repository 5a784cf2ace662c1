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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "acs/coreset.hpp"
#include "support.hpp"

namespace acs::testing {

using coreset::GradientFeatureMatrix;

inline GradientFeatureMatrix gaussian(Gen& gen, std::size_t units, std::size_t dim, double sd = 1.0) {
  return GradientFeatureMatrix::from_rows(units, dim, gen.normals(units * dim, sd));
}

inline double row_distance(const GradientFeatureMatrix& f, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.dim; ++c) s += std::pow(f.row(i)[c] - f.row(j)[c], 2);
  return std::sqrt(s);
}

inline double facility(const GradientFeatureMatrix& f, const std::vector<std::size_t>& set) {
  double dmax = 0.0;
  for (std::size_t i = 0; i < f.units(); ++i)
    for (std::size_t j = 0; j < f.units(); ++j) dmax = std::max(dmax, row_distance(f, i, j));
  double total = 0.0;
  for (std::size_t i = 0; i < f.units(); ++i) {
    double m = dmax;
    for (std::size_t j : set) m = std::min(m, row_distance(f, i, j));
    total += dmax - m;
  }
  return total;
}

// Plain (non-lazy) greedy, ties to the lowest index.
inline std::vector<std::size_t> plain_greedy(const GradientFeatureMatrix& f, std::size_t k) {
  std::vector<std::size_t> set;
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = f.units();
    double best_val = -1.0;
    for (std::size_t j = 0; j < f.units(); ++j) {
      if (std::find(set.begin(), set.end(), j) != set.end()) continue;
      auto s = set;
      s.push_back(j);
      const double v = facility(f, s);
      if (v > best_val + 1e-12) best = j, best_val = v;
    }
    set.push_back(best);
  }
  return set;
}

inline void subsets(std::size_t n, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
             const std::function<void(const std::vector<std::size_t>&)>& visit) {
  if (cur.size() == k) return visit(cur);
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, k, i + 1, cur, visit);
    cur.pop_back();
  }
}

// min over weights >= 0 of ||target - sum w_j g_j|| for an orthogonal set
inline double orthogonal_residual(const GradientFeatureMatrix& f, const std::vector<std::size_t>& set) {
  std::vector<double> r(f.dim, 0.0);
  for (std::size_t u = 0; u < f.units(); ++u)
    for (std::size_t c = 0; c < f.dim; ++c) r[c] += f.row(u)[c];
  for (std::size_t j : set) {
    const auto g = f.row(j);
    double gg = 0.0, gr = 0.0;
    for (std::size_t c = 0; c < f.dim; ++c) gg += g[c] * g[c], gr += g[c] * r[c];
    const double w = std::max(0.0, gr / gg);
    for (std::size_t c = 0; c < f.dim; ++c) r[c] -= w * g[c];
  }
  return norm2(r);
}

inline GradientFeatureMatrix orthogonal_rows(Gen& gen, std::size_t units, std::size_t dim) {
  // random orthonormal basis by Gram-Schmidt, scaled rows
  std::vector<std::vector<double>> basis;
  while (basis.size() < units) {
    auto v = gen.normals(dim);
    for (const auto& b : basis) {
      double p = 0.0;
      for (std::size_t c = 0; c < dim; ++c) p += v[c] * b[c];
      for (std::size_t c = 0; c < dim; ++c) v[c] -= p * b[c];
    }
    const double n = norm2(v);
    for (auto& x : v) x /= n;
    basis.push_back(v);
  }
  std::vector<double> rows;
  for (auto& b : basis) {
    const double s = gen.uniform(0.5, 5.0);
    for (double x : b) rows.push_back(s * x);
  }
  return GradientFeatureMatrix::from_rows(units, dim, rows);
}


}  // namespace acs::testing
