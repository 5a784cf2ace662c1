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
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "acs/models.hpp"
#include "acs/rng.hpp"
#include "acs/tensor.hpp"

namespace acs::testing {

// Small generators for property tests.
struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
  std::size_t range(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  }
  std::vector<double> uniforms(std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  std::vector<double> normals(std::size_t n, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(sd);
    return v;
  }

  Rng rng;
};

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / std::max({norm2(a), norm2(b), floor});
}

// Central differences of f at x, step h.
inline std::vector<double> central_diff(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Random MLP with biases drawn too (init leaves them zero).
inline models::Model random_mlp(std::size_t dim, std::vector<std::size_t> widths, std::size_t classes,
                                std::uint64_t seed, double scale = 1.0) {
  models::Model m = models::init(models::make_mlp(dim, std::move(widths), classes), seed);
  Gen g(seed ^ 0x5eedULL);
  for (double& t : m.mutable_theta()) t = t * scale + 0.1 * g.normal();
  return m;
}

inline models::Model with_theta(const models::Model& m, std::span<const double> theta) {
  return models::Model(m.spec(), std::vector<double>(theta.begin(), theta.end()), m.seed());
}

inline std::vector<double> one_hot(std::size_t k, std::size_t c) {
  std::vector<double> v(k, 0.0);
  v[c] = 1.0;
  return v;
}

}  // namespace acs::testing
