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

#include "acs/coreset.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <json.hpp>

#include "acs/error.hpp"
#include "acs/rng.hpp"
#include "kernels.hpp"

namespace acs::coreset {

Solver parse_solver(const std::string& name) {
  if (name == "craig") return Solver::kCraig;
  if (name == "gradmatch") return Solver::kGradMatch;
  if (name == "random") return Solver::kRandom;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown solver '" + name + "' (expected craig, gradmatch or random)");
}

const char* solver_name(Solver solver) {
  switch (solver) {
    case Solver::kCraig: return "craig";
    case Solver::kGradMatch: return "gradmatch";
    case Solver::kRandom: return "random";
  }
  return "?";
}

void SelectionConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "selection fraction must be in (0, 1]");
  }
  if (unit_batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "unit batch size must be >= 1");
  if (!(residual_tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "residual_tol must be >= 0");
  if (!(lambda_reg >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_reg must be >= 0");
  selection_attack.validate();
}

UnitMap make_units(std::size_t n, std::size_t unit_size, std::uint64_t seed) {
  if (unit_size < 1) throw Error(ErrorCode::kInvalidArgument, "unit size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (unit_size > 1) {
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  UnitMap units;
  units.reserve((n + unit_size - 1) / unit_size);
  for (std::size_t s = 0; s < n; s += unit_size) {
    units.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + unit_size)));
  }
  return units;
}

GradientFeatureMatrix GradientFeatureMatrix::from_rows(std::size_t units, std::size_t dim,
                                                       std::vector<double> rows) {
  if (rows.size() != units * dim) {
    throw Error(ErrorCode::kShapeMismatch, "feature rows hold " + std::to_string(rows.size()) +
                                               " values, expected " +
                                               std::to_string(units * dim));
  }
  GradientFeatureMatrix f;
  f.dim = dim;
  f.rows = std::move(rows);
  f.unit_map.resize(units);
  for (std::size_t u = 0; u < units; ++u) f.unit_map[u] = {u};
  return f;
}

void GradientFeatureMatrix::validate() const {
  if (rows.size() != units() * dim) {
    throw Error(ErrorCode::kShapeMismatch, "feature matrix size does not match its unit map");
  }
  for (double v : rows) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "non-finite gradient feature");
  }
}

void expand(Coreset& coreset, const UnitMap& units) {
  coreset.sample_ids.clear();
  coreset.sample_weights.clear();
  for (std::size_t j = 0; j < coreset.unit_ids.size(); ++j) {
    for (std::size_t s : units.at(coreset.unit_ids[j])) {
      coreset.sample_ids.push_back(s);
      coreset.sample_weights.push_back(coreset.gamma[j]);
    }
  }
}

void normalize(Coreset& coreset, double total) {
  double sum = 0.0;
  for (double w : coreset.sample_weights) sum += w;
  if (!(sum > 0.0)) throw Error(ErrorCode::kDegenerateSelection, "coreset weights sum to zero");
  const double scale = total / sum;
  for (double& g : coreset.gamma) g *= scale;
  for (double& w : coreset.sample_weights) w *= scale;
}

std::size_t units_for_fraction(std::size_t unit_count, double fraction) {
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(unit_count)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(unit_count, 1));
}

namespace {

std::vector<double> full_sum(const GradientFeatureMatrix& f) {
  std::vector<double> b(f.dim, 0.0);
  for (std::size_t u = 0; u < f.units(); ++u) {
    const auto g = f.row(u);
    for (std::size_t c = 0; c < f.dim; ++c) b[c] += g[c];
  }
  return b;
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::dot(v.size(), v.data(), v.data())); }

}  // namespace

Coreset solve_craig(const GradientFeatureMatrix& features, std::size_t k_units, SolverTrace* trace) {
  features.validate();
  if (k_units < 1) throw Error(ErrorCode::kInvalidArgument, "k_units must be >= 1");
  const std::size_t n = features.units();
  if (n == 0) throw Error(ErrorCode::kDegenerateSelection, "no units to select from");
  const std::size_t k = std::min(k_units, n);

  std::vector<double> dist(n * n, 0.0);
  double d_const = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto gi = features.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto gj = features.row(j);
      double sq = 0.0;
      for (std::size_t c = 0; c < features.dim; ++c) {
        const double diff = gi[c] - gj[c];
        sq += diff * diff;
      }
      const double d = std::sqrt(sq);
      dist[i * n + j] = dist[j * n + i] = d;
      d_const = std::max(d_const, d);
    }
  }

  // Every sample starts at distance d_const, so F(empty) = 0.
  std::vector<double> nearest(n, d_const);
  auto gain_of = [&](std::size_t j) {
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) g += std::max(0.0, nearest[i] - dist[i * n + j]);
    return g;
  };

  // Max-heap on (bound, -index): larger bound first, then lower index.
  using Entry = std::pair<double, std::size_t>;
  auto less = [](const Entry& a, const Entry& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(less)> heap(less);
  for (std::size_t j = 0; j < n; ++j) heap.emplace(gain_of(j), j);

  std::vector<std::size_t> picked;
  while (picked.size() < k) {
    auto [bound, j] = heap.top();
    heap.pop();
    const double g = gain_of(j);
    if (!heap.empty() && less(Entry{g, j}, heap.top())) {
      heap.emplace(g, j);
      continue;
    }
    picked.push_back(j);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist[i * n + j]);
    if (trace) {
      trace->gains.push_back(g);
      trace->order.push_back(j);
    }
  }

  std::vector<std::size_t> sorted = picked;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> count(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = sorted.front();
    for (std::size_t j : sorted) {
      if (dist[i * n + j] < dist[i * n + best]) best = j;
    }
    count[best] += 1.0;
  }
  Coreset out;
  for (std::size_t j : picked) {
    if (count[j] > 0.0) {
      out.unit_ids.push_back(j);
      out.gamma.push_back(count[j]);
    }
  }
  expand(out, features.unit_map);
  return out;
}

namespace {

// Lawson-Hanson active set for min 1/2 x'(G + lambda I)x - h'x with x >= 0,
// warm-started from x.
void nnls_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& h, double lambda,
               std::vector<double>& x) {
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd g = gram;
  g.diagonal().array() += lambda;
  const double tol = 1e-12 * std::max(g.diagonal().maxCoeff(), 1e-300) * static_cast<double>(m);
  std::vector<char> passive(x.size(), 0);
  for (Eigen::Index i = 0; i < m; ++i) passive[i] = x[i] > 0.0;

  auto solve_passive = [&](std::vector<Eigen::Index>& p) {
    p.clear();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (passive[i]) p.push_back(i);
    }
    const auto s = static_cast<Eigen::Index>(p.size());
    Eigen::MatrixXd sub(s, s);
    Eigen::VectorXd sub_h(s);
    for (Eigen::Index a = 0; a < s; ++a) {
      sub_h(a) = h(p[a]);
      for (Eigen::Index c = 0; c < s; ++c) sub(a, c) = g(p[a], p[c]);
    }
    Eigen::VectorXd z = sub.ldlt().solve(sub_h);
    for (Eigen::Index a = 0; a < s; ++a) {
      if (!std::isfinite(z(a))) z(a) = 0.0;
    }
    return z;
  };

  const int limit = 3 * static_cast<int>(m) + 10;
  for (int outer = 0; outer < limit; ++outer) {
    if (outer > 0 || std::none_of(passive.begin(), passive.end(), [](char c) { return c; })) {
      Eigen::VectorXd w = h;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (x[i] != 0.0) w -= g.col(i) * x[i];
      }
      Eigen::Index enter = -1;
      double best = tol;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!passive[i] && w(i) > best) best = w(i), enter = i;
      }
      if (enter < 0) return;
      passive[enter] = 1;
    }
    for (int inner = 0; inner < limit; ++inner) {
      std::vector<Eigen::Index> p;
      const Eigen::VectorXd z = solve_passive(p);
      const auto s = static_cast<Eigen::Index>(p.size());
      Eigen::Index blocking = -1;
      double alpha = 1.0;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (z(a) > 0.0) continue;
        const double xi = x[p[a]];
        const double step = xi <= 0.0 ? 0.0 : xi / (xi - z(a));
        if (blocking < 0 || step < alpha) alpha = step, blocking = a;
      }
      if (blocking < 0) {
        std::fill(x.begin(), x.end(), 0.0);
        for (Eigen::Index a = 0; a < s; ++a) x[p[a]] = z(a);
        break;
      }
      for (Eigen::Index a = 0; a < s; ++a) {
        x[p[a]] += alpha * (z(a) - x[p[a]]);
        if (a == blocking || x[p[a]] <= 0.0) {
          x[p[a]] = 0.0;
          passive[p[a]] = 0;
        }
      }
    }
  }
}

}  // namespace

Coreset solve_gradmatch(const GradientFeatureMatrix& features, std::size_t k_units,
                        double residual_tol, double lambda_reg, SolverTrace* trace) {
  features.validate();
  if (k_units < 1) throw Error(ErrorCode::kInvalidArgument, "k_units must be >= 1");
  const std::size_t n = features.units(), dim = features.dim;
  double max_norm = 0.0;
  for (std::size_t u = 0; u < n; ++u) max_norm = std::max(max_norm, norm2(features.row(u)));
  if (n == 0 || max_norm == 0.0) {
    throw Error(ErrorCode::kDegenerateSelection, "gradient features are all zero");
  }
  const std::size_t k = std::min(k_units, n);
  const std::vector<double> target = full_sum(features);

  std::vector<double> residual = target;
  double res_norm = norm2(residual);
  std::vector<std::size_t> selected;
  std::vector<char> taken(n, 0);
  std::vector<double> coef;
  Eigen::MatrixXd gram(0, 0);
  Eigen::VectorXd rhs(0);

  while (selected.size() < k && res_norm > residual_tol) {
    std::size_t best = n;
    double best_corr = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (taken[u]) continue;
      const double c = kernels::dot(dim, features.row(u).data(), residual.data());
      if (best == n || c > best_corr) {
        best = u;
        best_corr = c;
      }
    }
    // No atom left that a positive weight would help.
    if (best == n || best_corr <= 1e-12 * res_norm * max_norm) break;

    const std::size_t m = selected.size();
    const auto g = features.row(best);
    gram.conservativeResize(m + 1, m + 1);
    rhs.conservativeResize(m + 1);
    for (std::size_t a = 0; a < m; ++a) {
      const double v = kernels::dot(dim, features.row(selected[a]).data(), g.data());
      gram(a, m) = v;
      gram(m, a) = v;
    }
    gram(m, m) = kernels::dot(dim, g.data(), g.data());
    rhs(m) = kernels::dot(dim, g.data(), target.data());
    selected.push_back(best);
    taken[best] = 1;

    std::vector<double> next = coef;
    next.push_back(0.0);
    nnls_gram(gram, rhs, lambda_reg, next);

    std::vector<double> r_next = target;
    for (std::size_t a = 0; a <= m; ++a) {
      if (next[a] == 0.0) continue;
      kernels::axpy(dim, -next[a], features.row(selected[a]).data(), r_next.data());
    }
    const double n_next = norm2(r_next);
    if (n_next <= res_norm) {
      coef = std::move(next);
      residual = std::move(r_next);
      res_norm = n_next;
    } else {
      coef.push_back(0.0);
    }
    if (trace) {
      trace->residual_norms.push_back(res_norm);
      trace->order.push_back(best);
    }
  }

  Coreset out;
  for (std::size_t a = 0; a < selected.size(); ++a) {
    if (coef[a] > 0.0) {
      out.unit_ids.push_back(selected[a]);
      out.gamma.push_back(coef[a]);
    }
  }
  if (out.unit_ids.empty()) {
    throw Error(ErrorCode::kDegenerateSelection, "gradient matching kept no unit with positive weight");
  }
  expand(out, features.unit_map);
  return out;
}

Coreset solve_random(std::size_t unit_count, std::size_t k_units, std::uint64_t seed) {
  if (k_units < 1) throw Error(ErrorCode::kInvalidArgument, "k_units must be >= 1");
  if (unit_count == 0) throw Error(ErrorCode::kDegenerateSelection, "no units to select from");
  const std::size_t k = std::min(k_units, unit_count);
  std::vector<std::size_t> ids(unit_count);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, unit_count - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  Coreset out;
  out.unit_ids = std::move(ids);
  out.gamma.assign(k, 1.0);
  return out;
}

void fill_to_budget(Coreset& coreset, std::size_t unit_count, std::size_t k_units,
                    std::uint64_t seed) {
  const std::size_t k = std::min(k_units, unit_count);
  if (coreset.unit_ids.size() >= k) return;
  std::vector<char> used(unit_count, 0);
  for (std::size_t u : coreset.unit_ids) used.at(u) = 1;
  std::vector<std::size_t> rest;
  for (std::size_t u = 0; u < unit_count; ++u) {
    if (!used[u]) rest.push_back(u);
  }
  const Coreset extra = solve_random(rest.size(), k - coreset.unit_ids.size(), seed);
  for (std::size_t j : extra.unit_ids) {
    coreset.unit_ids.push_back(rest[j]);
    coreset.gamma.push_back(1.0);
  }
}

double matching_error(const GradientFeatureMatrix& features, const Coreset& coreset) {
  std::vector<double> r = full_sum(features);
  for (std::size_t j = 0; j < coreset.unit_ids.size(); ++j) {
    if (coreset.unit_ids[j] >= features.units()) {
      throw Error(ErrorCode::kInvalidArgument, "coreset unit outside the feature matrix");
    }
    kernels::axpy(features.dim, -coreset.gamma[j], features.row(coreset.unit_ids[j]).data(), r.data());
  }
  return norm2(r);
}

GradientFeatureMatrix extract_features(const data::Dataset& dataset, const models::Model& model,
                                       const objectives::Objective& objective,
                                       const SelectionConfig& config, std::uint64_t seed) {
  objectives::Objective sel = objective;
  sel.attack = config.selection_attack;
  sel.attack.loss = objective.inner_attack().loss;

  const std::size_t n = dataset.size();
  const std::size_t dim = model.last_layer_size();
  std::vector<double> per_sample(n * dim);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t end = std::min(n, start + kChunk);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const tensor::Tensor x = dataset.gather(idx);
    const auto labels = dataset.gather_labels(idx);
    std::vector<std::uint64_t> seeds(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) {
      seeds[b] = derive_seed(seed, {seed_tag::kSelection, idx[b]});
    }
    auto adv = objectives::adversarial_batch(sel, model, x, labels, seeds);
    const bool all_ok = std::all_of(adv.ok.begin(), adv.ok.end(), [](char c) { return c != 0; });
    if (!all_ok) {
      std::vector<double> fixed(adv.x_adv.values().begin(), adv.x_adv.values().end());
      const std::size_t d = x.cols();
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (adv.ok[b]) continue;
        const std::size_t one_label[1] = {labels[b]};
        const std::uint64_t one_seed[1] = {derive_seed(seed, {seed_tag::kRetry, idx[b]})};
        auto retry = objectives::adversarial_batch(sel, model, tensor::Tensor::row_vector(x.row(b)),
                                                   one_label, one_seed);
        if (!retry.ok[0]) {
          throw Error(ErrorCode::kAttackFailed,
                      "selection attack failed twice on sample " + std::to_string(idx[b]));
        }
        std::copy(retry.x_adv.values().begin(), retry.x_adv.values().end(),
                  fixed.begin() + static_cast<std::ptrdiff_t>(b * d));
      }
      adv.x_adv = tensor::Tensor(x.shape(), std::move(fixed));
    }
    const tensor::Tensor f = objectives::last_layer_features(sel, model, x, labels, adv.x_adv);
    std::copy(f.values().begin(), f.values().end(),
              per_sample.begin() + static_cast<std::ptrdiff_t>(start * dim));
  }

  GradientFeatureMatrix out;
  out.dim = dim;
  out.unit_map = make_units(n, config.unit_batch_size, derive_seed(seed, {seed_tag::kUnits}));
  out.rows.assign(out.units() * dim, 0.0);
  for (std::size_t u = 0; u < out.units(); ++u) {
    double* row = out.rows.data() + u * dim;
    for (std::size_t s : out.unit_map[u]) kernels::axpy(dim, 1.0, per_sample.data() + s * dim, row);
  }
  out.validate();
  return out;
}

Selection select(const data::Dataset& dataset, const models::Model& model,
                 const objectives::Objective& objective, const SelectionConfig& config,
                 std::uint64_t seed) {
  config.validate();
  Selection sel;
  sel.features = extract_features(dataset, model, objective, config, seed);
  sel.k_units = units_for_fraction(sel.features.units(), config.fraction);
  switch (config.solver) {
    case Solver::kCraig:
      sel.coreset = solve_craig(sel.features, sel.k_units);
      break;
    case Solver::kGradMatch:
      sel.coreset = solve_gradmatch(sel.features, sel.k_units, config.residual_tol, config.lambda_reg);
      break;
    case Solver::kRandom:
      sel.coreset = solve_random(sel.features.units(), sel.k_units,
                                 derive_seed(seed, {seed_tag::kRandomSolver}));
      expand(sel.coreset, sel.features.unit_map);
      break;
  }
  sel.solver_units = sel.coreset.unit_ids.size();
  if (config.fill_budget && sel.solver_units < sel.k_units) {
    fill_to_budget(sel.coreset, sel.features.units(), sel.k_units,
                   derive_seed(seed, {seed_tag::kRandomSolver, 1}));
    expand(sel.coreset, sel.features.unit_map);
  }
  sel.matching_error = matching_error(sel.features, sel.coreset);
  if (config.normalize_weights) normalize(sel.coreset, static_cast<double>(dataset.size()));
  return sel;
}

std::string trace_record(int epoch, Solver solver, const Selection& selection) {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["solver"] = solver_name(solver);
  j["k"] = selection.k_units;
  j["selected"] = selection.coreset.unit_ids.size();
  j["solver_units"] = selection.solver_units;
  j["matching_error"] = selection.matching_error;
  j["unit_ids"] = selection.coreset.unit_ids;
  j["gamma"] = selection.coreset.gamma;
  return j.dump();
}

}  // namespace acs::coreset
