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

#include "acs/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acs/error.hpp"
#include "acs/ops.hpp"
#include "acs/rng.hpp"

namespace acs::attacks {

using tensor::Tensor;

void AttackSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "attack epsilon must be finite and >= 0");
  }
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorCode::kInvalidArgument, "attack step size must be finite and >= 0");
  }
  if (iters < 1) throw Error(ErrorCode::kInvalidArgument, "attack needs iters >= 1");
  if (restarts < 1) throw Error(ErrorCode::kInvalidArgument, "attack needs restarts >= 1");
}

Norm parse_norm(const std::string& name) {
  if (name == "linf") return Norm::kLinf;
  if (name == "l2") return Norm::kL2;
  throw Error(ErrorCode::kInvalidArgument, "unknown norm '" + name + "' (expected linf or l2)");
}

const char* norm_name(Norm norm) { return norm == Norm::kLinf ? "linf" : "l2"; }

void project(std::span<double> point, std::span<const double> center, Norm norm, double epsilon) {
  if (point.size() != center.size()) {
    throw Error(ErrorCode::kShapeMismatch, "projection point and center differ in size");
  }
  const std::size_t d = point.size();
  if (norm == Norm::kLinf) {
    for (std::size_t j = 0; j < d; ++j) {
      point[j] = std::clamp(point[j], center[j] - epsilon, center[j] + epsilon);
    }
  } else {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = point[j] - center[j];
      sq += diff * diff;
    }
    const double len = std::sqrt(sq);
    if (len > epsilon) {
      const double scale = epsilon / len;
      for (std::size_t j = 0; j < d; ++j) point[j] = center[j] + (point[j] - center[j]) * scale;
    }
  }
  // Clipping toward a box that contains the center never leaves the ball.
  for (std::size_t j = 0; j < d; ++j) point[j] = std::clamp(point[j], 0.0, 1.0);
}

std::vector<double> projected(std::span<const double> point, std::span<const double> center,
                              Norm norm, double epsilon) {
  std::vector<double> out(point.begin(), point.end());
  project(out, center, norm, epsilon);
  return out;
}

std::vector<double> random_init(std::span<const double> x, Norm norm, double epsilon,
                                std::uint64_t seed) {
  std::vector<double> out(x.begin(), x.end());
  if (epsilon == 0.0) return out;
  Rng rng(seed);
  if (norm == Norm::kLinf) {
    std::uniform_real_distribution<double> u(-epsilon, epsilon);
    for (double& v : out) v += u(rng);
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> dir(x.size());
    double sq = 0.0;
    for (double& v : dir) {
      v = g(rng);
      sq += v * v;
    }
    const double radius = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * epsilon;
    const double scale = sq > 0.0 ? radius / std::sqrt(sq) : 0.0;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += dir[j] * scale;
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

namespace {

// Per-row losses and dlogits (row-major, B x k) for the current iterate.
void row_losses(const Tensor& logits, const Targets& targets, LossKind kind,
                std::vector<double>& loss, std::vector<double>& dlogits) {
  const std::size_t batch = logits.rows(), k = logits.cols();
  loss.resize(batch);
  dlogits.assign(batch * k, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto z = logits.row(b);
    bool finite = true;
    for (double v : z) finite = finite && std::isfinite(v);
    if (!finite) {
      loss[b] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::span<double> dz(dlogits.data() + b * k, k);
    loss[b] = kind == LossKind::kLabel
                  ? tensor::cross_entropy(z, targets.labels[b], dz)
                  : tensor::soft_cross_entropy(z, targets.logits->row(b), dz);
    if (!std::isfinite(loss[b])) std::fill(dz.begin(), dz.end(), 0.0);
  }
}

}  // namespace

BatchAttack attack_batch(const models::Model& model, const Tensor& inputs, const Targets& targets,
                         const AttackSpec& spec, std::span<const std::uint64_t> row_seeds,
                         const AttackOptions& options) {
  spec.validate();
  const std::size_t d = model.input_dim();
  if (inputs.rank() != 2 || inputs.cols() != d) {
    throw Error(ErrorCode::kShapeMismatch, "attack inputs " + tensor::shape_to_string(inputs.shape()) +
                                               " do not match model input dimension " +
                                               std::to_string(d));
  }
  const std::size_t batch = inputs.rows();
  if (row_seeds.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch, "attack needs one seed per row");
  }
  if (spec.loss == LossKind::kLabel && targets.labels.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch, "attack needs one label per row");
  }
  if (spec.loss == LossKind::kSoft &&
      (targets.logits == nullptr || targets.logits->rows() != batch ||
       targets.logits->cols() != model.classes())) {
    throw Error(ErrorCode::kShapeMismatch, "soft attack needs (batch, classes) target logits");
  }

  const auto clean = inputs.values();
  std::vector<double> best(clean.begin(), clean.end());
  std::vector<double> best_loss(batch, -std::numeric_limits<double>::infinity());
  std::vector<char> ok(batch, 0);

  BatchAttack result;
  std::vector<double> loss, dlogits;
  for (int r = 0; r < spec.restarts; ++r) {
    std::vector<double> cur(clean.begin(), clean.end());
    if (spec.random_init) {
      for (std::size_t b = 0; b < batch; ++b) {
        const auto init = random_init(inputs.row(b), spec.norm, spec.epsilon,
                                      derive_seed(row_seeds[b], {static_cast<std::uint64_t>(r)}));
        std::copy(init.begin(), init.end(), cur.begin() + static_cast<std::ptrdiff_t>(b * d));
      }
    }
    std::vector<char> alive(batch, 1);
    std::vector<double> r_best(clean.begin(), clean.end());
    std::vector<double> r_loss(batch, -std::numeric_limits<double>::infinity());

    auto consider = [&](const std::vector<double>& l) {
      for (std::size_t b = 0; b < batch; ++b) {
        if (!alive[b]) continue;
        if (!std::isfinite(l[b])) {
          alive[b] = 0;
          continue;
        }
        if (l[b] > r_loss[b]) {
          r_loss[b] = l[b];
          std::copy_n(cur.begin() + static_cast<std::ptrdiff_t>(b * d), d,
                      r_best.begin() + static_cast<std::ptrdiff_t>(b * d));
        }
      }
    };

    for (int t = 0; t <= spec.iters; ++t) {
      Tensor iterate({batch, d}, cur);
      auto fwd = model.forward(iterate, tensor::FiniteCheck::kSkip);
      row_losses(fwd.logits, targets, spec.loss, loss, dlogits);
      if (t > 0) consider(loss);
      if (t == spec.iters) break;
      for (std::size_t b = 0; b < batch; ++b) {
        if (!std::isfinite(loss[b])) alive[b] = 0;
      }
      const std::size_t k = model.classes();
      for (std::size_t b = 0; b < batch; ++b) {
        if (!alive[b]) std::fill_n(dlogits.begin() + static_cast<std::ptrdiff_t>(b * k), k, 0.0);
      }
      const Tensor grad = tensor::grad_input(fwd.tape, Tensor({batch, k}, dlogits));
      for (std::size_t b = 0; b < batch; ++b) {
        if (!alive[b]) continue;
        const auto g = grad.row(b);
        double* x = cur.data() + b * d;
        bool finite = true;
        for (double v : g) finite = finite && std::isfinite(v);
        if (!finite) {
          alive[b] = 0;
          continue;
        }
        if (spec.norm == Norm::kLinf) {
          for (std::size_t j = 0; j < d; ++j) {
            const double s = g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0);
            x[j] = x[j] + spec.step_size * s;
          }
        } else {
          double sq = 0.0;
          for (double v : g) sq += v * v;
          if (sq > 0.0) {
            const double scale = spec.step_size / std::sqrt(sq);
            for (std::size_t j = 0; j < d; ++j) x[j] = x[j] + g[j] * scale;
          }
        }
        project(std::span<double>(x, d), inputs.row(b), spec.norm, spec.epsilon);
      }
      if (options.observer) options.observer(r, t, Tensor({batch, d}, cur));
    }

    for (std::size_t b = 0; b < batch; ++b) {
      if (!alive[b]) continue;
      if (!ok[b] || r_loss[b] > best_loss[b]) {
        ok[b] = 1;
        best_loss[b] = r_loss[b];
        std::copy_n(r_best.begin() + static_cast<std::ptrdiff_t>(b * d), d,
                    best.begin() + static_cast<std::ptrdiff_t>(b * d));
      }
    }
    if (options.keep_restarts) {
      result.restart_points.emplace_back(tensor::Shape{batch, d}, std::move(r_best));
      result.restart_ok.push_back(alive);
    }
  }

  result.adversarial = Tensor({batch, d}, std::move(best));
  result.loss = std::move(best_loss);
  result.ok = std::move(ok);
  return result;
}

namespace {

std::vector<double> single(const models::Model& model, std::span<const double> x,
                           const Targets& targets, const AttackSpec& spec, std::uint64_t seed) {
  const Tensor input = Tensor::row_vector(x);
  const std::uint64_t seeds[1] = {seed};
  BatchAttack res = attack_batch(model, input, targets, spec, seeds);
  if (!res.ok[0]) throw Error(ErrorCode::kAttackFailed, "every attack restart produced a non-finite loss");
  return std::move(res.adversarial).release();
}

}  // namespace

std::vector<double> attack(const models::Model& model, std::span<const double> x, std::size_t label,
                           const AttackSpec& spec, std::uint64_t seed) {
  AttackSpec s = spec;
  s.loss = LossKind::kLabel;
  const std::size_t labels[1] = {label};
  return single(model, x, Targets{labels, nullptr}, s, seed);
}

std::vector<double> attack_soft(const models::Model& model, std::span<const double> x,
                                std::span<const double> target_logits, const AttackSpec& spec,
                                std::uint64_t seed) {
  AttackSpec s = spec;
  s.loss = LossKind::kSoft;
  const Tensor target = Tensor::row_vector(target_logits);
  return single(model, x, Targets{{}, &target}, s, seed);
}

}  // namespace acs::attacks
