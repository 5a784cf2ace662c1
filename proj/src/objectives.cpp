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

#include "acs/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "acs/error.hpp"
#include "acs/ops.hpp"

namespace acs::objectives {

using tensor::Tensor;

Kind parse_kind(const std::string& name) {
  if (name == "vanilla") return Kind::kVanilla;
  if (name == "adversarial") return Kind::kAdversarial;
  if (name == "trades") return Kind::kTrades;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown objective '" + name + "' (expected vanilla, adversarial or trades)");
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kVanilla: return "vanilla";
    case Kind::kAdversarial: return "adversarial";
    case Kind::kTrades: return "trades";
  }
  return "?";
}

Objective Objective::vanilla() { return Objective{}; }

Objective Objective::adversarial(const attacks::AttackSpec& attack) {
  Objective o;
  o.kind = Kind::kAdversarial;
  o.attack = attack;
  o.attack.loss = attacks::LossKind::kLabel;
  return o;
}

Objective Objective::trades(const attacks::AttackSpec& attack, double lambda_inv) {
  Objective o;
  o.kind = Kind::kTrades;
  o.attack = attack;
  o.attack.loss = attacks::LossKind::kSoft;
  o.lambda_inv = lambda_inv;
  return o;
}

void Objective::validate() const {
  if (kind == Kind::kVanilla) return;
  attack.validate();
  if (kind == Kind::kTrades && !(lambda_inv > 0.0 && std::isfinite(lambda_inv))) {
    throw Error(ErrorCode::kInvalidArgument, "trades objective needs lambda_inv > 0");
  }
}

attacks::AttackSpec Objective::inner_attack() const {
  attacks::AttackSpec s = attack;
  s.loss = kind == Kind::kTrades ? attacks::LossKind::kSoft : attacks::LossKind::kLabel;
  return s;
}

namespace {

void check_batch(const models::Model& model, const Tensor& inputs,
                 std::span<const std::size_t> labels) {
  if (inputs.rank() != 2 || inputs.cols() != model.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "objective inputs " +
                                               tensor::shape_to_string(inputs.shape()) +
                                               " do not match model input dimension " +
                                               std::to_string(model.input_dim()));
  }
  if (labels.size() != inputs.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "objective needs one label per row");
  }
}

// Rows of x_adv where the mask is set, clean rows elsewhere.
Tensor mix_rows(const Tensor& clean, const Tensor& x_adv, std::span<const char> adversarial) {
  if (adversarial.empty()) return x_adv;
  std::vector<double> out(clean.values().begin(), clean.values().end());
  const std::size_t d = clean.cols();
  for (std::size_t b = 0; b < clean.rows(); ++b) {
    if (!adversarial[b]) continue;
    const auto r = x_adv.row(b);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  return Tensor(clean.shape(), std::move(out));
}

// Upstream gradients for one batch. For single-branch objectives only `up_x`
// is used and the branch input is already mixed.
struct Upstream {
  double loss = 0.0;
  std::vector<double> up_x;
  std::vector<double> up_adv;
};

Upstream single_branch(const Tensor& logits, std::span<const std::size_t> labels,
                       std::span<const double> coeff) {
  const std::size_t batch = logits.rows(), k = logits.cols();
  Upstream u;
  u.up_x.assign(batch * k, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<double> dz(u.up_x.data() + b * k, k);
    const double l = tensor::cross_entropy(logits.row(b), labels[b], dz);
    u.loss += coeff[b] * l;
    for (double& v : dz) v *= coeff[b];
  }
  return u;
}

Upstream two_branch(const Tensor& clean_logits, const Tensor& adv_logits,
                    std::span<const std::size_t> labels, std::span<const double> coeff,
                    double lambda_inv, std::span<const char> adversarial) {
  const std::size_t batch = clean_logits.rows(), k = clean_logits.cols();
  Upstream u;
  u.up_x.assign(batch * k, 0.0);
  u.up_adv.assign(batch * k, 0.0);
  std::vector<double> dtarget(k);
  for (std::size_t b = 0; b < batch; ++b) {
    std::span<double> dz(u.up_x.data() + b * k, k);
    std::span<double> dw(u.up_adv.data() + b * k, k);
    double l = tensor::cross_entropy(clean_logits.row(b), labels[b], dz);
    if (adversarial.empty() || adversarial[b]) {
      // Second term with f(x_adv) live and f(x) frozen, third with the roles swapped.
      const double soft =
          tensor::soft_cross_entropy(adv_logits.row(b), clean_logits.row(b), dw, dtarget);
      l += lambda_inv * soft;
      for (std::size_t c = 0; c < k; ++c) {
        dz[c] += lambda_inv * dtarget[c];
        dw[c] *= lambda_inv;
      }
    } else {
      std::fill(dw.begin(), dw.end(), 0.0);
    }
    u.loss += coeff[b] * l;
    for (std::size_t c = 0; c < k; ++c) {
      dz[c] *= coeff[b];
      dw[c] *= coeff[b];
    }
  }
  return u;
}

void add_outer(std::span<double> feature, std::span<const double> h, std::span<const double> delta) {
  const std::size_t k = delta.size();
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) feature[i * k + c] += h[i] * delta[c];
  }
  for (std::size_t c = 0; c < k; ++c) feature[h.size() * k + c] += delta[c];
}

}  // namespace

AdversarialBatch adversarial_batch(const Objective& objective, const models::Model& model,
                                   const Tensor& inputs, std::span<const std::size_t> labels,
                                   std::span<const std::uint64_t> row_seeds) {
  check_batch(model, inputs, labels);
  if (objective.kind == Kind::kVanilla || objective.attack.epsilon == 0.0) {
    return {inputs, std::vector<char>(inputs.rows(), 1)};
  }
  const attacks::AttackSpec spec = objective.inner_attack();
  attacks::BatchAttack res;
  if (objective.kind == Kind::kAdversarial) {
    res = attacks::attack_batch(model, inputs, attacks::Targets{labels, nullptr}, spec, row_seeds);
  } else {
    const Tensor target = model.logits(inputs);
    res = attacks::attack_batch(model, inputs, attacks::Targets{{}, &target}, spec, row_seeds);
  }
  return {std::move(res.adversarial), std::move(res.ok)};
}

LossGrad weighted_loss_grad(const Objective& objective, const models::Model& model,
                            const Tensor& inputs, std::span<const std::size_t> labels,
                            const Tensor& x_adv, std::span<const double> weights, double scale,
                            std::span<const char> adversarial) {
  check_batch(model, inputs, labels);
  const std::size_t batch = inputs.rows();
  if (x_adv.shape() != inputs.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "x_adv shape differs from the clean batch");
  }
  if (!weights.empty() && weights.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch, "one weight per row expected");
  }
  if (!adversarial.empty() && adversarial.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch, "one adversarial flag per row expected");
  }
  std::vector<double> coeff(batch);
  for (std::size_t b = 0; b < batch; ++b) coeff[b] = scale * (weights.empty() ? 1.0 : weights[b]);

  const std::size_t k = model.classes();
  LossGrad out;
  if (objective.kind != Kind::kTrades) {
    const Tensor input =
        objective.kind == Kind::kVanilla ? inputs : mix_rows(inputs, x_adv, adversarial);
    auto fwd = model.forward(input);
    Upstream u = single_branch(fwd.logits, labels, coeff);
    out.loss = u.loss;
    out.grad = tensor::grad_params(fwd.tape, Tensor({batch, k}, std::move(u.up_x)));
    return out;
  }
  auto fx = model.forward(inputs);
  auto fa = model.forward(x_adv);
  Upstream u = two_branch(fx.logits, fa.logits, labels, coeff, objective.lambda_inv, adversarial);
  out.loss = u.loss;
  out.grad = tensor::grad_params(fx.tape, Tensor({batch, k}, std::move(u.up_x)));
  const auto g2 = tensor::grad_params(fa.tape, Tensor({batch, k}, std::move(u.up_adv)));
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += g2[i];
  return out;
}

Tensor last_layer_features(const Objective& objective, const models::Model& model,
                           const Tensor& inputs, std::span<const std::size_t> labels,
                           const Tensor& x_adv) {
  check_batch(model, inputs, labels);
  if (x_adv.shape() != inputs.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "x_adv shape differs from the clean batch");
  }
  const std::size_t batch = inputs.rows(), k = model.classes();
  const std::size_t dim = model.last_layer_size();
  std::vector<double> features(batch * dim, 0.0);
  const std::vector<double> ones(batch, 1.0);
  if (objective.kind != Kind::kTrades) {
    auto fwd = model.forward(objective.kind == Kind::kVanilla ? inputs : x_adv);
    const Upstream u = single_branch(fwd.logits, labels, ones);
    const Tensor& h = fwd.tape.penultimate();
    for (std::size_t b = 0; b < batch; ++b) {
      add_outer({features.data() + b * dim, dim}, h.row(b), {u.up_x.data() + b * k, k});
    }
  } else {
    auto fx = model.forward(inputs);
    auto fa = model.forward(x_adv);
    const Upstream u = two_branch(fx.logits, fa.logits, labels, ones, objective.lambda_inv, {});
    const Tensor& hx = fx.tape.penultimate();
    const Tensor& ha = fa.tape.penultimate();
    for (std::size_t b = 0; b < batch; ++b) {
      std::span<double> f(features.data() + b * dim, dim);
      add_outer(f, hx.row(b), {u.up_x.data() + b * k, k});
      add_outer(f, ha.row(b), {u.up_adv.data() + b * k, k});
    }
  }
  return Tensor({batch, dim}, std::move(features));
}

namespace {

std::vector<double> x_adv_or_clean(const Objective& objective, const models::Model& model,
                                   std::span<const double> x, std::size_t label,
                                   std::uint64_t seed) {
  const Tensor input = Tensor::row_vector(x);
  const std::size_t labels[1] = {label};
  const std::uint64_t seeds[1] = {seed};
  AdversarialBatch adv = adversarial_batch(objective, model, input, labels, seeds);
  if (!adv.ok[0]) {
    throw Error(ErrorCode::kAttackFailed, "every attack restart produced a non-finite loss");
  }
  return std::move(adv.x_adv).release();
}

}  // namespace

PhiValue phi(const Objective& objective, const models::Model& model, std::span<const double> x,
             std::size_t label, std::uint64_t seed) {
  const Tensor input = Tensor::row_vector(x);
  const Tensor z = model.logits(input);
  PhiValue out;
  if (objective.kind == Kind::kVanilla) {
    out.loss = tensor::cross_entropy(z.row(0), label);
    return out;
  }
  std::vector<double> adv = x_adv_or_clean(objective, model, x, label, seed);
  const Tensor w = model.logits(Tensor::row_vector(adv));
  if (objective.kind == Kind::kAdversarial) {
    out.loss = tensor::cross_entropy(w.row(0), label);
  } else {
    out.loss = tensor::cross_entropy(z.row(0), label) +
               objective.lambda_inv * tensor::soft_cross_entropy(w.row(0), z.row(0));
  }
  out.x_adv = std::move(adv);
  return out;
}

std::vector<double> phi_grad_at(const Objective& objective, const models::Model& model,
                                std::span<const double> x, std::size_t label,
                                std::span<const double> x_adv) {
  const std::size_t labels[1] = {label};
  const double weights[1] = {1.0};
  const Tensor input = Tensor::row_vector(x);
  return weighted_loss_grad(objective, model, input, labels,
                            x_adv.empty() ? input : Tensor::row_vector(x_adv), weights, 1.0)
      .grad;
}

std::vector<double> phi_grad(const Objective& objective, const models::Model& model,
                             std::span<const double> x, std::size_t label, std::uint64_t seed) {
  if (objective.kind == Kind::kVanilla) return phi_grad_at(objective, model, x, label, {});
  const auto adv = x_adv_or_clean(objective, model, x, label, seed);
  return phi_grad_at(objective, model, x, label, adv);
}

std::vector<double> last_layer_grad_at(const Objective& objective, const models::Model& model,
                                       std::span<const double> x, std::size_t label,
                                       std::span<const double> x_adv) {
  const std::size_t labels[1] = {label};
  const Tensor input = Tensor::row_vector(x);
  return last_layer_features(objective, model, input, labels,
                             x_adv.empty() ? input : Tensor::row_vector(x_adv))
      .release();
}

std::vector<double> last_layer_grad(const Objective& objective, const models::Model& model,
                                    std::span<const double> x, std::size_t label,
                                    std::uint64_t seed) {
  if (objective.kind == Kind::kVanilla) return last_layer_grad_at(objective, model, x, label, {});
  const auto adv = x_adv_or_clean(objective, model, x, label, seed);
  return last_layer_grad_at(objective, model, x, label, adv);
}

}  // namespace acs::objectives
