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

#include <doctest.h>

#include <cmath>

#include "acs/error.hpp"
#include "acs/graph.hpp"
#include "acs/models.hpp"
#include "acs/ops.hpp"
#include "support.hpp"

using namespace acs;
using tensor::Tensor;
using testing::Gen;

namespace {

tensor::Graph linear_graph(std::size_t in, std::size_t out) {
  tensor::Graph g(tensor::Layout{1, 1, in});
  g.dense(out);
  return g;
}

// Plain loops for a dense-relu-dense MLP, W stored (in x out).
std::vector<double> straight_line_mlp(std::span<const double> theta, std::span<const double> x,
                                      std::size_t d, std::size_t h, std::size_t k) {
  std::vector<double> hid(h), out(k);
  const double* w1 = theta.data();
  const double* b1 = w1 + d * h;
  const double* w2 = b1 + h;
  const double* b2 = w2 + h * k;
  for (std::size_t j = 0; j < h; ++j) {
    double s = b1[j];
    for (std::size_t i = 0; i < d; ++i) s += x[i] * w1[i * h + j];
    hid[j] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t c = 0; c < k; ++c) {
    double s = b2[c];
    for (std::size_t j = 0; j < h; ++j) s += hid[j] * w2[j * k + c];
    out[c] = s;
  }
  return out;
}

double ce_of(const tensor::Graph& g, std::span<const double> theta, std::span<const double> x,
             std::size_t label) {
  const Tensor z = tensor::forward_values(g, theta, Tensor({x.size()}, {x.begin(), x.end()}));
  return tensor::cross_entropy(z.values(), label);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("identity linear layer returns its input") {
  const auto g = linear_graph(3, 3);
  std::vector<double> theta(12, 0.0);
  for (std::size_t i = 0; i < 3; ++i) theta[i * 3 + i] = 1.0;
  const std::vector<double> v = {0.25, -1.5, 3.0};
  const auto r = tensor::forward(g, theta, Tensor({3}, v));
  CHECK(r.logits.shape() == tensor::Shape{3});
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.logits[i] == v[i]);
}

TEST_CASE("zero weights give zero logits") {
  const models::Model m(models::make_mlp(5, {7, 4}, 3), std::vector<double>(
      models::parameter_count(models::make_mlp(5, {7, 4}, 3)), 0.0));
  Gen gen(3);
  const Tensor z = m.logits(Tensor({5}, gen.uniforms(5)));
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("forward matches a straight-line reimplementation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = testing::random_mlp(6, {9}, 4, seed);
    Gen gen(100 + seed);
    const auto x = gen.uniforms(6);
    const Tensor z = m.logits(Tensor({6}, x));
    const auto ref = straight_line_mlp(m.theta(), x, 6, 9, 4);
    CHECK(testing::max_abs_diff(z.values(), ref) <= 1e-12);
  }
}

TEST_CASE("linear model CE gradient at w = 0 is (softmax(0) - onehot) x") {
  const std::size_t d = 4, k = 3;
  const auto g = linear_graph(d, k);
  const std::vector<double> theta(d * k + k, 0.0);
  const std::vector<double> x = {0.1, 0.7, 0.3, 0.9};
  const std::size_t label = 1;
  auto r = tensor::forward(g, theta, Tensor({d}, x));
  std::vector<double> dz(k);
  tensor::cross_entropy(r.logits.values(), label, dz);
  const auto grad = tensor::grad_params(r.tape, Tensor({k}, dz));
  REQUIRE(grad.size() == theta.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const double expect = (1.0 / 3.0 - (c == label ? 1.0 : 0.0)) * x[i];
      CHECK(grad[i * k + c] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    CHECK(grad[d * k + c] == doctest::Approx(1.0 / 3.0 - (c == label ? 1.0 : 0.0)).epsilon(1e-14));
  }
}

TEST_CASE("parameter gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = testing::random_mlp(5, {8, 6}, 3, seed);
    Gen gen(seed + 77);
    const auto x = gen.uniforms(5);
    const std::size_t label = gen.index(3);
    auto r = m.forward(Tensor({5}, x));
    std::vector<double> dz(3);
    tensor::cross_entropy(r.logits.values(), label, dz);
    const auto grad = tensor::grad_params(r.tape, Tensor({3}, dz));
    const auto fd = testing::central_diff(
        [&](std::span<const double> th) { return ce_of(m.graph(), th, x, label); },
        std::vector<double>(m.theta().begin(), m.theta().end()));
    CHECK(testing::rel_error(grad, fd) <= 1e-6);
  }
}

TEST_CASE("conv and pooling gradients match central differences") {
  const auto spec = models::make_cnn_small(tensor::Layout{1, 4, 4}, 3, 2, 3, 5);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto m = models::init(spec, seed);
    Gen gen(seed + 5);
    for (double& t : m.mutable_theta()) t += 0.05 * gen.normal();
    const auto x = gen.uniforms(16);
    const std::size_t label = gen.index(3);
    auto r = m.forward(Tensor({16}, x));
    std::vector<double> dz(3);
    tensor::cross_entropy(r.logits.values(), label, dz);
    const auto grads = r.tape.backward(Tensor({3}, dz));
    const auto fd_theta = testing::central_diff(
        [&](std::span<const double> th) { return ce_of(m.graph(), th, x, label); },
        std::vector<double>(m.theta().begin(), m.theta().end()));
    CHECK(testing::rel_error(grads.params, fd_theta) <= 1e-6);
    const auto fd_x = testing::central_diff(
        [&](std::span<const double> xs) { return ce_of(m.graph(), m.theta(), xs, label); }, x);
    CHECK(testing::rel_error(grads.input.values(), fd_x) <= 1e-6);
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  const auto m = testing::random_mlp(4, {5}, 3, 1);
  auto r = m.forward(Tensor({4}, {0.1, 0.2, 0.3, 0.4}));
  const auto grads = r.tape.backward(Tensor::zeros({3}));
  for (double v : grads.params) CHECK(v == 0.0);
  for (double v : grads.input.values()) CHECK(v == 0.0);
}

TEST_CASE("linear model input gradient is the weight vector") {
  const std::size_t d = 5;
  const auto g = linear_graph(d, 1);
  Gen gen(9);
  auto theta = gen.normals(d + 1);
  auto r = tensor::forward(g, theta, Tensor({d}, gen.uniforms(d)));
  const Tensor gx = tensor::grad_input(r.tape, Tensor({1}, {2.5}));
  for (std::size_t i = 0; i < d; ++i) CHECK(gx[i] == doctest::Approx(2.5 * theta[i]).epsilon(1e-14));
}

TEST_CASE("input gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = testing::random_mlp(6, {7, 5}, 4, seed + 20);
    Gen gen(seed);
    const auto x = gen.uniforms(6);
    const std::size_t label = gen.index(4);
    auto r = m.forward(Tensor({6}, x));
    std::vector<double> dz(4);
    tensor::cross_entropy(r.logits.values(), label, dz);
    const Tensor gx = tensor::grad_input(r.tape, Tensor({4}, dz));
    const auto fd = testing::central_diff(
        [&](std::span<const double> xs) { return ce_of(m.graph(), m.theta(), xs, label); }, x);
    CHECK(testing::rel_error(gx.values(), fd) <= 1e-6);
  }
}

TEST_CASE("constant model has zero input gradient") {
  const auto spec = models::make_mlp(4, {6}, 3);
  const models::Model m(spec, std::vector<double>(models::parameter_count(spec), 0.0));
  auto r = m.forward(Tensor({4}, {0.5, 0.5, 0.5, 0.5}));
  const Tensor gx = tensor::grad_input(r.tape, Tensor({3}, {0.3, -0.1, -0.2}));
  for (double v : gx.values()) CHECK(v == 0.0);
}

TEST_CASE("a tape supports exactly one backward pass") {
  const auto m = testing::random_mlp(3, {4}, 2, 2);
  auto r = m.forward(Tensor({3}, {0.1, 0.2, 0.3}));
  tensor::grad_params(r.tape, Tensor({2}, {1.0, -1.0}));
  CHECK(r.tape.consumed());
  try {
    tensor::grad_params(r.tape, Tensor({2}, {1.0, -1.0}));
    FAIL("second backward accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTapeConsumed);
  }
}

TEST_CASE("shape mismatches are rejected with the dimensions") {
  const auto m = testing::random_mlp(3, {4}, 2, 2);
  try {
    m.forward(Tensor({5}, std::vector<double>(5, 0.1)));
    FAIL("wrong input accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
    CHECK(std::string(e.what()).find('5') != std::string::npos);
  }
  auto r = m.forward(Tensor({3}, {0.1, 0.2, 0.3}));
  CHECK_THROWS_AS(tensor::grad_params(r.tape, Tensor({3}, {1.0, 0.0, 0.0})), Error);
}

TEST_CASE("forward is deterministic and batching is elementwise") {
  const auto m = testing::random_mlp(5, {6, 6}, 3, 4);
  Gen gen(11);
  const std::size_t n = 7;
  const auto xs = gen.uniforms(n * 5);
  const Tensor batch = Tensor::matrix(n, 5, xs);
  const Tensor a = m.logits(batch);
  const Tensor b = m.logits(batch);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor zi = m.logits(Tensor({5}, {xs.begin() + i * 5, xs.begin() + (i + 1) * 5}));
    for (std::size_t c = 0; c < 3; ++c) CHECK(zi[c] == a.row(i)[c]);
  }
}

TEST_CASE("batched parameter gradient is the sum of per-sample gradients") {
  const auto m = testing::random_mlp(4, {5}, 3, 8);
  Gen gen(12);
  const std::size_t n = 4;
  const auto xs = gen.uniforms(n * 4);
  const auto ups = gen.normals(n * 3);
  auto rb = m.forward(Tensor::matrix(n, 4, xs));
  const auto gb = tensor::grad_params(rb.tape, Tensor::matrix(n, 3, ups));
  std::vector<double> sum(gb.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = m.forward(Tensor({4}, {xs.begin() + i * 4, xs.begin() + (i + 1) * 4}));
    const auto g = tensor::grad_params(r.tape, Tensor({3}, {ups.begin() + i * 3, ups.begin() + (i + 1) * 3}));
    for (std::size_t j = 0; j < g.size(); ++j) sum[j] += g[j];
  }
  CHECK(testing::max_abs_diff(gb, sum) <= 1e-12);
}

TEST_CASE("relu subgradient at zero is zero") {
  tensor::Graph g(tensor::Layout{1, 1, 1});
  g.dense(1).relu().dense(1);
  // pre-activation exactly 0 for x = 0.5
  const std::vector<double> theta = {2.0, -1.0, 3.0, 0.0};
  auto r = tensor::forward(g, theta, Tensor({1}, {0.5}));
  const auto grads = r.tape.backward(Tensor({1}, {1.0}));
  CHECK(grads.input[0] == 0.0);
  CHECK(grads.params[0] == 0.0);
}

TEST_CASE("softmax is a positive distribution; argmax ties go low") {
  Gen gen(13);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = gen.range(2, 12);
    const auto z = gen.normals(k, 30.0);
    std::vector<double> p(k);
    tensor::softmax(z, p);
    double s = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  const std::vector<double> tie = {1.0, 3.0, 3.0, 2.0};
  CHECK(tensor::argmax(tie) == 1);
}

TEST_CASE("softmax cross-entropy derivatives match central differences") {
  Gen gen(14);
  for (int t = 0; t < 20; ++t) {
    const std::size_t k = gen.range(2, 6);
    const auto z = gen.normals(k, 2.0);
    const auto w = gen.normals(k, 2.0);
    std::vector<double> dz(k), dw(k);
    tensor::soft_cross_entropy(z, w, dz, dw);
    const auto fz = testing::central_diff(
        [&](std::span<const double> a) { return tensor::soft_cross_entropy(a, w); }, z);
    const auto fw = testing::central_diff(
        [&](std::span<const double> a) { return tensor::soft_cross_entropy(z, a); }, w);
    CHECK(testing::rel_error(dz, fz) <= 1e-6);
    CHECK(testing::rel_error(dw, fw) <= 1e-6);
  }
}

}  // TEST_SUITE
