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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>

#include "acs/data.hpp"
#include "acs/error.hpp"
#include "support.hpp"

using namespace acs;

namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
}

std::vector<std::uint8_t> cat(std::initializer_list<std::vector<std::uint8_t>> parts) {
  std::vector<std::uint8_t> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("acs_test_" + name); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

// Gradient-descent logistic regression, returns training accuracy.
double logistic_train_accuracy(const data::Dataset& ds) {
  const std::size_t d = ds.dim();
  std::vector<double> w(d + 1, 0.0);
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> g(d + 1, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto x = ds.row(i);
      double s = w[d];
      for (std::size_t j = 0; j < d; ++j) s += w[j] * (x[j] - 0.5);
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double err = p - static_cast<double>(ds.label(i));
      for (std::size_t j = 0; j < d; ++j) g[j] += err * (x[j] - 0.5);
      g[d] += err;
    }
    for (std::size_t j = 0; j <= d; ++j) w[j] -= 5.0 * g[j] / static_cast<double>(ds.size());
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    double s = w[d];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * (x[j] - 0.5);
    correct += (s > 0.0 ? 1u : 0u) == ds.label(i);
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// Circle through three points: center and radius.
std::array<double, 3> circle(const double* a, const double* b, const double* c) {
  const double d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
  const double a2 = a[0] * a[0] + a[1] * a[1], b2 = b[0] * b[0] + b[1] * b[1], c2 = c[0] * c[0] + c[1] * c[1];
  const double ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
  const double uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
  return {ux, uy, std::hypot(a[0] - ux, a[1] - uy)};
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("blobs with spread 0 collapse to points a nearest-mean rule separates") {
  const auto ds = data::gen_blobs(200, 5, 3, 0.0, 4);
  std::vector<std::vector<double>> mean(5, std::vector<double>(3, 0.0));
  std::vector<double> count(5, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) mean[ds.label(i)][j] += ds.row(i)[j];
    count[ds.label(i)] += 1;
  }
  for (std::size_t c = 0; c < 5; ++c) for (auto& v : mean[c]) v /= count[c];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j) s += std::pow(ds.row(i)[j] - mean[c][j], 2);
      if (s < bd) bd = s, best = c;
    }
    correct += best == ds.label(i);
  }
  CHECK(correct == ds.size());
}

TEST_CASE("blobs are seeded, balanced and inside the unit box") {
  const auto a = data::gen_blobs(1001, 4, 6, 0.3, 9);
  const auto b = data::gen_blobs(1001, 4, 6, 0.3, 9);
  const auto c = data::gen_blobs(1001, 4, 6, 0.3, 10);
  CHECK(std::equal(a.inputs().begin(), a.inputs().end(), b.inputs().begin()));
  CHECK(std::equal(a.labels().begin(), a.labels().end(), b.labels().begin()));
  CHECK_FALSE(std::equal(a.inputs().begin(), a.inputs().end(), c.inputs().begin()));
  std::map<std::size_t, std::size_t> count;
  for (auto l : a.labels()) count[l]++;
  for (auto& [l, n] : count) CHECK((n == 250 || n == 251));
  for (double v : a.inputs()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(*std::min_element(a.inputs().begin(), a.inputs().end()) == 0.0);
  CHECK(*std::max_element(a.inputs().begin(), a.inputs().end()) == 1.0);
}

TEST_CASE("two 2-d blobs are linearly separable for logistic regression") {
  const auto ds = data::gen_blobs(400, 2, 2, 0.3, 1);
  CHECK(logistic_train_accuracy(ds) >= 0.99);
}

TEST_CASE("two moons without noise lie on two arcs") {
  const auto ds = data::gen_two_moons(101, 0.0, 3);
  CHECK(ds.classes() == 2);
  std::vector<std::size_t> idx[2];
  for (std::size_t i = 0; i < ds.size(); ++i) idx[ds.label(i)].push_back(i);
  CHECK(std::abs(double(idx[0].size()) - double(idx[1].size())) <= 1.0);
  for (int c = 0; c < 2; ++c) {
    const auto& v = idx[c];
    const auto circ = circle(ds.row(v[0]).data(), ds.row(v[v.size() / 3]).data(), ds.row(v[2 * v.size() / 3]).data());
    for (std::size_t i : v) {
      const auto x = ds.row(i);
      CHECK(std::abs(std::hypot(x[0] - circ[0], x[1] - circ[1]) - circ[2]) <= 1e-9);
    }
  }
  const auto again = data::gen_two_moons(101, 0.1, 3);
  const auto twice = data::gen_two_moons(101, 0.1, 3);
  CHECK(std::equal(again.inputs().begin(), again.inputs().end(), twice.inputs().begin()));
  for (double v : again.inputs()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("IDX fixture of two 2x2 images") {
  const auto images = tmp("img.idx"), labels = tmp("lbl.idx");
  write_bytes(images, cat({be32(0x803), be32(2), be32(2), be32(2), {0, 51, 102, 255, 255, 204, 153, 1}}));
  write_bytes(labels, cat({be32(0x801), be32(2), {3, 7}}));
  const auto ds = data::load_idx(images, labels);
  REQUIRE(ds.size() == 2);
  CHECK(ds.dim() == 4);
  CHECK(ds.layout().height == 2);
  CHECK(ds.layout().width == 2);
  const double expect[8] = {0, 51, 102, 255, 255, 204, 153, 1};
  for (std::size_t i = 0; i < 8; ++i) CHECK(ds.inputs()[i] == expect[i] / 255.0);
  CHECK(ds.label(0) == 3);
  CHECK(ds.label(1) == 7);
  CHECK(ds.classes() >= 8);
}

TEST_CASE("IDX errors are distinct") {
  const auto images = tmp("img2.idx"), labels = tmp("lbl2.idx");
  write_bytes(images, cat({be32(0x803), be32(2), be32(2), be32(2), {0, 1, 2, 3, 4, 5, 6, 7}}));
  write_bytes(labels, cat({be32(0x801), be32(2), {0, 1}}));
  CHECK(code_of([&] { data::load_idx(labels, labels); }) == ErrorCode::kWrongMagic);

  write_bytes(tmp("short.idx"), cat({be32(0x803), be32(2), be32(2), be32(2), {0, 1, 2}}));
  CHECK(code_of([&] { data::load_idx(tmp("short.idx"), labels); }) == ErrorCode::kTruncated);

  write_bytes(tmp("lbl3.idx"), cat({be32(0x801), be32(3), {0, 1, 2}}));
  try {
    data::load_idx(images, tmp("lbl3.idx"));
    FAIL("count mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCountMismatch);
    const std::string msg = e.what();
    CHECK(msg.find('2') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
  CHECK(code_of([&] { data::load_idx(tmp("missing.idx"), labels); }) == ErrorCode::kIo);
}

TEST_CASE("IDX write then read reproduces the data") {
  testing::Gen gen(2);
  std::vector<double> x(5 * 9);
  for (auto& v : x) v = static_cast<double>(gen.index(256)) / 255.0;
  const data::Dataset ds(x, {0, 1, 2, 1, 0}, 3, tensor::Layout{1, 3, 3}, "fixture");
  data::save_idx(ds, tmp("rt_img.idx"), tmp("rt_lbl.idx"));
  const auto back = data::load_idx(tmp("rt_img.idx"), tmp("rt_lbl.idx"));
  CHECK(std::equal(back.inputs().begin(), back.inputs().end(), ds.inputs().begin()));
  CHECK(std::equal(back.labels().begin(), back.labels().end(), ds.labels().begin()));
  const auto uri = data::from_uri("idx:images=" + tmp("rt_img.idx").string() + ",labels=" + tmp("rt_lbl.idx").string());
  CHECK(std::equal(uri.inputs().begin(), uri.inputs().end(), ds.inputs().begin()));
}

TEST_CASE("batching covers each active index once and keeps the short tail") {
  testing::Gen gen(5);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = gen.range(1, 300), b = gen.range(1, 64);
    const auto bs = data::batches(n, b, gen.index(1000));
    std::vector<int> seen(n, 0);
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (i + 1 < bs.size()) CHECK(bs[i].indices.size() == b);
      for (auto j : bs[i].indices) seen[j]++;
    }
    CHECK(bs.size() == (n + b - 1) / b);
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
}

TEST_CASE("batching is seeded and one batch of size n is a permutation") {
  const auto one = data::batches(50, 50, 3);
  REQUIRE(one.size() == 1);
  auto sorted = one[0].indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  const auto e1 = data::batches(50, 8, 1), e1b = data::batches(50, 8, 1), e2 = data::batches(50, 8, 2);
  CHECK(e1[0].indices == e1b[0].indices);
  CHECK(e1[0].indices != e2[0].indices);
}

TEST_CASE("weights travel with their samples") {
  const std::vector<std::size_t> active = {3, 9, 14, 20, 21};
  const std::vector<double> weights = {0.5, 1.5, 2.0, 3.0, 4.0};
  const auto bs = data::batches(active, 2, 7, weights);
  std::size_t total = 0;
  for (const auto& b : bs) {
    REQUIRE(b.weights.size() == b.indices.size());
    for (std::size_t i = 0; i < b.indices.size(); ++i) {
      const auto pos = std::find(active.begin(), active.end(), b.indices[i]) - active.begin();
      CHECK(b.weights[i] == weights[static_cast<std::size_t>(pos)]);
    }
    total += b.indices.size();
  }
  CHECK(total == active.size());
}

TEST_CASE("dataset URIs and subsets") {
  const auto ds = data::from_uri("blobs:n=40,k=4,d=3,spread=0.1,seed=2");
  CHECK(ds.size() == 40);
  CHECK(ds.dim() == 3);
  CHECK(ds.classes() == 4);
  const std::vector<std::size_t> idx = {5, 0, 7};
  const auto sub = ds.subset(idx, "part");
  CHECK(sub.size() == 3);
  CHECK(sub.label(0) == ds.label(5));
  CHECK(sub.provenance().find("|part") != std::string::npos);
  CHECK(data::from_uri("moons:n=30,noise=0,seed=1").size() == 30);
  CHECK_THROWS_AS(data::from_uri("cifar:n=10"), Error);
  CHECK_THROWS_AS(data::from_uri("blobs:n=10,k=4,d=2,spread=0.1,seed=1,bogus=3"), Error);
}

}  // TEST_SUITE
