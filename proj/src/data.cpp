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

#include "acs/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "acs/error.hpp"
#include "acs/rng.hpp"
#include "text_util.hpp"

namespace acs::data {

using tensor::Tensor;

Dataset::Dataset(std::vector<double> inputs, std::vector<std::size_t> labels, std::size_t classes,
                 tensor::Layout layout, std::string provenance)
    : inputs_(std::move(inputs)),
      labels_(std::move(labels)),
      classes_(classes),
      layout_(layout),
      provenance_(std::move(provenance)) {
  if (labels_.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  if (classes_ < 2) throw Error(ErrorCode::kInvalidArgument, "dataset needs at least 2 classes");
  if (inputs_.size() != labels_.size() * layout_.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset inputs hold " + std::to_string(inputs_.size()) +
                                               " values, expected " +
                                               std::to_string(labels_.size() * layout_.dim()));
  }
  for (std::size_t y : labels_) {
    if (y >= classes_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(y) + " >= class count " + std::to_string(classes_));
    }
  }
  for (double v : inputs_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "dataset input outside [0, 1]");
    }
  }
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  std::vector<double> out(indices.size() * dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(r * dim()));
  }
  return Tensor({indices.size(), dim()}, std::move(out));
}

std::vector<std::size_t> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) out[r] = labels_[indices[r]];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices, const std::string& tag) const {
  if (indices.empty()) throw Error(ErrorCode::kInvalidArgument, "subset needs at least one index");
  std::vector<double> inputs(indices.size() * dim());
  std::vector<std::size_t> labels(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= size()) throw Error(ErrorCode::kInvalidArgument, "subset index out of range");
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), inputs.begin() + static_cast<std::ptrdiff_t>(r * dim()));
    labels[r] = labels_[indices[r]];
  }
  return Dataset(std::move(inputs), std::move(labels), classes_, layout_, provenance_ + "|" + tag);
}

namespace {

void rescale_unit(std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mn = *lo, range = *hi - *lo;
  for (double& x : v) x = range > 0.0 ? std::clamp((x - mn) / range, 0.0, 1.0) : 0.5;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Dataset gen_blobs(std::size_t n, std::size_t k, std::size_t d, double spread, std::uint64_t seed) {
  if (k < 2 || n < k || d == 0) {
    throw Error(ErrorCode::kInvalidArgument, "blobs need k >= 2, n >= k and d >= 1");
  }
  if (!(spread >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "blobs spread must be >= 0");
  Rng rng(seed);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % k;
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(labels[i]) / static_cast<double>(k);
    double* r = x.data() + i * d;
    r[0] = std::cos(angle);
    if (d > 1) r[1] = std::sin(angle);
    for (std::size_t j = 0; j < d; ++j) r[j] += spread * noise(rng);
  }
  rescale_unit(x);
  std::ostringstream prov;
  prov << "blobs:n=" << n << ",k=" << k << ",d=" << d << ",spread=" << format_double(spread)
       << ",seed=" << seed;
  return Dataset(std::move(x), std::move(labels), k, tensor::Layout{1, 1, d}, prov.str());
}

Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "two moons need n >= 2");
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  std::vector<double> x;
  std::vector<std::size_t> y;
  x.reserve(2 * n);
  auto grid = [](std::size_t i, std::size_t count) {
    return count == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = grid(i, n_out);
    x.push_back(std::cos(t));
    x.push_back(std::sin(t));
    y.push_back(0);
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = grid(i, n_in);
    x.push_back(1.0 - std::cos(t));
    x.push_back(0.5 - std::sin(t));
    y.push_back(1);
  }
  Rng rng(seed);
  if (noise > 0.0) {
    std::normal_distribution<double> g(0.0, noise);
    for (double& v : x) v += g(rng);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> xs(2 * n);
  std::vector<std::size_t> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[2 * i] = x[2 * order[i]];
    xs[2 * i + 1] = x[2 * order[i] + 1];
    ys[i] = y[order[i]];
  }
  rescale_unit(xs);
  std::ostringstream prov;
  prov << "moons:n=" << n << ",noise=" << format_double(noise) << ",seed=" << seed;
  return Dataset(std::move(xs), std::move(ys), 2, tensor::Layout{1, 1, 2}, prov.str());
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

void expect_magic(const std::vector<unsigned char>& b, std::uint32_t magic,
                  const std::filesystem::path& path) {
  if (b.size() < 4) throw Error(ErrorCode::kTruncated, "truncated IDX header in " + path.string());
  const std::uint32_t got = be32(b, 0);
  if (got != magic) {
    std::ostringstream os;
    os << "wrong magic 0x" << std::hex << got << " in " << path.string() << ", expected 0x" << magic;
    throw Error(ErrorCode::kWrongMagic, os.str());
  }
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  expect_magic(img, kImagesMagic, images);
  if (img.size() < 16) throw Error(ErrorCode::kTruncated, "truncated IDX header in " + images.string());
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  if (img.size() - 16 < n * rows * cols) {
    throw Error(ErrorCode::kTruncated, "IDX image payload truncated: need " +
                                           std::to_string(n * rows * cols) + " bytes, have " +
                                           std::to_string(img.size() - 16));
  }
  const auto lbl = read_file(labels);
  expect_magic(lbl, kLabelsMagic, labels);
  if (lbl.size() < 8) throw Error(ErrorCode::kTruncated, "truncated IDX header in " + labels.string());
  const std::size_t nl = be32(lbl, 4);
  if (lbl.size() - 8 < nl) {
    throw Error(ErrorCode::kTruncated, "IDX label payload truncated: need " + std::to_string(nl) +
                                           " bytes, have " + std::to_string(lbl.size() - 8));
  }
  if (nl != n) {
    throw Error(ErrorCode::kCountMismatch, "image file holds " + std::to_string(n) +
                                               " images but label file holds " +
                                               std::to_string(nl) + " labels");
  }
  std::vector<double> x(n * rows * cols);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(img[16 + i]) / 255.0;
  std::vector<std::size_t> y(n);
  std::size_t k = 2;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lbl[8 + i];
    k = std::max(k, y[i] + 1);
  }
  return Dataset(std::move(x), std::move(y), k, tensor::Layout{1, rows, cols},
                 "idx:images=" + images.string() + ",labels=" + labels.string());
}

void save_idx(const Dataset& dataset, const std::filesystem::path& images,
              const std::filesystem::path& labels) {
  const auto& layout = dataset.layout();
  if (layout.channels != 1) {
    throw Error(ErrorCode::kInvalidArgument, "IDX images must be single-channel");
  }
  std::ofstream img(images, std::ios::binary | std::ios::trunc);
  if (!img) throw Error(ErrorCode::kIo, "cannot write " + images.string());
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(dataset.size()));
  put_be32(img, static_cast<std::uint32_t>(layout.height));
  put_be32(img, static_cast<std::uint32_t>(layout.width));
  for (double v : dataset.inputs()) img.put(static_cast<char>(std::lround(v * 255.0)));
  std::ofstream lbl(labels, std::ios::binary | std::ios::trunc);
  if (!lbl) throw Error(ErrorCode::kIo, "cannot write " + labels.string());
  put_be32(lbl, kLabelsMagic);
  put_be32(lbl, static_cast<std::uint32_t>(dataset.size()));
  for (std::size_t y : dataset.labels()) {
    if (y > 255) throw Error(ErrorCode::kInvalidArgument, "IDX labels must fit in a byte");
    lbl.put(static_cast<char>(y));
  }
  if (!img || !lbl) throw Error(ErrorCode::kIo, "failed writing IDX files");
}

Dataset from_uri(const std::string& uri) {
  const auto colon = uri.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "dataset URI needs a scheme: '" + uri + "'");
  }
  const std::string scheme = uri.substr(0, colon);
  std::map<std::string, std::string> kv;
  const std::string rest = uri.substr(colon + 1);
  if (!rest.empty()) {
    for (const std::string& item : text_util::split(rest, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "dataset URI field without '=': '" + item + "'");
      }
      kv[text_util::trim(item.substr(0, eq))] = text_util::trim(item.substr(eq + 1));
    }
  }
  auto take = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    std::string v = it == kv.end() ? fallback : it->second;
    if (it != kv.end()) kv.erase(it);
    return v;
  };
  auto finish = [&](Dataset ds) {
    if (!kv.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown dataset URI field '" + kv.begin()->first + "' for " + scheme);
    }
    return ds;
  };
  if (scheme == "blobs") {
    const auto n = text_util::parse_size(take("n", "1000"));
    const auto k = text_util::parse_size(take("k", "2"));
    const auto d = text_util::parse_size(take("d", "2"));
    const double spread = text_util::parse_double(take("spread", "0.5"));
    const auto seed = text_util::parse_u64(take("seed", "0"));
    return finish(gen_blobs(n, k, d, spread, seed));
  }
  if (scheme == "moons") {
    const auto n = text_util::parse_size(take("n", "1000"));
    const double noise = text_util::parse_double(take("noise", "0.1"));
    const auto seed = text_util::parse_u64(take("seed", "0"));
    return finish(gen_two_moons(n, noise, seed));
  }
  if (scheme == "idx") {
    const std::string images = take("images", "");
    const std::string labels = take("labels", "");
    if (images.empty() || labels.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "idx URI needs images= and labels=");
    }
    return finish(load_idx(images, labels));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown dataset scheme '" + scheme + "'");
}

std::vector<Batch> batches(std::span<const std::size_t> active, std::size_t batch_size,
                           std::uint64_t seed, std::span<const double> weights) {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (!weights.empty() && weights.size() != active.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weights must align with the active index list");
  }
  std::vector<std::size_t> order(active.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  out.reserve((order.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    b.indices.reserve(end - start);
    for (std::size_t j = start; j < end; ++j) {
      b.indices.push_back(active[order[j]]);
      if (!weights.empty()) b.weights.push_back(weights[order[j]]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Batch> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  return batches(all, batch_size, seed);
}

}  // namespace acs::data
