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

#include "acs/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "acs/error.hpp"
#include "acs/ops.hpp"
#include "acs/rng.hpp"
#include "text_util.hpp"

namespace acs::models {

using tensor::Tensor;

ModelSpec make_mlp(std::size_t input_dim, std::vector<std::size_t> widths, std::size_t classes) {
  ModelSpec spec;
  spec.arch = "mlp";
  spec.input = tensor::Layout{1, 1, input_dim};
  for (std::size_t w : widths) spec.layers.emplace_back(DenseLayer{w, Activation::kRelu});
  spec.classes = classes;
  validate(spec);
  return spec;
}

ModelSpec make_cnn_small(tensor::Layout input, std::size_t classes, std::size_t conv1,
                         std::size_t conv2, std::size_t hidden) {
  ModelSpec spec;
  spec.arch = "cnn-small";
  spec.input = input;
  spec.layers.emplace_back(ConvLayer{conv1, 3, 1, 1, Activation::kRelu, 2});
  spec.layers.emplace_back(ConvLayer{conv2, 3, 1, 1, Activation::kRelu, 2});
  spec.layers.emplace_back(DenseLayer{hidden, Activation::kRelu});
  spec.classes = classes;
  validate(spec);
  return spec;
}

namespace {

tensor::Graph build_unchecked(const ModelSpec& spec) {
  tensor::Graph g(spec.input);
  for (const LayerSpec& layer : spec.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      g.dense(d->units);
      if (d->activation == Activation::kRelu) g.relu();
    } else {
      const auto& c = std::get<ConvLayer>(layer);
      g.conv2d(c.channels, c.kernel, c.stride, c.padding);
      if (c.activation == Activation::kRelu) g.relu();
      if (c.pool > 1) g.max_pool(c.pool);
    }
  }
  g.dense(spec.classes);
  return g;
}

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "none"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "none") return Activation::kNone;
  throw Error(ErrorCode::kInvalidArgument, "unknown activation '" + s + "'");
}

}  // namespace

void validate(const ModelSpec& spec) {
  if (spec.classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "model needs at least 2 classes");
  }
  if (spec.input.dim() == 0) throw Error(ErrorCode::kInvalidArgument, "model input is empty");
  bool seen_dense = false;
  for (const LayerSpec& layer : spec.layers) {
    if (std::holds_alternative<DenseLayer>(layer)) {
      seen_dense = true;
    } else if (seen_dense) {
      throw Error(ErrorCode::kInvalidArgument, "convolution after a dense layer");
    }
  }
  // Chaining errors (kernel larger than the map, pooling past 1x1) surface
  // from the graph builder.
  build_unchecked(spec);
}

tensor::Graph build_graph(const ModelSpec& spec) {
  validate(spec);
  return build_unchecked(spec);
}

std::size_t parameter_count(const ModelSpec& spec) { return build_graph(spec).param_count(); }

std::string spec_to_text(const ModelSpec& spec) {
  std::ostringstream os;
  os << "arch = " << spec.arch << '\n';
  os << "input = " << spec.input.channels << 'x' << spec.input.height << 'x' << spec.input.width
     << '\n';
  os << "layers = ";
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (i) os << ',';
    if (const auto* d = std::get_if<DenseLayer>(&spec.layers[i])) {
      os << "dense:" << d->units << ':' << activation_name(d->activation);
    } else {
      const auto& c = std::get<ConvLayer>(spec.layers[i]);
      os << "conv:" << c.channels << ':' << c.kernel << ':' << c.stride << ':' << c.padding << ':'
         << activation_name(c.activation) << ':' << c.pool;
    }
  }
  os << '\n';
  os << "classes = " << spec.classes << '\n';
  return os.str();
}

ModelSpec spec_from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = text_util::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kSchemaMismatch, "model spec line without '=': " + line);
    }
    kv[text_util::trim(line.substr(0, eq))] = text_util::trim(line.substr(eq + 1));
  }
  for (const char* key : {"arch", "input", "layers", "classes"}) {
    if (!kv.count(key)) throw Error(ErrorCode::kSchemaMismatch, std::string("model spec lacks ") + key);
  }
  ModelSpec spec;
  spec.arch = kv["arch"];
  const auto dims = text_util::split(kv["input"], 'x');
  if (dims.size() != 3) throw Error(ErrorCode::kSchemaMismatch, "model input must be CxHxW");
  spec.input = tensor::Layout{text_util::parse_size(dims[0]), text_util::parse_size(dims[1]),
                              text_util::parse_size(dims[2])};
  if (!kv["layers"].empty()) {
    for (const std::string& item : text_util::split(kv["layers"], ',')) {
      const auto f = text_util::split(item, ':');
      if (f.size() == 3 && f[0] == "dense") {
        spec.layers.emplace_back(DenseLayer{text_util::parse_size(f[1]), parse_activation(f[2])});
      } else if (f.size() == 7 && f[0] == "conv") {
        spec.layers.emplace_back(ConvLayer{text_util::parse_size(f[1]), text_util::parse_size(f[2]),
                                           text_util::parse_size(f[3]), text_util::parse_size(f[4]),
                                           parse_activation(f[5]), text_util::parse_size(f[6])});
      } else {
        throw Error(ErrorCode::kSchemaMismatch, "bad layer descriptor '" + item + "'");
      }
    }
  }
  spec.classes = text_util::parse_size(kv["classes"]);
  validate(spec);
  return spec;
}

Model::Model(ModelSpec spec, std::vector<double> theta, std::uint64_t seed)
    : spec_(std::move(spec)), graph_(build_graph(spec_)), theta_(std::move(theta)), seed_(seed) {
  if (theta_.size() != graph_.param_count()) {
    throw Error(ErrorCode::kShapeMismatch, "model expects " + std::to_string(graph_.param_count()) +
                                               " parameters, got " + std::to_string(theta_.size()));
  }
}

std::size_t Model::last_layer_offset() const { return graph_.final_dense()->offset; }
std::size_t Model::last_layer_size() const { return graph_.final_dense()->param_count(); }
std::size_t Model::penultimate_dim() const { return graph_.final_dense()->in; }

tensor::ForwardResult Model::forward(const Tensor& input, tensor::FiniteCheck check) const {
  return tensor::forward(graph_, theta_, input, check);
}

Tensor Model::logits(const Tensor& input) const {
  return tensor::forward_values(graph_, theta_, input);
}

Model init(const ModelSpec& spec, std::uint64_t seed) {
  tensor::Graph g = build_graph(spec);
  std::vector<double> theta(g.param_count(), 0.0);
  Rng rng(derive_seed(seed, {seed_tag::kInit}));
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) theta[offset + i] = u(rng);
  };
  for (const tensor::Op& op : g.ops()) {
    if (const auto* d = std::get_if<tensor::DenseOp>(&op)) {
      fill(d->offset, d->in * d->out, d->in);
    } else if (const auto* c = std::get_if<tensor::Conv2dOp>(&op)) {
      fill(c->offset, c->out_channels * c->in_channels * c->kernel * c->kernel,
           c->in_channels * c->kernel * c->kernel);
    }
  }
  return Model(spec, std::move(theta), seed);
}

double ce_loss(std::span<const double> logits, std::size_t label) {
  return tensor::cross_entropy(logits, label);
}

double ce_soft_loss(std::span<const double> logits, std::span<const double> target_logits) {
  return tensor::soft_cross_entropy(logits, target_logits);
}

Tensor penultimate(const Model& model, const Tensor& input) {
  auto fwd = model.forward(input);
  const Tensor& h = fwd.tape.penultimate();
  if (input.rank() == 1) return Tensor({h.size()}, std::vector<double>(h.values().begin(), h.values().end()));
  return Tensor(h.shape(), std::vector<double>(h.values().begin(), h.values().end()));
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path.string());
  out << "ACSCKPT 1\n" << spec_to_text(model.spec()) << "seed = " << model.seed() << '\n'
      << "params = " << model.theta().size() << '\n' << "end\n";
  std::vector<unsigned char> bytes(model.theta().size() * 4);
  for (std::size_t i = 0; i < model.theta().size(); ++i) {
    const float f = static_cast<float>(model.theta()[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>(u >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "ACSCKPT 1") {
    throw Error(ErrorCode::kWrongMagic, "not a checkpoint file: " + path.string());
  }
  std::string header;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? line : text_util::trim(line.substr(0, eq));
    const std::string value = eq == std::string::npos ? "" : text_util::trim(line.substr(eq + 1));
    if (key == "params") {
      count = text_util::parse_size(value);
    } else if (key == "seed") {
      seed = std::stoull(value);
    } else {
      header += line + '\n';
    }
  }
  if (!ended) throw Error(ErrorCode::kTruncated, "checkpoint header not terminated");
  ModelSpec spec = spec_from_text(header);
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw Error(ErrorCode::kTruncated, "checkpoint payload truncated: " + path.string());
  }
  std::vector<double> theta(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    float f;
    std::memcpy(&f, &u, 4);
    theta[i] = f;
  }
  return Model(std::move(spec), std::move(theta), seed);
}

}  // namespace acs::models
