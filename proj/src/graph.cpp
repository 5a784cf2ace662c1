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

#include "acs/graph.hpp"

#include <algorithm>
#include <cmath>

#include "acs/error.hpp"
#include "kernels.hpp"

namespace acs::tensor {

Graph::Graph(Layout input) : input_(input), current_(input) {
  if (input.dim() == 0) throw Error(ErrorCode::kInvalidArgument, "graph input dimension is zero");
}

Graph& Graph::dense(std::size_t out) {
  if (out == 0) throw Error(ErrorCode::kInvalidArgument, "dense layer with zero outputs");
  DenseOp op{current_.dim(), out, param_count_};
  param_count_ += op.param_count();
  ops_.emplace_back(op);
  current_ = Layout{1, 1, out};
  return *this;
}

Graph& Graph::relu() {
  ops_.emplace_back(ReluOp{current_.dim()});
  return *this;
}

Graph& Graph::conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                     std::size_t padding) {
  if (out_channels == 0 || kernel == 0 || stride == 0) {
    throw Error(ErrorCode::kInvalidArgument, "conv2d needs positive channels, kernel and stride");
  }
  if (kernel > current_.height + 2 * padding || kernel > current_.width + 2 * padding) {
    throw Error(ErrorCode::kShapeMismatch,
                "conv2d kernel " + std::to_string(kernel) + " larger than padded input " +
                    std::to_string(current_.height) + "x" + std::to_string(current_.width));
  }
  Conv2dOp op{current_.channels, current_.height, current_.width, out_channels, kernel,
              stride, padding, param_count_};
  param_count_ += op.param_count();
  ops_.emplace_back(op);
  current_ = Layout{out_channels, op.out_height(), op.out_width()};
  return *this;
}

Graph& Graph::max_pool(std::size_t size) {
  if (size == 0 || size > current_.height || size > current_.width) {
    throw Error(ErrorCode::kShapeMismatch, "max_pool window " + std::to_string(size) +
                                               " does not fit " + std::to_string(current_.height) +
                                               "x" + std::to_string(current_.width));
  }
  MaxPool2dOp op{current_.channels, current_.height, current_.width, size};
  ops_.emplace_back(op);
  current_ = Layout{current_.channels, op.out_height(), op.out_width()};
  return *this;
}

const DenseOp* Graph::final_dense() const {
  if (ops_.empty()) return nullptr;
  return std::get_if<DenseOp>(&ops_.back());
}

namespace {

using kernels::axpy;
using kernels::dot;

std::vector<double> dense_forward(const DenseOp& op, const double* theta, std::span<const double> x,
                                  std::size_t batch) {
  std::vector<double> y(batch * op.out);
  const double* w = theta + op.offset;
  const double* bias = w + op.in * op.out;
  for (std::size_t b = 0; b < batch; ++b) {
    double* yr = y.data() + b * op.out;
    std::copy(bias, bias + op.out, yr);
    const double* xr = x.data() + b * op.in;
    for (std::size_t i = 0; i < op.in; ++i) axpy(op.out, xr[i], w + i * op.out, yr);
  }
  return y;
}

void dense_backward(const DenseOp& op, const double* theta, std::span<const double> x,
                    std::span<const double> delta, std::size_t batch, double* dtheta,
                    std::vector<double>* dx) {
  const double* w = theta + op.offset;
  if (dtheta) {
    double* dw = dtheta + op.offset;
    double* db = dw + op.in * op.out;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* xr = x.data() + b * op.in;
      const double* dr = delta.data() + b * op.out;
      for (std::size_t i = 0; i < op.in; ++i) axpy(op.out, xr[i], dr, dw + i * op.out);
      for (std::size_t o = 0; o < op.out; ++o) db[o] += dr[o];
    }
  }
  if (dx) {
    dx->assign(batch * op.in, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dr = delta.data() + b * op.out;
      double* g = dx->data() + b * op.in;
      for (std::size_t i = 0; i < op.in; ++i) g[i] = dot(op.out, w + i * op.out, dr);
    }
  }
}

std::vector<double> conv_forward(const Conv2dOp& op, const double* theta, std::span<const double> x,
                                 std::size_t batch) {
  const std::size_t oh = op.out_height(), ow = op.out_width();
  const std::size_t k = op.kernel;
  const double* w = theta + op.offset;
  const double* bias = w + op.out_channels * op.in_channels * k * k;
  std::vector<double> y(batch * op.out_dim());
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xin = x.data() + b * op.in_dim();
    double* yout = y.data() + b * op.out_dim();
    for (std::size_t oc = 0; oc < op.out_channels; ++oc) {
      double* plane = yout + oc * oh * ow;
      std::fill(plane, plane + oh * ow, bias[oc]);
      for (std::size_t ic = 0; ic < op.in_channels; ++ic) {
        const double* xp = xin + ic * op.in_height * op.in_width;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double wv = w[((oc * op.in_channels + ic) * k + ky) * k + kx];
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const long iy = static_cast<long>(oy * op.stride + ky) - static_cast<long>(op.padding);
              if (iy < 0 || iy >= static_cast<long>(op.in_height)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const long ix =
                    static_cast<long>(ox * op.stride + kx) - static_cast<long>(op.padding);
                if (ix < 0 || ix >= static_cast<long>(op.in_width)) continue;
                plane[oy * ow + ox] += wv * xp[iy * op.in_width + ix];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

void conv_backward(const Conv2dOp& op, const double* theta, std::span<const double> x,
                   std::span<const double> delta, std::size_t batch, double* dtheta,
                   std::vector<double>* dx) {
  const std::size_t oh = op.out_height(), ow = op.out_width();
  const std::size_t k = op.kernel;
  const double* w = theta + op.offset;
  double* dw = dtheta ? dtheta + op.offset : nullptr;
  double* db = dw ? dw + op.out_channels * op.in_channels * k * k : nullptr;
  if (dx) dx->assign(batch * op.in_dim(), 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xin = x.data() + b * op.in_dim();
    const double* dy = delta.data() + b * op.out_dim();
    double* g = dx ? dx->data() + b * op.in_dim() : nullptr;
    for (std::size_t oc = 0; oc < op.out_channels; ++oc) {
      const double* dplane = dy + oc * oh * ow;
      if (db) {
        for (std::size_t i = 0; i < oh * ow; ++i) db[oc] += dplane[i];
      }
      for (std::size_t ic = 0; ic < op.in_channels; ++ic) {
        const double* xp = xin + ic * op.in_height * op.in_width;
        double* gp = g ? g + ic * op.in_height * op.in_width : nullptr;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t widx = ((oc * op.in_channels + ic) * k + ky) * k + kx;
            const double wv = w[widx];
            double acc = 0.0;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const long iy = static_cast<long>(oy * op.stride + ky) - static_cast<long>(op.padding);
              if (iy < 0 || iy >= static_cast<long>(op.in_height)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const long ix =
                    static_cast<long>(ox * op.stride + kx) - static_cast<long>(op.padding);
                if (ix < 0 || ix >= static_cast<long>(op.in_width)) continue;
                const double d = dplane[oy * ow + ox];
                acc += d * xp[iy * op.in_width + ix];
                if (gp) gp[iy * op.in_width + ix] += wv * d;
              }
            }
            if (dw) dw[widx] += acc;
          }
        }
      }
    }
  }
}

std::vector<double> pool_forward(const MaxPool2dOp& op, std::span<const double> x, std::size_t batch,
                                 std::vector<std::uint32_t>& winners) {
  const std::size_t oh = op.out_height(), ow = op.out_width(), s = op.size;
  std::vector<double> y(batch * op.out_dim());
  winners.resize(y.size());
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xin = x.data() + b * op.in_dim();
    for (std::size_t c = 0; c < op.channels; ++c) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (c * op.in_height + oy * s) * op.in_width + ox * s;
          for (std::size_t dy = 0; dy < s; ++dy) {
            for (std::size_t dxo = 0; dxo < s; ++dxo) {
              const std::size_t idx = (c * op.in_height + oy * s + dy) * op.in_width + ox * s + dxo;
              if (xin[idx] > xin[best]) best = idx;
            }
          }
          const std::size_t o = b * op.out_dim() + (c * oh + oy) * ow + ox;
          y[o] = xin[best];
          winners[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return y;
}

void check_finite_or_throw(const std::vector<double>& v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFinite, std::string("non-finite value produced by ") + where);
    }
  }
}

}  // namespace

struct TapeBuilder {
  static ForwardResult run(const Graph& graph, std::span<const double> theta, const Tensor& input,
                           FiniteCheck check, bool keep) {
    if (theta.size() != graph.param_count()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "parameter vector has " + std::to_string(theta.size()) +
                      " entries, graph expects " + std::to_string(graph.param_count()));
    }
    const std::size_t d = graph.input_dim();
    std::size_t batch = 0;
    if (input.rank() == 1 && input.size() == d) {
      batch = 1;
    } else if (input.rank() == 2 && input.shape()[1] == d) {
      batch = input.shape()[0];
    } else {
      throw Error(ErrorCode::kShapeMismatch, "input shape " + shape_to_string(input.shape()) +
                                                 " does not match model input dimension " +
                                                 std::to_string(d));
    }

    Tape tape;
    tape.graph_ = &graph;
    tape.theta_ = theta;
    tape.batch_ = batch;
    tape.input_shape_ = input.shape();

    std::vector<double> act(input.values().begin(), input.values().end());
    for (const Op& op : graph.ops()) {
      Tape::Node node{op, {}, {}};
      std::vector<double> next;
      if (const auto* dense = std::get_if<DenseOp>(&op)) {
        next = dense_forward(*dense, theta.data(), act, batch);
      } else if (const auto* relu = std::get_if<ReluOp>(&op)) {
        next.resize(act.size());
        for (std::size_t i = 0; i < act.size(); ++i) next[i] = act[i] > 0.0 ? act[i] : 0.0;
        (void)relu;
      } else if (const auto* conv = std::get_if<Conv2dOp>(&op)) {
        next = conv_forward(*conv, theta.data(), act, batch);
      } else {
        const auto& pool = std::get<MaxPool2dOp>(op);
        next = pool_forward(pool, act, batch, node.argmax);
      }
      if (keep) {
        const std::size_t width = act.size() / batch;
        node.saved = Tensor({batch, width}, std::move(act));
        tape.nodes_.push_back(std::move(node));
      }
      act = std::move(next);
    }
    if (check == FiniteCheck::kThrow) check_finite_or_throw(act, "forward pass");

    const std::size_t k = graph.output_dim();
    Shape out_shape = input.rank() == 1 ? Shape{k} : Shape{batch, k};
    tape.logits_shape_ = out_shape;
    return ForwardResult{Tensor(std::move(out_shape), std::move(act)), std::move(tape)};
  }
};

ForwardResult forward(const Graph& graph, std::span<const double> theta, const Tensor& input,
                      FiniteCheck check) {
  return TapeBuilder::run(graph, theta, input, check, true);
}

Tensor forward_values(const Graph& graph, std::span<const double> theta, const Tensor& input) {
  return std::move(TapeBuilder::run(graph, theta, input, FiniteCheck::kThrow, false).logits);
}

const Tensor& Tape::penultimate() const {
  if (nodes_.empty() || !std::holds_alternative<DenseOp>(nodes_.back().op)) {
    throw Error(ErrorCode::kInvalidArgument, "graph does not end in a dense layer");
  }
  return nodes_.back().saved;
}

Gradients Tape::backward(const Tensor& upstream, GradTargets targets) {
  if (consumed_) throw Error(ErrorCode::kTapeConsumed, "tape already consumed by a backward pass");
  if (graph_ == nullptr) throw Error(ErrorCode::kInvalidArgument, "empty tape");
  if (upstream.shape() != logits_shape_) {
    throw Error(ErrorCode::kShapeMismatch, "upstream shape " + shape_to_string(upstream.shape()) +
                                               " does not match logits shape " +
                                               shape_to_string(logits_shape_));
  }
  consumed_ = true;

  Gradients out;
  if (targets.params) out.params.assign(graph_->param_count(), 0.0);
  double* dtheta = targets.params ? out.params.data() : nullptr;

  std::vector<double> delta(upstream.values().begin(), upstream.values().end());
  for (std::size_t n = nodes_.size(); n-- > 0;) {
    const Node& node = nodes_[n];
    const bool need_dx = n > 0 || targets.input;
    std::vector<double> dx;
    if (const auto* dense = std::get_if<DenseOp>(&node.op)) {
      dense_backward(*dense, theta_.data(), node.saved.values(), delta, batch_, dtheta,
                     need_dx ? &dx : nullptr);
    } else if (std::holds_alternative<ReluOp>(node.op)) {
      if (need_dx) {
        const auto x = node.saved.values();
        dx.resize(delta.size());
        for (std::size_t i = 0; i < delta.size(); ++i) dx[i] = x[i] > 0.0 ? delta[i] : 0.0;
      }
    } else if (const auto* conv = std::get_if<Conv2dOp>(&node.op)) {
      conv_backward(*conv, theta_.data(), node.saved.values(), delta, batch_, dtheta,
                    need_dx ? &dx : nullptr);
    } else {
      const auto& pool = std::get<MaxPool2dOp>(node.op);
      if (need_dx) {
        dx.assign(batch_ * pool.in_dim(), 0.0);
        const std::size_t out_dim = pool.out_dim();
        for (std::size_t o = 0; o < delta.size(); ++o) {
          dx[(o / out_dim) * pool.in_dim() + node.argmax[o]] += delta[o];
        }
      }
    }
    if (!need_dx) break;
    delta = std::move(dx);
  }
  if (targets.input) {
    if (nodes_.empty()) delta.assign(upstream.values().begin(), upstream.values().end());
    out.input = Tensor(input_shape_, std::move(delta));
  }
  return out;
}

std::vector<double> grad_params(Tape& tape, const Tensor& upstream) {
  return std::move(tape.backward(upstream, {true, false}).params);
}

Tensor grad_input(Tape& tape, const Tensor& upstream) {
  return std::move(tape.backward(upstream, {false, true}).input);
}

}  // namespace acs::tensor
