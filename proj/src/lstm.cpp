/*
 * Copyright 2026 The Operon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "operon/nn/lstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"
#include "operon/nn/activation.hpp"
#include "operon/nn/linalg.hpp"

namespace operon::nn {

namespace {

using Index = Eigen::Index;
using StridedRows = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedRows = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Rows {s * steps + t : s < batch} of a [batch*steps x cols] matrix.
StridedRows timestep(RowMatrix& m, std::size_t t, std::size_t batch, std::size_t steps) {
  return {m.data() + t * m.cols(), static_cast<Index>(batch), m.cols(),
          Eigen::OuterStride<>(static_cast<Index>(steps) * m.cols())};
}

ConstStridedRows timestep(const RowMatrix& m, std::size_t t, std::size_t batch, std::size_t steps) {
  return {m.data() + t * m.cols(), static_cast<Index>(batch), m.cols(),
          Eigen::OuterStride<>(static_cast<Index>(steps) * m.cols())};
}

}  // namespace

LstmLayer::LstmLayer(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden)
    : in_(in), hidden_(hidden) {
  if (in == 0 || hidden == 0) throw ConfigError(fmt::format("lstm '{}' needs positive sizes", name));
  wx_ = params.allocate(name + ".input_kernel", in, 4 * hidden);
  wh_ = params.allocate(name + ".recurrent_kernel", hidden, 4 * hidden);
  b_ = params.allocate(name + ".bias", 1, 4 * hidden);
}

void LstmLayer::initialize(ParameterSet& params, Rng& rng) const {
  const double in_limit = std::sqrt(6.0 / static_cast<double>(in_ + 4 * hidden_));
  auto wx = input_kernel(params);
  for (Index i = 0; i < wx.size(); ++i) wx.data()[i] = rng.uniform(-in_limit, in_limit);
  const double rec_limit = 1.0 / std::sqrt(static_cast<double>(hidden_));
  auto wh = recurrent_kernel(params);
  for (Index i = 0; i < wh.size(); ++i) wh.data()[i] = rng.uniform(-rec_limit, rec_limit);
  auto b = bias(params);
  b.setZero();
  b.middleCols(static_cast<Index>(hidden_), static_cast<Index>(hidden_)).setConstant(1.0);
}

void LstmLayer::activate(Eigen::Ref<RowMatrix> z) const {
  const auto h = static_cast<Index>(hidden_);
  z.leftCols(2 * h) = z.leftCols(2 * h).unaryExpr([](double v) { return sigmoid(v); });
  z.middleCols(2 * h, h) = z.middleCols(2 * h, h).array().tanh();
  z.rightCols(h) = z.rightCols(h).unaryExpr([](double v) { return sigmoid(v); });
}

LstmState LstmLayer::step(const ParameterSet& params, const RowMatrix& x, const LstmState& prev) const {
  if (static_cast<std::size_t>(x.cols()) != in_) {
    throw DimensionError(fmt::format("lstm expects {} input columns, got {}", in_, x.cols()));
  }
  if (prev.h.rows() != x.rows() || prev.c.rows() != x.rows() || static_cast<std::size_t>(prev.h.cols()) != hidden_ ||
      static_cast<std::size_t>(prev.c.cols()) != hidden_) {
    throw DimensionError(fmt::format("lstm state must be {} x {}", x.rows(), hidden_));
  }
  const auto h = static_cast<Index>(hidden_);
  RowMatrix z = matmul_rowwise(x, input_kernel(params));
  z.rowwise() += bias(params).row(0);
  z += matmul_rowwise(prev.h, recurrent_kernel(params));
  activate(z);
  LstmState next;
  next.c = z.middleCols(h, h).cwiseProduct(prev.c) + z.leftCols(h).cwiseProduct(z.middleCols(2 * h, h));
  next.h = z.rightCols(h).cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

RowMatrix LstmLayer::forward(const ParameterSet& params, const RowMatrix& x, std::size_t batch, std::size_t steps,
                             LstmCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != in_ || static_cast<std::size_t>(x.rows()) != batch * steps) {
    throw DimensionError(fmt::format("lstm sequence input must be [{} x {}], got [{} x {}]", batch * steps, in_,
                                     x.rows(), x.cols()));
  }
  const auto h = static_cast<Index>(hidden_);
  const auto b = static_cast<Index>(batch);
  RowMatrix gates = matmul_rowwise(x, input_kernel(params));
  gates.rowwise() += bias(params).row(0);
  RowMatrix cell(x.rows(), h);
  RowMatrix hidden(x.rows(), h);
  RowMatrix h_prev = RowMatrix::Zero(b, h);
  RowMatrix c_prev = RowMatrix::Zero(b, h);
  RowMatrix recurrent(b, 4 * h);
  for (std::size_t t = 0; t < steps; ++t) {
    auto z = timestep(gates, t, batch, steps);
    matmul_rowwise(h_prev, recurrent_kernel(params), recurrent);
    z += recurrent;
    activate(z);
    c_prev = z.middleCols(h, h).cwiseProduct(c_prev) + z.leftCols(h).cwiseProduct(z.middleCols(2 * h, h));
    h_prev = z.rightCols(h).cwiseProduct(c_prev.array().tanh().matrix());
    timestep(cell, t, batch, steps) = c_prev;
    timestep(hidden, t, batch, steps) = h_prev;
  }
  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
    cache->input = x;
    cache->gates = std::move(gates);
    cache->cell = std::move(cell);
    cache->hidden = hidden;
  }
  return hidden;
}

RowMatrix LstmLayer::backward(const ParameterSet& params, const LstmCache& cache, const RowMatrix& d_hidden,
                              Vector& grad, bool need_input_grad) const {
  const std::size_t batch = cache.batch;
  const std::size_t steps = cache.steps;
  const auto h = static_cast<Index>(hidden_);
  const auto b = static_cast<Index>(batch);
  if (d_hidden.rows() != cache.hidden.rows() || d_hidden.cols() != h) {
    throw DimensionError("lstm backward gradient does not match the forward output");
  }
  const auto wh = recurrent_kernel(params);
  RowMatrix d_gates(cache.gates.rows(), 4 * h);
  RowMatrix dh_next = RowMatrix::Zero(b, h);
  RowMatrix dc_next = RowMatrix::Zero(b, h);
  const RowMatrix zero_state = RowMatrix::Zero(b, h);
  for (std::size_t t = steps; t-- > 0;) {
    const auto g = timestep(cache.gates, t, batch, steps);
    const RowMatrix c = timestep(cache.cell, t, batch, steps);
    const RowMatrix c_prev = t > 0 ? RowMatrix(timestep(cache.cell, t - 1, batch, steps)) : zero_state;
    const RowMatrix tc = c.array().tanh().matrix();
    const RowMatrix dh = RowMatrix(timestep(d_hidden, t, batch, steps)) + dh_next;
    const auto gi = g.leftCols(h).array();
    const auto gf = g.middleCols(h, h).array();
    const auto gg = g.middleCols(2 * h, h).array();
    const auto go = g.rightCols(h).array();
    const RowMatrix dc = (dh.array() * go * (1.0 - tc.array().square()) + dc_next.array()).matrix();
    auto dz = timestep(d_gates, t, batch, steps);
    dz.leftCols(h) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
    dz.middleCols(h, h) = (dc.array() * c_prev.array() * gf * (1.0 - gf)).matrix();
    dz.middleCols(2 * h, h) = (dc.array() * gi * (1.0 - gg.square())).matrix();
    dz.rightCols(h) = (dh.array() * tc.array() * go * (1.0 - go)).matrix();
    dc_next = (dc.array() * gf).matrix();
    dh_next.noalias() = dz * wh.transpose();
  }
  // h_{t-1} for every row, zero at t = 0.
  RowMatrix h_prev = RowMatrix::Zero(cache.hidden.rows(), h);
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t t = 1; t < steps; ++t) h_prev.row(static_cast<Index>(s * steps + t)) = cache.hidden.row(static_cast<Index>(s * steps + t - 1));
  }
  Eigen::Map<RowMatrix> dwx(grad.data() + wx_, static_cast<Index>(in_), 4 * h);
  Eigen::Map<RowMatrix> dwh(grad.data() + wh_, h, 4 * h);
  Eigen::Map<Eigen::RowVectorXd> db(grad.data() + b_, 4 * h);
  dwx.noalias() += cache.input.transpose() * d_gates;
  dwh.noalias() += h_prev.transpose() * d_gates;
  db += d_gates.colwise().sum();
  if (!need_input_grad) return {};
  RowMatrix dx = d_gates * input_kernel(params).transpose();
  return dx;
}

LstmState lstm_step(const LstmLayer& layer, const ParameterSet& params, const RowMatrix& x, const RowMatrix& h_prev,
                    const RowMatrix& c_prev) {
  return layer.step(params, x, {h_prev, c_prev});
}

}  // namespace operon::nn
