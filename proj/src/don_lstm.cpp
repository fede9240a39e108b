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

#include "operon/don_lstm.hpp"

#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

std::string to_string(TrainingStage stage) {
  switch (stage) {
    case TrainingStage::don_pretrain: return "don_pretrain";
    case TrainingStage::lstm_only: return "lstm_only";
    case TrainingStage::joint_finetune: return "joint_finetune";
  }
  return "don_pretrain";
}

Tensor reshape_to_sequence(const Tensor& flat, std::size_t n_t, std::size_t n_x) {
  if (flat.rank() != 2 || flat.dim(1) != n_t * n_x) {
    throw DimensionError(fmt::format("reshape_to_sequence: width {} is not n_t*n_x = {}",
                                     flat.rank() == 2 ? flat.dim(1) : 0, n_t * n_x));
  }
  return flat.reshaped({flat.dim(0), n_t, n_x});
}

Tensor reshape_to_sequence(const RowMatrix& flat, std::size_t n_t, std::size_t n_x) {
  return reshape_to_sequence(Tensor::from_matrix(flat), n_t, n_x);
}

RowMatrix flatten_sequence(const Tensor& seq) {
  if (seq.rank() != 3) throw DimensionError("flatten_sequence expects a rank-3 tensor");
  return seq.matrix();
}

void require_uniform_time(const QueryGrid& grid) {
  if (!grid.is_tensor()) throw ConfigError("sequence models need a tensor query grid");
  const auto t = grid.times();
  if (t.size() < 2) return;
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw ConfigError("query times must increase");
  for (std::size_t i = 2; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw ConfigError(fmt::format("non-uniform time step at index {}: {} vs {}", i, t[i] - t[i - 1], dt));
    }
  }
}

SequenceHead::SequenceHead(nn::ParameterSet& params, std::size_t n_x, std::size_t hidden)
    : lstm(params, "lstm", n_x, hidden), head(params, "head", hidden, n_x, nn::Activation::linear) {}

void SequenceHead::initialize(nn::ParameterSet& params, Rng& rng) const {
  lstm.initialize(params, rng);
  head.initialize(params, rng);
}

RowMatrix SequenceHead::forward(const nn::ParameterSet& params, const RowMatrix& seq, std::size_t batch,
                                std::size_t n_t, Cache* cache) const {
  if (cache) {
    cache->hidden = lstm.forward(params, seq, batch, n_t, &cache->lstm);
    return head.affine(params, cache->hidden);
  }
  return head.affine(params, lstm.forward(params, seq, batch, n_t));
}

RowMatrix SequenceHead::backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out,
                                 Vector& grad, bool need_input_grad) const {
  RowMatrix d_hidden = head.backward(params, cache.hidden, cache.hidden, d_out, d_out, grad, true);
  return lstm.backward(params, cache.lstm, d_hidden, grad, need_input_grad);
}

namespace {

bool block_frozen(const nn::ParameterSet& params, std::string_view prefix) {
  auto [begin, end] = params.range(prefix);
  for (std::size_t i = begin; i < end; ++i) {
    if (params.trainable(i)) return false;
  }
  return true;
}

Eigen::Map<const RowMatrix> as_sequence(const RowMatrix& flat, std::size_t n_x) {
  return {flat.data(), flat.size() / static_cast<Eigen::Index>(n_x), static_cast<Eigen::Index>(n_x)};
}

}  // namespace

DonLstm::DonLstm(nn::ParameterSet& params, const DeepONetConfig& don, std::size_t n_x, std::size_t hidden)
    : don_(params, don, "don."), seq_(params, n_x, hidden), n_x_(n_x) {
  if (n_x == 0 || hidden == 0) throw ConfigError("don-lstm: n_x and hidden must be positive");
}

void DonLstm::initialize(nn::ParameterSet& params, Rng& rng) const {
  don_.initialize(params, rng);
  seq_.initialize(params, rng);
}

RowMatrix DonLstm::forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                           Cache* cache) const {
  require_uniform_time(grid);
  if (grid.n_x() != n_x_) throw DimensionError(fmt::format("don-lstm: grid has {} points, model {}", grid.n_x(), n_x_));
  const auto batch = static_cast<std::size_t>(u0.rows());
  const bool don_frozen = block_frozen(params, "don.");
  const RowMatrix flat = don_.forward(params, u0, grid, cache && !don_frozen ? &cache->don : nullptr);
  const RowMatrix seq = as_sequence(flat, n_x_);
  RowMatrix out = seq_.forward(params, seq, batch, grid.n_t(), cache ? &cache->seq : nullptr);
  if (cache) {
    cache->batch = batch;
    cache->n_t = grid.n_t();
    cache->don_frozen = don_frozen;
  }
  out.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(grid.n_t() * n_x_));
  return out;
}

void DonLstm::backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out,
                       Vector& grad) const {
  RowMatrix d_seq = seq_.backward(params, cache.seq, as_sequence(d_out, n_x_), grad, !cache.don_frozen);
  if (cache.don_frozen) return;
  d_seq.resize(static_cast<Eigen::Index>(cache.batch), static_cast<Eigen::Index>(cache.n_t * n_x_));
  don_.backward(params, cache.don, d_seq, grad);
}

nn::ForwardResult DonLstm::forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                        const QueryGrid& grid) const {
  auto cache = std::make_shared<Cache>();
  nn::ForwardResult r;
  r.output = forward(params, u0, grid, cache.get());
  r.pullback = [this, &params, cache](const RowMatrix& d_out, Vector& grad) { backward(params, *cache, d_out, grad); };
  return r;
}

void DonLstm::set_trainable(nn::ParameterSet& params, TrainingStage stage) const {
  switch (stage) {
    case TrainingStage::don_pretrain:
      params.set_all_trainable(false);
      params.set_trainable("don.", true);
      break;
    case TrainingStage::lstm_only:
      params.set_all_trainable(true);
      params.set_trainable("don.", false);
      break;
    case TrainingStage::joint_finetune:
      params.set_all_trainable(true);
      break;
  }
}

LstmBaseline::LstmBaseline(nn::ParameterSet& params, std::size_t sensors, std::size_t n_t, std::size_t n_x,
                           std::size_t hidden)
    : lift_(params, "lift", sensors, n_t * n_x, nn::Activation::linear), seq_(params, n_x, hidden), n_t_(n_t),
      n_x_(n_x) {
  if (n_t == 0 || n_x == 0 || hidden == 0 || sensors == 0) throw ConfigError("lstm baseline: zero dimension");
}

void LstmBaseline::initialize(nn::ParameterSet& params, Rng& rng) const {
  lift_.initialize(params, rng);
  seq_.initialize(params, rng);
}

RowMatrix LstmBaseline::forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                                Cache* cache) const {
  require_uniform_time(grid);
  if (grid.n_t() != n_t_ || grid.n_x() != n_x_) {
    throw DimensionError(fmt::format("lstm baseline is bound to a {}x{} grid, got {}x{}", n_t_, n_x_, grid.n_t(),
                                     grid.n_x()));
  }
  if (static_cast<std::size_t>(u0.cols()) != lift_.in()) {
    throw DimensionError(fmt::format("lstm baseline: expected {} sensors, got {}", lift_.in(), u0.cols()));
  }
  const auto batch = static_cast<std::size_t>(u0.rows());
  const RowMatrix lifted = lift_.affine(params, u0);
  RowMatrix out = seq_.forward(params, as_sequence(lifted, n_x_), batch, n_t_, cache ? &cache->seq : nullptr);
  if (cache) {
    cache->u0 = u0;
    cache->batch = batch;
  }
  out.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(n_t_ * n_x_));
  return out;
}

void LstmBaseline::backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out,
                            Vector& grad) const {
  RowMatrix d_seq = seq_.backward(params, cache.seq, as_sequence(d_out, n_x_), grad, true);
  d_seq.resize(static_cast<Eigen::Index>(cache.batch), static_cast<Eigen::Index>(n_t_ * n_x_));
  lift_.backward(params, cache.u0, d_seq, d_seq, d_seq, grad, false);
}

nn::ForwardResult LstmBaseline::forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                             const QueryGrid& grid) const {
  auto cache = std::make_shared<Cache>();
  nn::ForwardResult r;
  r.output = forward(params, u0, grid, cache.get());
  r.pullback = [this, &params, cache](const RowMatrix& d_out, Vector& grad) { backward(params, *cache, d_out, grad); };
  return r;
}

void LstmBaseline::set_trainable(nn::ParameterSet& params, TrainingStage) const { params.set_all_trainable(true); }

}  // namespace operon
