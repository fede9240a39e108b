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

#pragma once

#include <cstddef>

#include "operon/deeponet.hpp"
#include "operon/nn/dense.hpp"
#include "operon/nn/lstm.hpp"
#include "operon/surrogate.hpp"

namespace operon {

/// [batch x (n_t*n_x)] t-major rows to [batch x n_t x n_x].
Tensor reshape_to_sequence(const Tensor& flat, std::size_t n_t, std::size_t n_x);
Tensor reshape_to_sequence(const RowMatrix& flat, std::size_t n_t, std::size_t n_x);
/// Inverse of reshape_to_sequence.
RowMatrix flatten_sequence(const Tensor& seq);

/// Throws ConfigError unless the grid is a tensor grid with uniform time steps.
void require_uniform_time(const QueryGrid& grid);

/// LSTM refinement shared by the composite and the baseline: the
/// [batch*n_t x n_x] sequence runs through the LSTM and a time-distributed
/// linear head back to n_x.
struct SequenceHead {
  nn::LstmLayer lstm;
  nn::DenseLayer head;

  SequenceHead() = default;
  SequenceHead(nn::ParameterSet& params, std::size_t n_x, std::size_t hidden);
  void initialize(nn::ParameterSet& params, Rng& rng) const;

  struct Cache {
    nn::LstmCache lstm;
    RowMatrix hidden;
  };
  /// `seq` is [batch*n_t x n_x]; returns the same shape.
  RowMatrix forward(const nn::ParameterSet& params, const RowMatrix& seq, std::size_t batch, std::size_t n_t,
                    Cache* cache) const;
  RowMatrix backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out, Vector& grad,
                     bool need_input_grad) const;
};

/// DeepONet followed by reshape, LSTM and a time-distributed dense head.
///
/// DeepONet blocks are registered first under "don.", then "lstm.*" and
/// "head.*"; the embedded DeepONet shares the parameter set, so Step 1 of the
/// three-stage procedure trains deeponet() directly.
class DonLstm : public Surrogate {
 public:
  DonLstm() = default;
  DonLstm(nn::ParameterSet& params, const DeepONetConfig& don, std::size_t n_x, std::size_t hidden);

  const DeepONet& deeponet() const { return don_; }
  DeepONet& deeponet() { return don_; }
  const SequenceHead& sequence_head() const { return seq_; }
  std::size_t n_x() const { return n_x_; }
  std::size_t hidden() const { return seq_.lstm.hidden(); }

  void initialize(nn::ParameterSet& params, Rng& rng) const;

  struct Cache {
    DeepONetCache don;
    SequenceHead::Cache seq;
    std::size_t batch = 0;
    std::size_t n_t = 0;
    bool don_frozen = false;
  };
  RowMatrix forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                    Cache* cache = nullptr) const;
  /// DeepONet gradients are skipped when every DeepONet entry is frozen.
  void backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out, Vector& grad) const;

  RowMatrix predict(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid) const override {
    return forward(params, u0, grid);
  }
  nn::ForwardResult forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                 const QueryGrid& grid) const override;
  void set_trainable(nn::ParameterSet& params, TrainingStage stage) const override;

 private:
  DeepONet don_;
  SequenceHead seq_;
  std::size_t n_x_ = 0;
};

/// Plain LSTM baseline: a linear dense lift from the sensors to n_t*n_x,
/// then the same reshape, LSTM and head. Bound to one (n_t, n_x) grid.
class LstmBaseline : public Surrogate {
 public:
  LstmBaseline() = default;
  LstmBaseline(nn::ParameterSet& params, std::size_t sensors, std::size_t n_t, std::size_t n_x, std::size_t hidden);

  std::size_t n_t() const { return n_t_; }
  std::size_t n_x() const { return n_x_; }
  std::size_t sensors() const { return lift_.in(); }
  std::size_t hidden() const { return seq_.lstm.hidden(); }

  void initialize(nn::ParameterSet& params, Rng& rng) const;

  struct Cache {
    RowMatrix u0;
    SequenceHead::Cache seq;
    std::size_t batch = 0;
  };
  RowMatrix forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                    Cache* cache = nullptr) const;
  void backward(const nn::ParameterSet& params, const Cache& cache, const RowMatrix& d_out, Vector& grad) const;

  RowMatrix predict(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid) const override {
    return forward(params, u0, grid);
  }
  nn::ForwardResult forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                 const QueryGrid& grid) const override;
  /// Single-stage model: every entry trainable whatever the stage.
  void set_trainable(nn::ParameterSet& params, TrainingStage stage) const override;

 private:
  nn::DenseLayer lift_;
  SequenceHead seq_;
  std::size_t n_t_ = 0;
  std::size_t n_x_ = 0;
};

inline RowMatrix donlstm_forward(const DonLstm& model, const nn::ParameterSet& params, const RowMatrix& u0,
                                 const QueryGrid& grid) {
  return model.forward(params, u0, grid);
}

inline void set_trainable(const Surrogate& model, nn::ParameterSet& params, TrainingStage stage) {
  model.set_trainable(params, stage);
}

}  // namespace operon
