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
#include <string>

#include "operon/nn/parameters.hpp"
#include "operon/rng.hpp"
#include "operon/tensor.hpp"

namespace operon::nn {

struct LstmState {
  RowMatrix h;
  RowMatrix c;
};

/// Saved intermediates of a sequence pass, rows laid out as s * steps + t.
struct LstmCache {
  std::size_t batch = 0;
  std::size_t steps = 0;
  RowMatrix input;   // [batch*steps x in]
  RowMatrix gates;   // activated i, f, g, o  [batch*steps x 4h]
  RowMatrix cell;    // c_t                   [batch*steps x h]
  RowMatrix hidden;  // h_t                   [batch*steps x h]
};

/// Single-layer LSTM returning every hidden state.
///
/// Blocks: "<name>.input_kernel" [in x 4h], "<name>.recurrent_kernel" [h x 4h]
/// and "<name>.bias" [1 x 4h], gate column order input, forget, cell, output.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden);

  std::size_t in() const { return in_; }
  std::size_t hidden() const { return hidden_; }

  static std::size_t parameter_count(std::size_t in, std::size_t hidden) {
    return 4 * ((in + 1) * hidden + hidden * hidden);
  }

  Eigen::Map<const RowMatrix> input_kernel(const ParameterSet& p) const { return p.matrix(wx_, in_, 4 * hidden_); }
  Eigen::Map<RowMatrix> input_kernel(ParameterSet& p) const { return p.matrix(wx_, in_, 4 * hidden_); }
  Eigen::Map<const RowMatrix> recurrent_kernel(const ParameterSet& p) const {
    return p.matrix(wh_, hidden_, 4 * hidden_);
  }
  Eigen::Map<RowMatrix> recurrent_kernel(ParameterSet& p) const { return p.matrix(wh_, hidden_, 4 * hidden_); }
  Eigen::Map<const RowMatrix> bias(const ParameterSet& p) const { return p.matrix(b_, 1, 4 * hidden_); }
  Eigen::Map<RowMatrix> bias(ParameterSet& p) const { return p.matrix(b_, 1, 4 * hidden_); }

  /// Glorot-uniform input kernel, U(-1/sqrt(h), 1/sqrt(h)) recurrent kernel,
  /// zero bias except +1 on the forget gate.
  void initialize(ParameterSet& params, Rng& rng) const;

  /// One recurrence step for a batch.
  LstmState step(const ParameterSet& params, const RowMatrix& x, const LstmState& prev) const;

  /// Runs `steps` timesteps from zero state. `x` is [batch*steps x in] with
  /// row s*steps + t; the result has the same row layout with h columns.
  RowMatrix forward(const ParameterSet& params, const RowMatrix& x, std::size_t batch, std::size_t steps,
                    LstmCache* cache = nullptr) const;

  /// Backpropagation through time. `d_hidden` matches the forward output.
  RowMatrix backward(const ParameterSet& params, const LstmCache& cache, const RowMatrix& d_hidden, Vector& grad,
                     bool need_input_grad) const;

 private:
  void activate(Eigen::Ref<RowMatrix> z) const;

  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  std::size_t wx_ = 0;
  std::size_t wh_ = 0;
  std::size_t b_ = 0;
};

/// Free-function form of LstmLayer::step.
LstmState lstm_step(const LstmLayer& layer, const ParameterSet& params, const RowMatrix& x, const RowMatrix& h_prev,
                    const RowMatrix& c_prev);

}  // namespace operon::nn
