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
#include <vector>

#include "operon/nn/activation.hpp"
#include "operon/nn/parameters.hpp"
#include "operon/rng.hpp"
#include "operon/tensor.hpp"

namespace operon::nn {

/// Fully connected layer y = act(x W + b).
///
/// The kernel W is stored as an [in x out] row-major block named
/// "<name>.kernel", the bias as a [1 x out] block "<name>.bias".
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Activation act);

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  Activation activation() const { return activation_; }
  std::size_t kernel_offset() const { return kernel_offset_; }
  std::size_t bias_offset() const { return bias_offset_; }

  Eigen::Map<const RowMatrix> kernel(const ParameterSet& p) const { return p.matrix(kernel_offset_, in_, out_); }
  Eigen::Map<RowMatrix> kernel(ParameterSet& p) const { return p.matrix(kernel_offset_, in_, out_); }
  Eigen::Map<const RowMatrix> bias(const ParameterSet& p) const { return p.matrix(bias_offset_, 1, out_); }
  Eigen::Map<RowMatrix> bias(ParameterSet& p) const { return p.matrix(bias_offset_, 1, out_); }

  /// Glorot-uniform kernel, zero bias.
  void initialize(ParameterSet& params, Rng& rng) const;

  /// Pre-activation x W + b.
  RowMatrix affine(const ParameterSet& params, Eigen::Ref<const RowMatrix> x) const;

  /// Backpropagates `d_out` (gradient w.r.t. the layer output) through the
  /// layer. Parameter gradients are accumulated into `grad`; the returned
  /// matrix is the gradient w.r.t. `x` (empty when `need_input_grad` is false).
  RowMatrix backward(const ParameterSet& params, Eigen::Ref<const RowMatrix> x, const RowMatrix& z,
                     const RowMatrix& y, RowMatrix d_out, Vector& grad, bool need_input_grad) const;

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Activation activation_ = Activation::linear;
  std::size_t kernel_offset_ = 0;
  std::size_t bias_offset_ = 0;
};

RowMatrix dense_forward(const DenseLayer& layer, const ParameterSet& params, Eigen::Ref<const RowMatrix> x);

/// Saved intermediates of a DenseStack forward pass.
struct DenseStackCache {
  RowMatrix input;
  std::vector<RowMatrix> pre;   // z per layer (empty for linear layers, where z == y)
  std::vector<RowMatrix> post;  // y per layer
};

/// Feed-forward chain of dense layers.
class DenseStack {
 public:
  DenseStack() = default;
  DenseStack(ParameterSet& params, const std::string& prefix, std::size_t in, const std::vector<std::size_t>& widths,
             const std::vector<Activation>& activations);

  std::size_t in() const { return layers_.empty() ? 0 : layers_.front().in(); }
  std::size_t out() const { return layers_.empty() ? 0 : layers_.back().out(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void initialize(ParameterSet& params, Rng& rng) const;

  RowMatrix forward(const ParameterSet& params, const RowMatrix& x, DenseStackCache* cache = nullptr) const;
  RowMatrix backward(const ParameterSet& params, const DenseStackCache& cache, RowMatrix d_out, Vector& grad,
                     bool need_input_grad) const;

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace operon::nn
