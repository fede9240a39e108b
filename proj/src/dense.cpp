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

#include "operon/nn/dense.hpp"

#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"
#include "operon/nn/linalg.hpp"

namespace operon::nn {

DenseLayer::DenseLayer(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                       Activation act)
    : in_(in), out_(out), activation_(act) {
  if (in == 0 || out == 0) throw ConfigError(fmt::format("dense layer '{}' needs positive widths", name));
  kernel_offset_ = params.allocate(name + ".kernel", in, out);
  bias_offset_ = params.allocate(name + ".bias", 1, out);
}

void DenseLayer::initialize(ParameterSet& params, Rng& rng) const {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
  auto w = kernel(params);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
  }
  bias(params).setZero();
}

RowMatrix DenseLayer::affine(const ParameterSet& params, Eigen::Ref<const RowMatrix> x) const {
  if (static_cast<std::size_t>(x.cols()) != in_) {
    throw DimensionError(fmt::format("dense layer expects {} input columns, got {}", in_, x.cols()));
  }
  RowMatrix z = matmul_rowwise(x, kernel(params));
  z.rowwise() += bias(params).row(0);
  return z;
}

RowMatrix DenseLayer::backward(const ParameterSet& params, Eigen::Ref<const RowMatrix> x, const RowMatrix& z,
                               const RowMatrix& y, RowMatrix d_out, Vector& grad, bool need_input_grad) const {
  activation_backward(activation_, activation_ == Activation::linear ? y : z, y, d_out);
  Eigen::Map<RowMatrix> dk(grad.data() + kernel_offset_, static_cast<Eigen::Index>(in_),
                           static_cast<Eigen::Index>(out_));
  dk.noalias() += x.transpose() * d_out;
  Eigen::Map<Eigen::RowVectorXd> db(grad.data() + bias_offset_, static_cast<Eigen::Index>(out_));
  db += d_out.colwise().sum();
  if (!need_input_grad) return {};
  RowMatrix dx = d_out * kernel(params).transpose();
  return dx;
}

RowMatrix dense_forward(const DenseLayer& layer, const ParameterSet& params, Eigen::Ref<const RowMatrix> x) {
  return activation_apply(layer.activation(), layer.affine(params, x));
}

DenseStack::DenseStack(ParameterSet& params, const std::string& prefix, std::size_t in,
                       const std::vector<std::size_t>& widths, const std::vector<Activation>& activations) {
  if (widths.size() != activations.size() || widths.empty()) {
    throw ConfigError(fmt::format("'{}': {} widths but {} activations", prefix, widths.size(), activations.size()));
  }
  std::size_t fan_in = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    layers_.emplace_back(params, fmt::format("{}.{}", prefix, i), fan_in, widths[i], activations[i]);
    fan_in = widths[i];
  }
}

void DenseStack::initialize(ParameterSet& params, Rng& rng) const {
  for (const auto& layer : layers_) layer.initialize(params, rng);
}

RowMatrix DenseStack::forward(const ParameterSet& params, const RowMatrix& x, DenseStackCache* cache) const {
  if (cache) {
    cache->input = x;
    cache->pre.assign(layers_.size(), RowMatrix());
    cache->post.assign(layers_.size(), RowMatrix());
  }
  RowMatrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    RowMatrix z = layers_[i].affine(params, h);
    if (layers_[i].activation() == Activation::linear) {
      h = std::move(z);
    } else {
      h = activation_apply(layers_[i].activation(), z);
      if (cache) cache->pre[i] = std::move(z);
    }
    if (cache) cache->post[i] = h;
  }
  return h;
}

RowMatrix DenseStack::backward(const ParameterSet& params, const DenseStackCache& cache, RowMatrix d_out,
                               Vector& grad, bool need_input_grad) const {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const RowMatrix& input = i == 0 ? cache.input : cache.post[i - 1];
    d_out = layers_[i].backward(params, input, cache.pre[i], cache.post[i], std::move(d_out), grad,
                                need_input_grad || i > 0);
  }
  return d_out;
}

}  // namespace operon::nn
