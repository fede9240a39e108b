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
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "operon/nn/dense.hpp"
#include "operon/nn/parameters.hpp"
#include "operon/rng.hpp"
#include "operon/scaler.hpp"
#include "operon/surrogate.hpp"
#include "operon/tensor.hpp"

namespace operon {

/// (cos(2 pi x / P), sin(2 pi x / P)).
std::pair<double, double> periodic_feature_expand(double x, double period);

/// Query coordinates y = (x, t), one row per query.
///
/// Grids built with QueryGrid::tensor are t-major (all x for t_0, then all x
/// for t_1, ...) and remember n_t and n_x so the output can be reshaped into a
/// sequence. Arbitrary point lists are allowed for plain DeepONet evaluation.
class QueryGrid {
 public:
  QueryGrid() = default;
  explicit QueryGrid(std::vector<std::pair<double, double>> points);
  static QueryGrid tensor(const std::vector<double>& x, const std::vector<double>& t);

  std::size_t size() const { return x_.size(); }
  bool empty() const { return x_.empty(); }
  double x(std::size_t q) const { return x_[q]; }
  double t(std::size_t q) const { return t_[q]; }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ts() const { return t_; }
  /// Zero unless built as a tensor grid.
  std::size_t n_t() const { return n_t_; }
  std::size_t n_x() const { return n_x_; }
  bool is_tensor() const { return n_t_ > 0; }
  /// Distinct time levels of a tensor grid.
  std::vector<double> times() const;

  QueryGrid subset(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<double> x_;
  std::vector<double> t_;
  std::size_t n_t_ = 0;
  std::size_t n_x_ = 0;
};

struct DeepONetConfig {
  std::size_t sensors = 100;
  std::vector<std::size_t> branch_widths{150, 250, 450, 380, 320, 300};
  std::vector<nn::Activation> branch_activations;
  std::vector<std::size_t> trunk_widths{200, 220, 240, 250, 260, 280, 300};
  std::vector<nn::Activation> trunk_activations;
  bool periodic = false;
  double period = 0.0;

  /// Swish on every layer but the last (branch) or last two (trunk), unless
  /// the activation lists are given explicitly.
  std::vector<nn::Activation> resolved_branch_activations() const;
  std::vector<nn::Activation> resolved_trunk_activations() const;
  std::size_t p() const;
  std::size_t trunk_input_width() const { return periodic ? 3 : 2; }
  void validate() const;

  /// Every width divided by 10.
  DeepONetConfig scaled_down(std::size_t divisor = 10) const;
};

struct DeepONetCache {
  nn::DenseStackCache branch;
  nn::DenseStackCache trunk;
  RowMatrix b;  // [batch x p]
  RowMatrix t;  // [queries x p]
};

/// Last uncached trunk evaluation, reused while the trunk parameters and the
/// scaled trunk features are bitwise unchanged. Copies start empty.
class TrunkMemo {
 public:
  TrunkMemo() = default;
  TrunkMemo(const TrunkMemo&) {}
  TrunkMemo& operator=(const TrunkMemo&);

  bool lookup(const Vector& params, const RowMatrix& features, RowMatrix& out) const;
  void store(Vector params, RowMatrix features, RowMatrix out);
  void clear();

 private:
  mutable std::mutex mutex_;
  bool valid_ = false;
  Vector params_;
  RowMatrix features_;
  RowMatrix out_;
};

/// Branch/trunk operator network: out[s, q] = sum_k branch(u0_s)_k * trunk(y_q)_k.
///
/// Trunk inputs pass through the stored min-max coordinate scalers (after the
/// optional periodic expansion of x) before entering the trunk stack.
class DeepONet : public Surrogate {
 public:
  DeepONet() = default;
  DeepONet(nn::ParameterSet& params, const DeepONetConfig& config, const std::string& prefix = "");

  const DeepONetConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }
  const nn::DenseStack& branch() const { return branch_; }
  const nn::DenseStack& trunk() const { return trunk_; }
  std::size_t p() const { return branch_.out(); }

  void initialize(nn::ParameterSet& params, Rng& rng) const;

  void set_coordinate_scalers(const Scaler& x, const Scaler& t);
  const Scaler& x_scaler() const { return x_scaler_; }
  const Scaler& t_scaler() const { return t_scaler_; }

  /// Scaled trunk input features, one row per query.
  RowMatrix trunk_features(const QueryGrid& grid) const;
  RowMatrix trunk_forward(const nn::ParameterSet& params, const QueryGrid& grid,
                          nn::DenseStackCache* cache = nullptr) const;

  /// [batch x queries], queries in grid order.
  RowMatrix forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                    DeepONetCache* cache = nullptr) const;
  /// Accumulates parameter gradients for d_out = dL/d(output).
  void backward(const nn::ParameterSet& params, const DeepONetCache& cache, const RowMatrix& d_out,
                Vector& grad) const;

  /// out = b * t^T with row-stable summation.
  static RowMatrix merge(const RowMatrix& b, const RowMatrix& t);

  RowMatrix predict(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid) const override {
    return forward(params, u0, grid);
  }
  nn::ForwardResult forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                 const QueryGrid& grid) const override;
  /// A bare DeepONet only has the pretraining stage; every entry is trainable.
  void set_trainable(nn::ParameterSet& params, TrainingStage stage) const override;

 private:
  DeepONetConfig config_;
  std::string prefix_;
  nn::DenseStack branch_;
  nn::DenseStack trunk_;
  Scaler x_scaler_ = Scaler::identity(FitDomain::trunk_input);
  Scaler t_scaler_ = Scaler::identity(FitDomain::trunk_input);
  mutable TrunkMemo memo_;
};

RowMatrix deeponet_forward(const DeepONet& model, const nn::ParameterSet& params, const RowMatrix& u0,
                           const QueryGrid& grid);

}  // namespace operon
