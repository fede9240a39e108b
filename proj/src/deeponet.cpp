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

#include "operon/deeponet.hpp"

#include <cstring>

#include <cmath>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "operon/errors.hpp"
#include "operon/nn/linalg.hpp"

namespace operon {

std::pair<double, double> periodic_feature_expand(double x, double period) {
  if (!(period > 0.0)) throw ConfigError(fmt::format("period must be positive, got {}", period));
  const double phase = 2.0 * std::numbers::pi * x / period;
  return {std::cos(phase), std::sin(phase)};
}

QueryGrid::QueryGrid(std::vector<std::pair<double, double>> points) {
  x_.reserve(points.size());
  t_.reserve(points.size());
  for (const auto& [x, t] : points) {
    x_.push_back(x);
    t_.push_back(t);
  }
}

QueryGrid QueryGrid::tensor(const std::vector<double>& x, const std::vector<double>& t) {
  if (x.empty() || t.empty()) throw DimensionError("query grid needs at least one x and one t");
  QueryGrid g;
  g.x_.reserve(x.size() * t.size());
  g.t_.reserve(x.size() * t.size());
  for (double tv : t) {
    for (double xv : x) {
      g.x_.push_back(xv);
      g.t_.push_back(tv);
    }
  }
  g.n_t_ = t.size();
  g.n_x_ = x.size();
  return g;
}

std::vector<double> QueryGrid::times() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < n_t_; ++i) out.push_back(t_[i * n_x_]);
  return out;
}

QueryGrid QueryGrid::subset(const std::vector<std::size_t>& rows) const {
  QueryGrid g;
  for (std::size_t r : rows) {
    if (r >= size()) throw DimensionError(fmt::format("query row {} out of range {}", r, size()));
    g.x_.push_back(x_[r]);
    g.t_.push_back(t_[r]);
  }
  return g;
}

namespace {

std::vector<nn::Activation> swish_then_linear(std::size_t n, std::size_t linear_tail) {
  std::vector<nn::Activation> acts(n, nn::Activation::swish);
  for (std::size_t i = 0; i < std::min(n, linear_tail); ++i) acts[n - 1 - i] = nn::Activation::linear;
  return acts;
}

}  // namespace

std::vector<nn::Activation> DeepONetConfig::resolved_branch_activations() const {
  return branch_activations.empty() ? swish_then_linear(branch_widths.size(), 1) : branch_activations;
}

std::vector<nn::Activation> DeepONetConfig::resolved_trunk_activations() const {
  return trunk_activations.empty() ? swish_then_linear(trunk_widths.size(), 2) : trunk_activations;
}

std::size_t DeepONetConfig::p() const { return branch_widths.empty() ? 0 : branch_widths.back(); }

void DeepONetConfig::validate() const {
  if (sensors == 0) throw ConfigError("deeponet.sensors must be positive");
  if (branch_widths.empty() || trunk_widths.empty()) throw ConfigError("deeponet: branch and trunk need layers");
  for (auto w : branch_widths) {
    if (w == 0) throw ConfigError("deeponet.branch_widths: zero width");
  }
  for (auto w : trunk_widths) {
    if (w == 0) throw ConfigError("deeponet.trunk_widths: zero width");
  }
  if (branch_widths.back() != trunk_widths.back()) {
    throw ConfigError(fmt::format("deeponet: branch output width {} differs from trunk output width {}",
                                  branch_widths.back(), trunk_widths.back()));
  }
  if (!branch_activations.empty() && branch_activations.size() != branch_widths.size()) {
    throw ConfigError("deeponet.branch_activations: length differs from branch_widths");
  }
  if (!trunk_activations.empty() && trunk_activations.size() != trunk_widths.size()) {
    throw ConfigError("deeponet.trunk_activations: length differs from trunk_widths");
  }
  if (periodic && !(period > 0.0)) throw ConfigError("deeponet.period must be positive when periodic");
}

DeepONetConfig DeepONetConfig::scaled_down(std::size_t divisor) const {
  DeepONetConfig c = *this;
  for (auto& w : c.branch_widths) w = std::max<std::size_t>(1, w / divisor);
  for (auto& w : c.trunk_widths) w = std::max<std::size_t>(1, w / divisor);
  return c;
}

DeepONet::DeepONet(nn::ParameterSet& params, const DeepONetConfig& config, const std::string& prefix)
    : config_(config), prefix_(prefix) {
  config_.validate();
  branch_ = nn::DenseStack(params, prefix + "branch", config_.sensors, config_.branch_widths,
                           config_.resolved_branch_activations());
  trunk_ = nn::DenseStack(params, prefix + "trunk", config_.trunk_input_width(), config_.trunk_widths,
                          config_.resolved_trunk_activations());
}

void DeepONet::initialize(nn::ParameterSet& params, Rng& rng) const {
  branch_.initialize(params, rng);
  trunk_.initialize(params, rng);
}

void DeepONet::set_coordinate_scalers(const Scaler& x, const Scaler& t) {
  x_scaler_ = x;
  t_scaler_ = t;
}

RowMatrix DeepONet::trunk_features(const QueryGrid& grid) const {
  RowMatrix f(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(config_.trunk_input_width()));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const auto r = static_cast<Eigen::Index>(q);
    if (config_.periodic) {
      auto [c, s] = periodic_feature_expand(grid.x(q), config_.period);
      f(r, 0) = c;
      f(r, 1) = s;
      f(r, 2) = t_scaler_.apply(grid.t(q));
    } else {
      f(r, 0) = x_scaler_.apply(grid.x(q));
      f(r, 1) = t_scaler_.apply(grid.t(q));
    }
  }
  return f;
}

TrunkMemo& TrunkMemo::operator=(const TrunkMemo&) {
  clear();
  return *this;
}

bool TrunkMemo::lookup(const Vector& params, const RowMatrix& features, RowMatrix& out) const {
  std::lock_guard lock(mutex_);
  if (!valid_ || params_.size() != params.size() || features_.rows() != features.rows() ||
      features_.cols() != features.cols()) {
    return false;
  }
  if (std::memcmp(params_.data(), params.data(), sizeof(double) * params.size()) != 0) return false;
  if (std::memcmp(features_.data(), features.data(), sizeof(double) * features.size()) != 0) return false;
  out = out_;
  return true;
}

void TrunkMemo::store(Vector params, RowMatrix features, RowMatrix out) {
  std::lock_guard lock(mutex_);
  params_ = std::move(params);
  features_ = std::move(features);
  out_ = std::move(out);
  valid_ = true;
}

void TrunkMemo::clear() {
  std::lock_guard lock(mutex_);
  valid_ = false;
  params_.resize(0);
  features_.resize(0, 0);
  out_.resize(0, 0);
}

RowMatrix DeepONet::trunk_forward(const nn::ParameterSet& params, const QueryGrid& grid,
                                  nn::DenseStackCache* cache) const {
  if (grid.empty()) throw DimensionError("empty query grid");
  RowMatrix features = trunk_features(grid);
  if (cache) return trunk_.forward(params, features, cache);
  const auto [first, last] = params.range(prefix_ + "trunk.");
  Vector key = params.values().segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(last - first));
  RowMatrix out;
  if (memo_.lookup(key, features, out)) return out;
  out = trunk_.forward(params, features);
  memo_.store(std::move(key), std::move(features), out);
  return out;
}

RowMatrix DeepONet::merge(const RowMatrix& b, const RowMatrix& t) {
  if (b.cols() != t.cols()) {
    throw DimensionError(fmt::format("merge: branch width {} vs trunk width {}", b.cols(), t.cols()));
  }
  const RowMatrix tt = t.transpose();
  return nn::matmul_rowwise(b, tt);
}

RowMatrix DeepONet::forward(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid,
                            DeepONetCache* cache) const {
  if (static_cast<std::size_t>(u0.cols()) != config_.sensors) {
    throw DimensionError(fmt::format("deeponet: expected {} sensors, got {}", config_.sensors, u0.cols()));
  }
  if (cache) {
    cache->b = branch_.forward(params, u0, &cache->branch);
    cache->t = trunk_forward(params, grid, &cache->trunk);
    return merge(cache->b, cache->t);
  }
  return merge(branch_.forward(params, u0), trunk_forward(params, grid));
}

void DeepONet::backward(const nn::ParameterSet& params, const DeepONetCache& cache, const RowMatrix& d_out,
                        Vector& grad) const {
  RowMatrix d_b = d_out * cache.t;
  RowMatrix d_t = d_out.transpose() * cache.b;
  branch_.backward(params, cache.branch, std::move(d_b), grad, false);
  trunk_.backward(params, cache.trunk, std::move(d_t), grad, false);
}

nn::ForwardResult DeepONet::forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                         const QueryGrid& grid) const {
  auto cache = std::make_shared<DeepONetCache>();
  nn::ForwardResult r;
  r.output = forward(params, u0, grid, cache.get());
  r.pullback = [this, &params, cache](const RowMatrix& d_out, Vector& grad) { backward(params, *cache, d_out, grad); };
  return r;
}

void DeepONet::set_trainable(nn::ParameterSet& params, TrainingStage stage) const {
  if (stage != TrainingStage::don_pretrain) {
    throw ConfigError(fmt::format("stage {} needs an LSTM extension", to_string(stage)));
  }
  params.set_trainable(prefix_, true);
}

RowMatrix deeponet_forward(const DeepONet& model, const nn::ParameterSet& params, const RowMatrix& u0,
                           const QueryGrid& grid) {
  return model.forward(params, u0, grid);
}

}  // namespace operon
