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

#include "operon/adaptive_loss.hpp"

#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

namespace {

void check_shapes(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights* weights) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError(fmt::format("prediction {}x{} vs target {}x{}", pred.rows(), pred.cols(), target.rows(),
                                     target.cols()));
  }
  if (pred.rows() == 0) throw DimensionError("empty batch");
  if (weights && static_cast<std::size_t>(pred.cols()) != weights->size()) {
    throw DimensionError(fmt::format("{} points but {} adaptive weights", pred.cols(), weights->size()));
  }
}

}  // namespace

AdaptiveWeights::AdaptiveWeights(std::size_t points, double eta)
    : lambdas_(Vector::Constant(static_cast<Eigen::Index>(points), 1.0 / std::sqrt(static_cast<double>(points)))),
      eta_(eta) {
  if (points == 0) throw ConfigError("adaptive weights need at least one point");
}

AdaptiveWeights::AdaptiveWeights(Vector lambdas, double eta) : lambdas_(std::move(lambdas)), eta_(eta) {
  for (Eigen::Index i = 0; i < lambdas_.size(); ++i) {
    if (!(lambdas_[i] > 0.0)) throw ConfigError(fmt::format("lambda[{}] = {} is not positive", i, lambdas_[i]));
  }
}

double adaptive_loss(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights) {
  check_shapes(pred, target, &weights);
  const Eigen::RowVectorXd g = weights.mask().transpose();
  const double total = ((pred - target).array().square().rowwise() * g.array()).sum();
  return total / static_cast<double>(pred.rows());
}

nn::LossEval adaptive_loss_eval(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights) {
  check_shapes(pred, target, &weights);
  const Eigen::RowVectorXd g = weights.mask().transpose();
  const double n = static_cast<double>(pred.rows());
  RowMatrix r = pred - target;
  nn::LossEval out;
  out.value = (r.array().square().rowwise() * g.array()).sum() / n;
  out.d_output = (r.array().rowwise() * (2.0 / n * g).array()).matrix();
  return out;
}

Vector lambda_gradient(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights) {
  check_shapes(pred, target, &weights);
  const Vector mean_sq = (pred - target).array().square().colwise().mean().transpose();
  return (2.0 * weights.lambdas().array() * mean_sq.array()).matrix();
}

void update_lambdas(AdaptiveWeights& weights, const RowMatrix& pred, const RowMatrix& target) {
  weights.lambdas() += weights.eta() * lambda_gradient(pred, target, weights);
}

void normalize_lambdas(AdaptiveWeights& weights) {
  const double norm = std::sqrt(weights.mask_sum());
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericError(fmt::format("cannot normalize adaptive weights with norm {}", norm));
  }
  weights.lambdas() /= norm;
}

double mse(const RowMatrix& pred, const RowMatrix& target) {
  check_shapes(pred, target, nullptr);
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

nn::LossEval mse_eval(const RowMatrix& pred, const RowMatrix& target) {
  check_shapes(pred, target, nullptr);
  const double n = static_cast<double>(pred.size());
  RowMatrix r = pred - target;
  return {r.squaredNorm() / n, (2.0 / n) * r};
}

}  // namespace operon
