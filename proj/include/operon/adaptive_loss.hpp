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

#include "operon/nn/gradcheck.hpp"
#include "operon/tensor.hpp"

namespace operon {

/// One positive multiplier per evaluation point, shared across samples, with
/// mask g(lambda) = lambda^2.
class AdaptiveWeights {
 public:
  AdaptiveWeights() = default;
  /// lambda_p = 1/sqrt(points), so that sum g(lambda) = 1.
  explicit AdaptiveWeights(std::size_t points, double eta = 1e-3);
  AdaptiveWeights(Vector lambdas, double eta);

  std::size_t size() const { return static_cast<std::size_t>(lambdas_.size()); }
  double eta() const { return eta_; }
  void set_eta(double eta) { eta_ = eta; }
  const Vector& lambdas() const { return lambdas_; }
  Vector& lambdas() { return lambdas_; }
  /// g(lambda_p) for every point.
  Vector mask() const { return lambdas_.array().square(); }
  double mask_sum() const { return lambdas_.squaredNorm(); }

 private:
  Vector lambdas_;
  double eta_ = 1e-3;
};

/// (1/N) sum_s sum_p g(lambda_p) (pred - target)^2 over a [N x points] batch.
double adaptive_loss(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights);
/// Loss value plus its gradient w.r.t. pred.
nn::LossEval adaptive_loss_eval(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights);
/// dL/dlambda_p = (1/N) sum_s g'(lambda_p) r_sp^2.
Vector lambda_gradient(const RowMatrix& pred, const RowMatrix& target, const AdaptiveWeights& weights);
/// Gradient ascent on lambda: lambda += eta * dL/dlambda.
void update_lambdas(AdaptiveWeights& weights, const RowMatrix& pred, const RowMatrix& target);
/// Rescales lambda so that sum g(lambda) = 1.
void normalize_lambdas(AdaptiveWeights& weights);

/// Mean of squared errors over every entry.
double mse(const RowMatrix& pred, const RowMatrix& target);
nn::LossEval mse_eval(const RowMatrix& pred, const RowMatrix& target);

}  // namespace operon
