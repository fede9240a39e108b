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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "operon/nn/parameters.hpp"
#include "operon/tensor.hpp"

namespace operon::nn {

/// Output of a forward pass plus the pullback that maps d(loss)/d(output)
/// onto parameter gradients (accumulated into the vector argument).
struct ForwardResult {
  RowMatrix output;
  std::function<void(const RowMatrix& d_output, Vector& grad)> pullback;
};

using ForwardFn = std::function<ForwardResult(const ParameterSet&)>;

struct LossEval {
  double value = 0.0;
  RowMatrix d_output;
};

using LossFn = std::function<LossEval(const RowMatrix& output)>;

struct GradientResult {
  double loss = 0.0;
  Vector gradient;
  RowMatrix output;
};

/// Reverse-mode gradient of loss(forward(params)). Frozen entries come back
/// as exact zeros. A non-finite loss raises NumericError naming `batch_id`.
GradientResult compute_gradients(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                 std::size_t batch_id = 0);

/// Loss only, no backward pass.
double evaluate_loss(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss);

struct FdCheckOptions {
  double tolerance = 1e-5;
  std::size_t probes = 32;
  std::uint64_t seed = 0;
  /// Denominator floor, as a fraction of |loss|. Entries whose gradient is
  /// below floor_fraction*|loss| are judged on absolute error instead.
  double floor_fraction = 1e-3;
};

struct FdProbe {
  std::size_t index = 0;
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FdReport {
  bool passed = true;
  double worst_rel_error = 0.0;
  FdProbe worst;
  std::vector<FdProbe> failures;
  std::vector<FdProbe> probes;

  std::string summary() const;
};

/// Compares analytic gradients with central differences, step
/// h = 1e-6 * max(1, |theta_i|), on a random subset of trainable entries.
/// `analytic` overrides the gradient under test (used for negative controls).
FdReport finite_difference_check(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                 const FdCheckOptions& options = {}, const Vector* analytic = nullptr);

/// Probes exactly the given flat indices.
FdReport finite_difference_check_at(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                    const std::vector<std::size_t>& indices, const FdCheckOptions& options = {},
                                    const Vector* analytic = nullptr);

/// 0.5 * sum of squares; the usual test loss.
LossEval half_sum_squares(const RowMatrix& output);

}  // namespace operon::nn
