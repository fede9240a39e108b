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

#include "operon/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"
#include "operon/rng.hpp"

namespace operon::nn {

GradientResult compute_gradients(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                 std::size_t batch_id) {
  ForwardResult fwd = forward(params);
  LossEval l = loss(fwd.output);
  if (!std::isfinite(l.value)) {
    throw NumericError(fmt::format("non-finite loss {} in batch {}", l.value, batch_id));
  }
  GradientResult result;
  result.loss = l.value;
  result.gradient = Vector::Zero(static_cast<Eigen::Index>(params.size()));
  fwd.pullback(l.d_output, result.gradient);
  result.output = std::move(fwd.output);
  const auto& mask = params.trainable_mask();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) result.gradient[static_cast<Eigen::Index>(i)] = 0.0;
  }
  return result;
}

double evaluate_loss(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss) {
  return loss(forward(params).output).value;
}

LossEval half_sum_squares(const RowMatrix& output) {
  return {0.5 * output.squaredNorm(), output};
}

std::string FdReport::summary() const {
  std::string s = fmt::format("{} probes, worst relative error {:.3e} at {} (analytic {:.12e}, numeric {:.12e})",
                              probes.size(), worst_rel_error, worst.name, worst.analytic, worst.numeric);
  for (const auto& f : failures) {
    s += fmt::format("\n  FAIL {}: analytic {:.12e} numeric {:.12e} rel {:.3e}", f.name, f.analytic, f.numeric,
                     f.rel_error);
  }
  return s;
}

FdReport finite_difference_check_at(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                    const std::vector<std::size_t>& indices, const FdCheckOptions& options,
                                    const Vector* analytic) {
  if (indices.empty()) throw ConfigError("finite-difference check needs at least one probe");
  GradientResult base = compute_gradients(forward, params, loss);
  const Vector& grad = analytic ? *analytic : base.gradient;
  const double floor = options.floor_fraction * std::max(std::abs(base.loss), 1e-300);

  ParameterSet probe = params;
  FdReport report;
  for (std::size_t idx : indices) {
    const auto i = static_cast<Eigen::Index>(idx);
    const double theta = params.values()[i];
    const double h = 1e-6 * std::max(1.0, std::abs(theta));
    probe.values()[i] = theta + h;
    const double plus = evaluate_loss(forward, probe, loss);
    probe.values()[i] = theta - h;
    const double minus = evaluate_loss(forward, probe, loss);
    probe.values()[i] = theta;
    FdProbe p;
    p.index = idx;
    p.name = params.entry_name(idx);
    p.analytic = grad[i];
    p.numeric = (plus - minus) / (2.0 * h);
    p.rel_error = std::abs(p.analytic - p.numeric) / std::max({std::abs(p.analytic), std::abs(p.numeric), floor});
    if (!(p.rel_error <= options.tolerance)) {
      report.passed = false;
      report.failures.push_back(p);
    }
    if (report.probes.empty() || !(p.rel_error <= report.worst_rel_error)) {
      report.worst_rel_error = p.rel_error;
      report.worst = p;
    }
    report.probes.push_back(std::move(p));
  }
  return report;
}

FdReport finite_difference_check(const ForwardFn& forward, const ParameterSet& params, const LossFn& loss,
                                 const FdCheckOptions& options, const Vector* analytic) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.trainable(i)) candidates.push_back(i);
  }
  if (candidates.empty()) throw ConfigError("finite-difference check: no trainable entries");
  Rng rng = Rng::stream(options.seed, "fdcheck");
  rng.shuffle(std::span<std::size_t>(candidates));
  candidates.resize(std::min(candidates.size(), std::max<std::size_t>(options.probes, 1)));
  std::sort(candidates.begin(), candidates.end());
  return finite_difference_check_at(forward, params, loss, candidates, options, analytic);
}

}  // namespace operon::nn
