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

#include "operon/nn/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon::nn {

AdamState::AdamState(std::size_t size, AdamConfig config)
    : config_(config), m_(Vector::Zero(static_cast<Eigen::Index>(size))),
      v_(Vector::Zero(static_cast<Eigen::Index>(size))) {}

void AdamState::step(ParameterSet& params, const Vector& grads) {
  if (grads.size() != m_.size() || params.values().size() != m_.size()) {
    throw DimensionError(fmt::format("adam state has {} entries, params {}, grads {}", m_.size(),
                                     params.values().size(), grads.size()));
  }
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  auto& theta = params.values();
  const auto& mask = params.trainable_mask();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace operon::nn
