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

#include <cstdint>

#include "operon/nn/parameters.hpp"

namespace operon::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one ParameterSet. Frozen entries are skipped entirely:
/// neither their values nor their moments change.
class AdamState {
 public:
  AdamState(std::size_t size, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t step_count() const { return step_count_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

  /// One bias-corrected update of `params` with gradient `grads`.
  void step(ParameterSet& params, const Vector& grads);

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  std::int64_t step_count_ = 0;
};

inline void adam_step(AdamState& state, ParameterSet& params, const Vector& grads) { state.step(params, grads); }

}  // namespace operon::nn
