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

#include <string>

#include "operon/nn/gradcheck.hpp"
#include "operon/nn/parameters.hpp"
#include "operon/tensor.hpp"

namespace operon {

class QueryGrid;

enum class TrainingStage { don_pretrain, lstm_only, joint_finetune };

std::string to_string(TrainingStage stage);

/// Common face of the trainable models: maps a batch of scaled initial
/// conditions [batch x sensors] and a query grid to [batch x queries].
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual RowMatrix predict(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid& grid) const = 0;
  /// Forward pass that keeps what the pullback needs.
  virtual nn::ForwardResult forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                         const QueryGrid& grid) const = 0;
  /// Sets the trainable mask for a training stage.
  virtual void set_trainable(nn::ParameterSet& params, TrainingStage stage) const = 0;
};

}  // namespace operon
