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

#include "operon/nn/gradcheck.hpp"
#include "operon/nn/parameters.hpp"
#include "operon/rng.hpp"
#include "operon/tensor.hpp"

namespace operon::testing {

inline RowMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                               double hi = 1.0) {
  Rng rng = Rng::stream(seed, "test-matrix");
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline void randomize(nn::ParameterSet& params, std::uint64_t seed, double scale = 0.5) {
  Rng rng = Rng::stream(seed, "test-params");
  for (Eigen::Index i = 0; i < params.values().size(); ++i) params.values()[i] = rng.uniform(-scale, scale);
}

/// Loss 0.5*|W .* out|^2 with fixed random weights W in [0.5, 1.5].
inline nn::LossFn weighted_half_squares(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  RowMatrix w = random_matrix(rows, cols, seed, 0.5, 1.5);
  return [w](const RowMatrix& out) {
    nn::LossEval l;
    l.value = 0.5 * (w.array() * out.array()).square().sum();
    l.d_output = (w.array().square() * out.array()).matrix();
    return l;
  };
}

}  // namespace operon::testing
