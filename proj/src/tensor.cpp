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

#include "operon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError(fmt::format("tensor shape holds {} elements but buffer has {}",
                                     shape_product(shape_), data_.size()));
  }
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != data_.size()) {
    throw DimensionError(
        fmt::format("cannot reshape {} elements into {}", data_.size(), shape_product(shape)));
  }
  return Tensor(std::move(shape), data_);
}

Eigen::Map<const RowMatrix> Tensor::matrix() const {
  const auto rows = shape_.empty() ? 1 : static_cast<Eigen::Index>(shape_[0]);
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(data_.size()) / rows;
  return {data_.data(), rows, cols};
}

Eigen::Map<RowMatrix> Tensor::matrix() {
  const auto rows = shape_.empty() ? 1 : static_cast<Eigen::Index>(shape_[0]);
  const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(data_.size()) / rows;
  return {data_.data(), rows, cols};
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::move(data));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace operon
