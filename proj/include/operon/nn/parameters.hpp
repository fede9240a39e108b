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
#include <string>
#include <string_view>
#include <vector>

#include "operon/tensor.hpp"

namespace operon::nn {

/// A named, contiguous slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
};

/// Flat vector of every trainable weight of a model plus its layout.
///
/// Layers register blocks in construction order, so the layout is a pure
/// function of the model configuration. Forward passes, gradients and the
/// optimizer all index the same flat buffer.
class ParameterSet {
 public:
  /// Appends a zero-filled [rows x cols] block and returns its offset.
  std::size_t allocate(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const std::vector<ParameterBlock>& layout() const { return layout_; }
  const ParameterBlock& block(std::string_view name) const;

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  Eigen::Map<const RowMatrix> matrix(std::size_t offset, std::size_t rows, std::size_t cols) const {
    return {values_.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
  }
  Eigen::Map<RowMatrix> matrix(std::size_t offset, std::size_t rows, std::size_t cols) {
    return {values_.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
  }

  bool trainable(std::size_t index) const { return trainable_[index] != 0; }
  const std::vector<char>& trainable_mask() const { return trainable_; }
  /// Sets the flag on every block whose name starts with `prefix`.
  void set_trainable(std::string_view prefix, bool flag);
  void set_all_trainable(bool flag);
  std::size_t trainable_count() const;

  /// "block[i]" label for a flat index; used in diagnostics.
  std::string entry_name(std::size_t index) const;

  /// Half-open [begin, end) flat range covered by blocks with this prefix.
  std::pair<std::size_t, std::size_t> range(std::string_view prefix) const;

 private:
  std::vector<ParameterBlock> layout_;
  Vector values_;
  std::vector<char> trainable_;
};

}  // namespace operon::nn
