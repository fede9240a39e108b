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

#include "operon/nn/parameters.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon::nn {

std::size_t ParameterSet::allocate(std::string name, std::size_t rows, std::size_t cols) {
  for (const auto& b : layout_) {
    if (b.name == name) throw ConfigError(fmt::format("duplicate parameter block '{}'", name));
  }
  const std::size_t offset = size();
  layout_.push_back({std::move(name), offset, rows, cols});
  values_.conservativeResize(static_cast<Eigen::Index>(offset + rows * cols));
  values_.tail(static_cast<Eigen::Index>(rows * cols)).setZero();
  trainable_.resize(offset + rows * cols, 1);
  return offset;
}

const ParameterBlock& ParameterSet::block(std::string_view name) const {
  auto it = std::find_if(layout_.begin(), layout_.end(), [&](const auto& b) { return b.name == name; });
  if (it == layout_.end()) throw ConfigError(fmt::format("no parameter block '{}'", name));
  return *it;
}

void ParameterSet::set_trainable(std::string_view prefix, bool flag) {
  for (const auto& b : layout_) {
    if (std::string_view(b.name).starts_with(prefix)) {
      std::fill_n(trainable_.begin() + static_cast<std::ptrdiff_t>(b.offset), b.size(), flag ? 1 : 0);
    }
  }
}

void ParameterSet::set_all_trainable(bool flag) { std::fill(trainable_.begin(), trainable_.end(), flag ? 1 : 0); }

std::size_t ParameterSet::trainable_count() const {
  return static_cast<std::size_t>(std::count(trainable_.begin(), trainable_.end(), 1));
}

std::string ParameterSet::entry_name(std::size_t index) const {
  for (const auto& b : layout_) {
    if (index >= b.offset && index < b.offset + b.size()) {
      return fmt::format("{}[{}]", b.name, index - b.offset);
    }
  }
  return fmt::format("<out of range {}>", index);
}

std::pair<std::size_t, std::size_t> ParameterSet::range(std::string_view prefix) const {
  std::size_t begin = size();
  std::size_t end = 0;
  for (const auto& b : layout_) {
    if (std::string_view(b.name).starts_with(prefix)) {
      begin = std::min(begin, b.offset);
      end = std::max(end, b.offset + b.size());
    }
  }
  if (begin >= end) return {0, 0};
  return {begin, end};
}

}  // namespace operon::nn
