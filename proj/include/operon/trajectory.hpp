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
#include <string>
#include <string_view>
#include <vector>

#include "operon/tensor.hpp"

namespace operon {

/// Values double as the on-disk tags.
enum class EquationKind : std::uint32_t { kdv = 0, bbm = 1, cahn_hilliard = 2, burgers = 3 };
enum class Resolution : std::uint32_t { high = 0, low = 1 };

std::string to_string(EquationKind kind);
std::string to_string(Resolution resolution);
EquationKind parse_equation(std::string_view name);
Resolution parse_resolution(std::string_view name);

/// N trajectories on a shared (t, x) grid; u is [N x n_t x n_x].
struct TrajectorySet {
  EquationKind equation = EquationKind::kdv;
  Resolution resolution = Resolution::high;
  double dt = 0.0;
  double dx = 0.0;
  std::vector<double> x;
  std::vector<double> t;
  Tensor u;

  std::size_t samples() const { return u.rank() == 3 ? u.dim(0) : 0; }
  std::size_t n_t() const { return t.size(); }
  std::size_t n_x() const { return x.size(); }

  /// Checks shapes against the grids.
  void validate() const;
  /// First frame of every trajectory, [N x n_x].
  RowMatrix initial_conditions() const;
  /// Every trajectory flattened t-major, [N x (n_t*n_x)].
  RowMatrix flat() const;
  TrajectorySet select(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

/// Keeps time rows 0, factor, 2*factor, ...
TrajectorySet downsample_time(const TrajectorySet& traj, std::size_t factor);

}  // namespace operon
