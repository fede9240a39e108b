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
#include <filesystem>
#include <string>
#include <vector>

#include "operon/trajectory.hpp"

namespace operon {

/// Binary trajectory file: a 56-byte little-endian header
///   "DONL" | version u32 | equation u32 | resolution u32 | N u64 | n_t u64 |
///   n_x u64 | dt f64 | dx f64
/// followed by x[n_x], t[n_t] and u[N*n_t*n_x] as little-endian f64.
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 56;

/// Writes through a temporary file and a rename; rejects non-finite values.
void write_dataset(const std::filesystem::path& path, const TrajectorySet& traj);
TrajectorySet read_dataset(const std::filesystem::path& path);

std::vector<unsigned char> encode_dataset(const TrajectorySet& traj);
TrajectorySet decode_dataset(const std::vector<unsigned char>& bytes);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::vector<unsigned char>& bytes);

struct SplitSpec {
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  std::size_t test_size = 0;
};

/// Sorted, disjoint index sets covering 0 .. N-1.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Test takes indices 0 .. test_size-1, so membership does not depend on N.
/// Validation takes round(val_fraction * rest) of the shuffled remainder and
/// training keeps the rest.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  TrajectorySet train;
  TrajectorySet val;
  TrajectorySet test;
};

DatasetSplit split_dataset(const TrajectorySet& traj, const SplitSpec& spec);

}  // namespace operon
