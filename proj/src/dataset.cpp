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

#include "operon/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "operon/errors.hpp"
#include "operon/rng.hpp"

namespace operon {

std::string to_string(EquationKind kind) {
  switch (kind) {
    case EquationKind::kdv: return "kdv";
    case EquationKind::bbm: return "bbm";
    case EquationKind::cahn_hilliard: return "cahn_hilliard";
    case EquationKind::burgers: return "burgers";
  }
  return "kdv";
}

std::string to_string(Resolution resolution) { return resolution == Resolution::high ? "high" : "low"; }

EquationKind parse_equation(std::string_view name) {
  for (auto k : {EquationKind::kdv, EquationKind::bbm, EquationKind::cahn_hilliard, EquationKind::burgers}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError(fmt::format("unknown equation '{}' (expected kdv, bbm, cahn_hilliard or burgers)", name));
}

Resolution parse_resolution(std::string_view name) {
  if (name == "high") return Resolution::high;
  if (name == "low") return Resolution::low;
  throw ConfigError(fmt::format("unknown resolution '{}'", name));
}

void TrajectorySet::validate() const {
  if (u.rank() != 3) throw DimensionError("trajectory array must be [N x n_t x n_x]");
  if (u.dim(1) != t.size() || u.dim(2) != x.size()) {
    throw DimensionError(fmt::format("trajectory array {}x{} does not match grids n_t={} n_x={}", u.dim(1), u.dim(2),
                                     t.size(), x.size()));
  }
}

RowMatrix TrajectorySet::initial_conditions() const {
  validate();
  RowMatrix u0(static_cast<Eigen::Index>(samples()), static_cast<Eigen::Index>(n_x()));
  for (std::size_t s = 0; s < samples(); ++s) {
    for (std::size_t j = 0; j < n_x(); ++j) u0(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = u(s, 0, j);
  }
  return u0;
}

RowMatrix TrajectorySet::flat() const {
  validate();
  return u.matrix();
}

TrajectorySet TrajectorySet::select(const std::vector<std::size_t>& indices) const {
  validate();
  TrajectorySet out = *this;
  const std::size_t frame = n_t() * n_x();
  out.u = Tensor({indices.size(), n_t(), n_x()});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= samples()) throw DimensionError(fmt::format("sample {} out of range {}", indices[k], samples()));
    std::copy_n(u.storage().begin() + static_cast<long>(indices[k] * frame), frame,
                out.u.storage().begin() + static_cast<long>(k * frame));
  }
  return out;
}

TrajectorySet downsample_time(const TrajectorySet& traj, std::size_t factor) {
  traj.validate();
  if (factor == 0 || traj.n_t() == 0 || (traj.n_t() - 1) % factor != 0) {
    throw ConfigError(fmt::format("cannot downsample {} time points by {}", traj.n_t(), factor));
  }
  const std::size_t n_t = (traj.n_t() - 1) / factor + 1;
  TrajectorySet out = traj;
  out.resolution = factor == 1 ? traj.resolution : Resolution::low;
  out.dt = traj.dt * static_cast<double>(factor);
  out.t.resize(n_t);
  for (std::size_t i = 0; i < n_t; ++i) out.t[i] = traj.t[i * factor];
  out.u = Tensor({traj.samples(), n_t, traj.n_x()});
  for (std::size_t s = 0; s < traj.samples(); ++s) {
    for (std::size_t i = 0; i < n_t; ++i) {
      for (std::size_t j = 0; j < traj.n_x(); ++j) out.u(s, i, j) = traj.u(s, i * factor, j);
    }
  }
  return out;
}

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}
  std::size_t offset() const { return offset_; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
    offset_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
    offset_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::span<double> out) {
    for (double& v : out) v = f64();
  }

 private:
  void need(std::size_t n) const {
    if (offset_ + n > bytes_.size()) {
      throw FormatError(fmt::format("unexpected end of data at byte offset {}", offset_));
    }
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_dataset(const TrajectorySet& traj) {
  traj.validate();
  const std::size_t doubles = traj.n_x() + traj.n_t() + traj.u.size();
  Writer w(kDatasetHeaderBytes + 8 * doubles);
  w.raw("DONL", 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(traj.equation));
  w.u32(static_cast<std::uint32_t>(traj.resolution));
  w.u64(traj.samples());
  w.u64(traj.n_t());
  w.u64(traj.n_x());
  w.f64(traj.dt);
  w.f64(traj.dx);
  for (double v : traj.x) w.f64(v);
  for (double v : traj.t) w.f64(v);
  for (double v : traj.u.storage()) w.f64(v);
  return w.take();
}

TrajectorySet decode_dataset(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kDatasetHeaderBytes) {
    throw FormatError(fmt::format("truncated header: expected {} bytes, got {}", kDatasetHeaderBytes, bytes.size()));
  }
  if (std::memcmp(bytes.data(), "DONL", 4) != 0) throw FormatError("bad magic at byte offset 0 (expected 'DONL')");
  Reader r(bytes);
  r.u32();
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError(fmt::format("unsupported version {} at byte offset 4 (expected {})", version, kDatasetVersion));
  }
  const std::uint32_t eq = r.u32();
  if (eq > 3) throw FormatError(fmt::format("unknown equation tag {} at byte offset 8", eq));
  const std::uint32_t res = r.u32();
  if (res > 1) throw FormatError(fmt::format("unknown resolution tag {} at byte offset 12", res));
  const std::uint64_t n = r.u64();
  const std::uint64_t n_t = r.u64();
  const std::uint64_t n_x = r.u64();
  TrajectorySet traj;
  traj.equation = static_cast<EquationKind>(eq);
  traj.resolution = static_cast<Resolution>(res);
  traj.dt = r.f64();
  traj.dx = r.f64();

  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max() / 16;
  if (n_t > kMax || n_x > kMax || (n_t != 0 && n_x > kMax / n_t) || (n_t * n_x != 0 && n > kMax / (n_t * n_x))) {
    throw FormatError(fmt::format("implausible dimensions N={} n_t={} n_x={} at byte offset 16", n, n_t, n_x));
  }
  const std::uint64_t expected = kDatasetHeaderBytes + 8 * (n_x + n_t + n * n_t * n_x);
  if (bytes.size() != expected) {
    throw FormatError(fmt::format("{} file: expected {} bytes, got {} (payload starts at byte offset {})",
                                  bytes.size() < expected ? "truncated" : "oversized", expected, bytes.size(),
                                  kDatasetHeaderBytes));
  }
  traj.x.resize(n_x);
  traj.t.resize(n_t);
  r.f64s(traj.x);
  r.f64s(traj.t);
  traj.u = Tensor({n, n_t, n_x});
  r.f64s(traj.u.data());
  return traj;
}

void write_dataset(const std::filesystem::path& path, const TrajectorySet& traj) {
  traj.validate();
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(traj.x.begin(), traj.x.end(), finite) || !std::all_of(traj.t.begin(), traj.t.end(), finite) ||
      !traj.u.all_finite() || !std::isfinite(traj.dt) || !std::isfinite(traj.dx)) {
    throw NumericError(fmt::format("refusing to write non-finite values to {}", path.string()));
  }
  const auto bytes = encode_dataset(traj);
  auto tmp = path;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError(fmt::format("cannot move dataset into place at {}", path.string()));
  }
}

TrajectorySet read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_dataset(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string sha256_hex(const std::vector<unsigned char>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n < spec.test_size + 2) {
    throw ConfigError(fmt::format("need at least {} samples for a split with {} test samples, have {}",
                                  spec.test_size + 2, spec.test_size, n));
  }
  if (!(spec.val_fraction >= 0.0 && spec.val_fraction < 1.0)) {
    throw ConfigError(fmt::format("validation fraction {} outside [0, 1)", spec.val_fraction));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<long>(spec.test_size));
  std::vector<std::size_t> rest(order.begin() + static_cast<long>(spec.test_size), order.end());
  Rng val_rng = Rng::stream(spec.seed, "split-val");
  val_rng.shuffle(std::span<std::size_t>(rest));
  auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(rest.size())));
  n_val = std::min(n_val, rest.size() - 1);
  out.val.assign(rest.begin(), rest.begin() + static_cast<long>(n_val));
  out.train.assign(rest.begin() + static_cast<long>(n_val), rest.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

DatasetSplit split_dataset(const TrajectorySet& traj, const SplitSpec& spec) {
  const auto idx = split_indices(traj.samples(), spec);
  return {traj.select(idx.train), traj.select(idx.val), traj.select(idx.test)};
}

}  // namespace operon
