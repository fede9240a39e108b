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

#include "operon/scaler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

std::string to_string(ScalerKind kind) { return kind == ScalerKind::standard ? "standard" : "minmax"; }

std::string to_string(FitDomain domain) {
  switch (domain) {
    case FitDomain::branch_input: return "branch_input";
    case FitDomain::trunk_input: return "trunk_input";
    case FitDomain::lstm_input: return "lstm_input";
    case FitDomain::target: return "target";
  }
  return "target";
}

ScalerKind parse_scaler_kind(std::string_view name) {
  if (name == "standard") return ScalerKind::standard;
  if (name == "minmax") return ScalerKind::minmax;
  throw ConfigError(fmt::format("unknown scaler kind '{}'", name));
}

FitDomain parse_fit_domain(std::string_view name) {
  for (auto d : {FitDomain::branch_input, FitDomain::trunk_input, FitDomain::lstm_input, FitDomain::target}) {
    if (to_string(d) == name) return d;
  }
  throw ConfigError(fmt::format("unknown scaler domain '{}'", name));
}

Scaler::Scaler(ScalerKind kind, FitDomain domain, double a, double b) : kind_(kind), domain_(domain), a_(a), b_(b) {
  if (kind == ScalerKind::standard) {
    if (!(b > 0.0) || !std::isfinite(b)) throw NumericError(fmt::format("degenerate standard scaler: stdev {}", b));
    offset_ = a;
    scale_ = b;
  } else {
    if (!(b > a) || !std::isfinite(b - a)) {
      throw NumericError(fmt::format("degenerate minmax scaler: min {} max {}", a, b));
    }
    offset_ = a;
    scale_ = b - a;
  }
}

Scaler Scaler::fit(ScalerKind kind, std::span<const double> data, FitDomain domain) {
  if (data.empty()) throw DimensionError("cannot fit a scaler on empty data");
  if (kind == ScalerKind::minmax) {
    auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    return Scaler(kind, domain, *lo, *hi);
  }
  double sum = 0.0;
  for (double v : data) sum += v;
  const double mean = sum / static_cast<double>(data.size());
  double ss = 0.0;
  for (double v : data) ss += (v - mean) * (v - mean);
  return Scaler(kind, domain, mean, std::sqrt(ss / static_cast<double>(data.size())));
}

Scaler Scaler::identity(FitDomain domain) { return Scaler(ScalerKind::standard, domain, 0.0, 1.0); }

void Scaler::apply_inplace(std::span<double> x) const {
  for (double& v : x) v = apply(v);
}

void Scaler::invert_inplace(std::span<double> y) const {
  for (double& v : y) v = invert(v);
}

Tensor Scaler::apply(const Tensor& x) const {
  Tensor out = x;
  apply_inplace(out.data());
  return out;
}

Tensor Scaler::invert(const Tensor& y) const {
  Tensor out = y;
  invert_inplace(out.data());
  return out;
}

Scaler fit_scaler(ScalerKind kind, const Tensor& data, FitDomain domain) {
  return Scaler::fit(kind, data.data(), domain);
}

}  // namespace operon
