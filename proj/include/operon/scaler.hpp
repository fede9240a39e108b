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

#include <span>
#include <string>
#include <string_view>

#include "operon/tensor.hpp"

namespace operon {

enum class ScalerKind { standard, minmax };

/// Which role the fitted statistics belong to.
enum class FitDomain { branch_input, trunk_input, lstm_input, target };

std::string to_string(ScalerKind kind);
std::string to_string(FitDomain domain);
ScalerKind parse_scaler_kind(std::string_view name);
FitDomain parse_fit_domain(std::string_view name);

/// Global affine scaler: standard maps x to (x - mean) / stdev, minmax maps
/// x to (x - min) / (max - min). Statistics cover every entry of the fit data.
class Scaler {
 public:
  Scaler() = default;
  /// Raw constructor; `a` is mean or min, `b` is stdev or max.
  Scaler(ScalerKind kind, FitDomain domain, double a, double b);

  static Scaler fit(ScalerKind kind, std::span<const double> data, FitDomain domain);
  /// Mean 0, stdev 1: leaves data untouched.
  static Scaler identity(FitDomain domain);

  ScalerKind kind() const { return kind_; }
  FitDomain domain() const { return domain_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double apply(double x) const { return (x - offset_) / scale_; }
  double invert(double y) const { return y * scale_ + offset_; }
  Tensor apply(const Tensor& x) const;
  Tensor invert(const Tensor& y) const;
  void apply_inplace(std::span<double> x) const;
  void invert_inplace(std::span<double> y) const;

  friend bool operator==(const Scaler& l, const Scaler& r) {
    return l.kind_ == r.kind_ && l.domain_ == r.domain_ && l.a_ == r.a_ && l.b_ == r.b_;
  }

 private:
  ScalerKind kind_ = ScalerKind::standard;
  FitDomain domain_ = FitDomain::target;
  double a_ = 0.0;
  double b_ = 1.0;
  double offset_ = 0.0;
  double scale_ = 1.0;
};

Scaler fit_scaler(ScalerKind kind, const Tensor& data, FitDomain domain = FitDomain::target);
inline Tensor apply_scaler(const Scaler& s, const Tensor& x) { return s.apply(x); }
inline Tensor invert_scaler(const Scaler& s, const Tensor& y) { return s.invert(y); }

}  // namespace operon
