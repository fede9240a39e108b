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

#include "operon/nn/activation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon::nn {

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::linear;
  if (name == "swish") return Activation::swish;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::linear: return "linear";
    case Activation::swish: return "swish";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

RowMatrix activation_apply(Activation kind, const RowMatrix& x) {
  switch (kind) {
    case Activation::linear: return x;
    case Activation::swish: return x.unaryExpr([](double v) { return v * sigmoid(v); });
    case Activation::tanh: return x.unaryExpr([](double v) { return std::tanh(v); });
    case Activation::sigmoid: return x.unaryExpr([](double v) { return sigmoid(v); });
  }
  throw ConfigError("invalid activation kind");
}

void activation_backward(Activation kind, const RowMatrix& z, const RowMatrix& y, RowMatrix& grad) {
  switch (kind) {
    case Activation::linear:
      return;
    case Activation::swish:
      grad.array() *= z.binaryExpr(y, [](double zv, double yv) {
        const double s = sigmoid(zv);
        return s + yv * (1.0 - s);
      }).array();
      return;
    case Activation::tanh:
      grad.array() *= 1.0 - y.array().square();
      return;
    case Activation::sigmoid:
      grad.array() *= y.array() * (1.0 - y.array());
      return;
  }
}

}  // namespace operon::nn
