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

#include <string>
#include <string_view>

#include "operon/tensor.hpp"

namespace operon::nn {

enum class Activation { linear, swish, tanh, sigmoid };

/// Parses "linear", "swish", "tanh" or "sigmoid"; anything else is a ConfigError.
Activation parse_activation(std::string_view name);
std::string to_string(Activation kind);

double sigmoid(double x);

RowMatrix activation_apply(Activation kind, const RowMatrix& x);

/// Multiplies `grad` in place by the activation derivative evaluated at the
/// pre-activation `z` (`y` is act(z), reused where cheaper).
void activation_backward(Activation kind, const RowMatrix& z, const RowMatrix& y, RowMatrix& grad);

}  // namespace operon::nn
