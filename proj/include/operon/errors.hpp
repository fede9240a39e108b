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

#include <stdexcept>
#include <string>

namespace operon {

/// Base of every error thrown by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed convergence, degenerate statistics (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration failed inside the time integrator.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, long sample, long step, double residual)
      : NumericError(what), sample_(sample), step_(step), residual_(residual) {}

  long sample() const { return sample_; }
  long step() const { return step_; }
  double residual() const { return residual_; }

 private:
  long sample_;
  long step_;
  double residual_;
};

/// Malformed or truncated files, unreadable paths (exit code 4).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace operon
