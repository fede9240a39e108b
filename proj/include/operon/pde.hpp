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
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "operon/rng.hpp"
#include "operon/tensor.hpp"
#include "operon/trajectory.hpp"

namespace operon {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct EquationSpec {
  EquationKind kind = EquationKind::kdv;
  // kdv: u_t + gamma u_xxx + eta (u^2/2)_x = 0
  double gamma = 1.0;
  double eta = 6.0;
  // cahn_hilliard: u_t = (nu u + alpha u^3 + mu u_xx)_xx
  double ch_nu = -0.01;
  double ch_alpha = 0.01;
  double ch_mu = -1e-5;
  // burgers: u_t + (u^2/2)_x = (nu/pi) u_xx
  double burgers_nu = 0.001;
  std::size_t burgers_waves = 2;
  std::size_t burgers_n_max = 2;

  static EquationSpec defaults(EquationKind kind);
};

/// Periodic nodes x_j = origin + j*dx, j < n, dx = period / n.
struct Grid {
  double origin = 0.0;
  double period = 10.0;
  std::size_t n = 100;

  double dx() const { return period / static_cast<double>(n); }
  double x(std::size_t j) const { return origin + static_cast<double>(j) * dx(); }
  std::vector<double> nodes() const;

  static Grid defaults(EquationKind kind);
};

/// Horizon and output steps; the low resolution step is low_factor * dt_high.
struct TimeSpec {
  double horizon = 5.0;
  double dt_high = 0.025;
  std::size_t low_factor = 5;

  double dt_low() const { return dt_high * static_cast<double>(low_factor); }
  std::size_t n_t_high() const;
  std::size_t n_t_low() const;
  std::vector<double> times_high() const;
  std::vector<double> times_low() const;

  static TimeSpec defaults(EquationKind kind);
};

struct IntegratorConfig {
  /// Internal implicit midpoint steps per high-resolution output step.
  std::size_t substeps = 4;
  double tolerance = 1e-10;
  std::size_t max_iterations = 50;
};

struct KdvSoliton {
  double k = 0.75;
  double d = 0.5;
  double weight = 1.0;
};
struct BbmSoliton {
  double c = 2.0;
  double d = 0.5;
};
struct ChMode {
  double a = 0.0;
  double b = 0.0;
  int k = 1;
  int j = 1;
};
struct SineWave {
  double amplitude = 1.0;
  double phase = 0.0;
  int n = 1;
};
using ICParams = std::variant<std::vector<KdvSoliton>, std::vector<BbmSoliton>, std::vector<ChMode>,
                              std::vector<SineWave>>;

ICParams sample_ic_params(const EquationSpec& eq, Rng& rng);
Vector evaluate_initial_condition(const ICParams& ic, const Grid& grid);
Vector sample_initial_condition(const EquationSpec& eq, const Grid& grid, Rng& rng);

/// Floored modulo, result in [0, period).
double wrap(double x, double period);

/// Periodic central-difference operators.
SparseMatrix first_derivative(const Grid& grid);
SparseMatrix second_derivative(const Grid& grid);

/// Semi-discrete system M u_t = f(u) for one equation on one grid.
class SpatialOperator {
 public:
  SpatialOperator(const EquationSpec& eq, const Grid& grid);

  const EquationSpec& equation() const { return eq_; }
  const Grid& grid() const { return grid_; }
  /// f(u); for bbm this is the right-hand side of (I - D2) u_t = f(u).
  Vector rhs(const Vector& u) const;
  /// df/du.
  SparseMatrix jacobian(const Vector& u) const;
  /// Identity except for bbm.
  const SparseMatrix& mass() const { return mass_; }
  bool has_mass() const { return eq_.kind == EquationKind::bbm; }

 private:
  EquationSpec eq_;
  Grid grid_;
  SparseMatrix d1_;
  SparseMatrix d2_;
  SparseMatrix d3_;
  SparseMatrix d4_;
  SparseMatrix mass_;
};

Vector rhs_eval(const EquationSpec& eq, const Vector& u, const Grid& grid);

using RhsFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<SparseMatrix(const Vector&)>;

/// Newton solver for M (v - u) = dt f((u + v) / 2). The sparse factorization
/// pattern is analyzed once and reused for every iteration and step.
class MidpointStepper {
 public:
  MidpointStepper(RhsFn f, JacobianFn jacobian, SparseMatrix mass, IntegratorConfig config);
  explicit MidpointStepper(const SpatialOperator& op, IntegratorConfig config = {});
  explicit MidpointStepper(std::shared_ptr<const SpatialOperator> op, IntegratorConfig config = {});

  /// Throws IntegrationError tagged with (sample, step) if Newton fails.
  Vector step(const Vector& u, double dt, long sample = -1, long step_index = -1);
  std::size_t last_iterations() const { return last_iterations_; }
  double last_residual() const { return last_residual_; }

 private:
  RhsFn f_;
  JacobianFn jacobian_;
  SparseMatrix mass_;
  IntegratorConfig config_;
  Eigen::SparseLU<SparseMatrix> solver_;
  std::size_t pattern_nonzeros_ = 0;
  std::size_t last_iterations_ = 0;
  double last_residual_ = 0.0;
};

Vector implicit_midpoint_step(const EquationSpec& eq, const Grid& grid, const Vector& u, double dt,
                              const IntegratorConfig& config = {});

/// Rows are the states at t = i * dt_out, i = 0 .. horizon/dt_out, each output
/// step split into config.substeps implicit midpoint steps.
RowMatrix generate_trajectory(const EquationSpec& eq, const Vector& u0, const Grid& grid, double horizon,
                              double dt_out, const IntegratorConfig& config = {}, long sample = -1);

/// Integer ratio a / b, or ConfigError naming `what`.
std::size_t exact_ratio(double a, double b, const char* what);

/// Worker count from OPERON_THREADS (default: hardware concurrency).
std::size_t worker_threads();

struct GenerationRequest {
  EquationSpec equation;
  Grid grid;
  TimeSpec time;
  IntegratorConfig integrator;
  std::uint64_t seed = 0;
  /// RNG stream tag; samples draw from Rng::stream(seed, role, index).
  std::string role = "train";
  std::size_t first_index = 0;
  std::size_t count = 0;
};

/// High-resolution trajectories for sample indices first_index .. first_index+count-1,
/// generated in parallel with results independent of the thread count.
TrajectorySet generate_dataset(const GenerationRequest& request, std::size_t threads = 0);

}  // namespace operon
