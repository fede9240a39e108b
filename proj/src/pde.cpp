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

#include "operon/pde.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

EquationSpec EquationSpec::defaults(EquationKind kind) {
  EquationSpec eq;
  eq.kind = kind;
  return eq;
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = this->x(j);
  return x;
}

Grid Grid::defaults(EquationKind kind) {
  switch (kind) {
    case EquationKind::kdv: return {0.0, 10.0, 100};
    case EquationKind::bbm: return {0.0, 20.0, 100};
    case EquationKind::cahn_hilliard: return {0.0, 1.0, 100};
    case EquationKind::burgers: return {-1.0, 2.0, 100};
  }
  return {};
}

std::size_t exact_ratio(double a, double b, const char* what) {
  if (!(b > 0.0) || !(a >= 0.0)) throw ConfigError(fmt::format("{}: invalid ratio {} / {}", what, a, b));
  const double r = a / b;
  const double rounded = std::round(r);
  if (std::abs(r - rounded) > 1e-9 * std::max(1.0, r)) {
    throw ConfigError(fmt::format("{}: {} is not an integer multiple of {}", what, a, b));
  }
  return static_cast<std::size_t>(rounded);
}

std::size_t TimeSpec::n_t_high() const { return exact_ratio(horizon, dt_high, "time.horizon / time.dt_high") + 1; }

std::size_t TimeSpec::n_t_low() const { return exact_ratio(horizon, dt_low(), "time.horizon / dt_low") + 1; }

std::vector<double> TimeSpec::times_high() const {
  std::vector<double> t(n_t_high());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * dt_high;
  return t;
}

std::vector<double> TimeSpec::times_low() const {
  std::vector<double> t(n_t_low());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i * low_factor) * dt_high;
  return t;
}

TimeSpec TimeSpec::defaults(EquationKind kind) {
  switch (kind) {
    case EquationKind::kdv: return {5.0, 0.025, 5};
    case EquationKind::bbm: return {15.0, 0.075, 5};
    case EquationKind::cahn_hilliard: return {3.0, 0.02, 5};
    case EquationKind::burgers: return {2.0, 0.01, 5};
  }
  return {};
}

double wrap(double x, double period) { return x - period * std::floor(x / period); }

namespace {

double sech2(double z) {
  const double c = std::cosh(z);
  return 1.0 / (c * c);
}

}  // namespace

ICParams sample_ic_params(const EquationSpec& eq, Rng& rng) {
  switch (eq.kind) {
    case EquationKind::kdv: {
      std::vector<KdvSoliton> s(2);
      for (auto& p : s) {
        p.k = rng.uniform(0.5, 1.0);
        p.d = rng.uniform(0.0, 1.0);
      }
      return s;
    }
    case EquationKind::bbm: {
      std::vector<BbmSoliton> s(2);
      for (auto& p : s) {
        p.c = rng.uniform(1.0, 3.0);
        p.d = rng.uniform(0.0, 1.0);
      }
      return s;
    }
    case EquationKind::cahn_hilliard: {
      std::vector<ChMode> m(2);
      for (auto& p : m) {
        p.a = rng.uniform(0.0, 0.2);
        p.b = rng.uniform(0.0, 0.2);
        p.k = static_cast<int>(rng.integer(1, 6));
        p.j = static_cast<int>(rng.integer(1, 6));
      }
      return m;
    }
    case EquationKind::burgers: {
      if (eq.burgers_n_max < 1) throw ConfigError("equation.burgers_n_max must be at least 1");
      std::vector<SineWave> w(eq.burgers_waves);
      for (auto& p : w) {
        p.n = static_cast<int>(rng.integer(1, static_cast<std::int64_t>(eq.burgers_n_max)));
        p.amplitude = rng.uniform(0.0, 1.0);
        p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      }
      return w;
    }
  }
  throw ConfigError("unknown equation");
}

Vector evaluate_initial_condition(const ICParams& ic, const Grid& grid) {
  const double P = grid.period;
  Vector u = Vector::Zero(static_cast<Eigen::Index>(grid.n));
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double x = grid.x(j);
    double v = 0.0;
    if (const auto* kdv = std::get_if<std::vector<KdvSoliton>>(&ic)) {
      for (const auto& s : *kdv) {
        v += s.weight * 2.0 * s.k * s.k * sech2(s.k * (wrap(x + P / 2 - P * s.d, P) - P / 2));
      }
    } else if (const auto* bbm = std::get_if<std::vector<BbmSoliton>>(&ic)) {
      for (const auto& s : *bbm) {
        v += 3.0 * (s.c - 1.0) * sech2(0.5 * std::sqrt(1.0 - 1.0 / s.c) * (wrap(x + P / 2 - P * s.d, P) - P / 2));
      }
    } else if (const auto* ch = std::get_if<std::vector<ChMode>>(&ic)) {
      const double w = 2.0 * std::numbers::pi / P;
      for (const auto& m : *ch) v += m.a * std::sin(m.k * w * x) + m.b * std::cos(m.j * w * x);
    } else {
      const double w = 2.0 * std::numbers::pi / P;
      for (const auto& s : std::get<std::vector<SineWave>>(ic)) v += s.amplitude * std::sin(s.n * w * x + s.phase);
    }
    u[static_cast<Eigen::Index>(j)] = v;
  }
  return u;
}

Vector sample_initial_condition(const EquationSpec& eq, const Grid& grid, Rng& rng) {
  return evaluate_initial_condition(sample_ic_params(eq, rng), grid);
}

namespace {

SparseMatrix periodic_stencil(std::size_t n, std::initializer_list<std::pair<int, double>> taps) {
  std::vector<Eigen::Triplet<double>> entries;
  const auto ni = static_cast<long>(n);
  for (long j = 0; j < ni; ++j) {
    for (const auto& [offset, w] : taps) entries.emplace_back(j, ((j + offset) % ni + ni) % ni, w);
  }
  SparseMatrix m(ni, ni);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

SparseMatrix identity(std::size_t n) {
  SparseMatrix i(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  i.setIdentity();
  return i;
}

SparseMatrix diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < d.size(); ++i) entries.emplace_back(i, i, d[i]);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

}  // namespace

SparseMatrix first_derivative(const Grid& grid) {
  if (grid.n < 3) throw ConfigError("grid needs at least 3 points");
  const double h = 1.0 / (2.0 * grid.dx());
  return periodic_stencil(grid.n, {{-1, -h}, {1, h}});
}

SparseMatrix second_derivative(const Grid& grid) {
  if (grid.n < 3) throw ConfigError("grid needs at least 3 points");
  const double h = 1.0 / (grid.dx() * grid.dx());
  return periodic_stencil(grid.n, {{-1, h}, {0, -2.0 * h}, {1, h}});
}

SpatialOperator::SpatialOperator(const EquationSpec& eq, const Grid& grid)
    : eq_(eq), grid_(grid), d1_(first_derivative(grid)), d2_(second_derivative(grid)) {
  d3_ = d1_ * d2_;
  d4_ = d2_ * d2_;
  mass_ = identity(grid.n);
  if (eq.kind == EquationKind::bbm) mass_ = mass_ - d2_;
}

Vector SpatialOperator::rhs(const Vector& u) const {
  if (u.size() != static_cast<Eigen::Index>(grid_.n)) {
    throw DimensionError(fmt::format("state has {} entries, grid {}", u.size(), grid_.n));
  }
  const Vector half_sq = 0.5 * u.array().square().matrix();
  switch (eq_.kind) {
    case EquationKind::kdv: return -eq_.gamma * (d3_ * u) - eq_.eta * (d1_ * half_sq);
    case EquationKind::bbm: return -(d1_ * (u + half_sq));
    case EquationKind::cahn_hilliard: {
      const Vector chem = eq_.ch_nu * u + eq_.ch_alpha * u.array().cube().matrix();
      return d2_ * chem + eq_.ch_mu * (d4_ * u);
    }
    case EquationKind::burgers: return -(d1_ * half_sq) + (eq_.burgers_nu / std::numbers::pi) * (d2_ * u);
  }
  return u;
}

SparseMatrix SpatialOperator::jacobian(const Vector& u) const {
  switch (eq_.kind) {
    case EquationKind::kdv: return -eq_.gamma * d3_ - eq_.eta * (d1_ * diagonal(u));
    case EquationKind::bbm: return -(d1_ * diagonal((1.0 + u.array()).matrix()));
    case EquationKind::cahn_hilliard: {
      const Vector dchem = (eq_.ch_nu + 3.0 * eq_.ch_alpha * u.array().square()).matrix();
      return SparseMatrix(d2_ * diagonal(dchem)) + eq_.ch_mu * d4_;
    }
    case EquationKind::burgers:
      return -(d1_ * diagonal(u)) + (eq_.burgers_nu / std::numbers::pi) * d2_;
  }
  return d1_;
}

Vector rhs_eval(const EquationSpec& eq, const Vector& u, const Grid& grid) { return SpatialOperator(eq, grid).rhs(u); }

MidpointStepper::MidpointStepper(RhsFn f, JacobianFn jacobian, SparseMatrix mass, IntegratorConfig config)
    : f_(std::move(f)), jacobian_(std::move(jacobian)), mass_(std::move(mass)), config_(config) {
  if (config_.max_iterations == 0) throw ConfigError("integrator.max_iterations must be positive");
  if (!(config_.tolerance > 0.0)) throw ConfigError("integrator.tolerance must be positive");
}

MidpointStepper::MidpointStepper(const SpatialOperator& op, IntegratorConfig config)
    : MidpointStepper(std::make_shared<const SpatialOperator>(op), config) {}

MidpointStepper::MidpointStepper(std::shared_ptr<const SpatialOperator> op, IntegratorConfig config)
    : MidpointStepper([op](const Vector& u) { return op->rhs(u); },
                      [op](const Vector& u) { return op->jacobian(u); }, op->mass(), config) {}

Vector MidpointStepper::step(const Vector& u, double dt, long sample, long step_index) {
  Vector v = u;
  double residual = 0.0;
  for (std::size_t it = 0;; ++it) {
    const Vector w = 0.5 * (u + v);
    const Vector r = mass_ * (v - u) - dt * f_(w);
    residual = r.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(residual)) break;
    if (residual <= config_.tolerance) {
      last_iterations_ = it;
      last_residual_ = residual;
      return v;
    }
    if (it == config_.max_iterations) break;
    SparseMatrix jac = mass_ - (0.5 * dt) * jacobian_(w);
    jac.makeCompressed();
    if (static_cast<std::size_t>(jac.nonZeros()) != pattern_nonzeros_) {
      solver_.analyzePattern(jac);
      pattern_nonzeros_ = static_cast<std::size_t>(jac.nonZeros());
    }
    solver_.factorize(jac);
    if (solver_.info() != Eigen::Success) break;
    v -= solver_.solve(r);
  }
  last_residual_ = residual;
  throw IntegrationError(fmt::format("Newton iteration failed (sample {}, step {}, residual {:.3e})", sample,
                                     step_index, residual),
                         sample, step_index, residual);
}

Vector implicit_midpoint_step(const EquationSpec& eq, const Grid& grid, const Vector& u, double dt,
                              const IntegratorConfig& config) {
  SpatialOperator op(eq, grid);
  MidpointStepper stepper(op, config);
  return stepper.step(u, dt);
}

RowMatrix generate_trajectory(const EquationSpec& eq, const Vector& u0, const Grid& grid, double horizon,
                              double dt_out, const IntegratorConfig& config, long sample) {
  if (config.substeps == 0) throw ConfigError("integrator.substeps must be positive");
  const std::size_t steps = exact_ratio(horizon, dt_out, "horizon / output step");
  const double dt = dt_out / static_cast<double>(config.substeps);
  SpatialOperator op(eq, grid);
  MidpointStepper stepper(op, config);
  RowMatrix out(static_cast<Eigen::Index>(steps + 1), u0.size());
  out.row(0) = u0.transpose();
  Vector u = u0;
  long counter = 0;
  for (std::size_t i = 1; i <= steps; ++i) {
    for (std::size_t s = 0; s < config.substeps; ++s) u = stepper.step(u, dt, sample, counter++);
    if (!u.allFinite()) throw IntegrationError("state became non-finite", sample, counter, 0.0);
    out.row(static_cast<Eigen::Index>(i)) = u.transpose();
  }
  return out;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("OPERON_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError(fmt::format("OPERON_THREADS='{}' is not a positive integer", env));
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

TrajectorySet generate_dataset(const GenerationRequest& request, std::size_t threads) {
  const auto times = request.time.times_high();
  const std::size_t n_t = times.size();
  const std::size_t n_x = request.grid.n;
  TrajectorySet set;
  set.equation = request.equation.kind;
  set.resolution = Resolution::high;
  set.dt = request.time.dt_high;
  set.dx = request.grid.dx();
  set.x = request.grid.nodes();
  set.t = times;
  set.u = Tensor({request.count, n_t, n_x});

  if (threads == 0) threads = worker_threads();
  threads = std::max<std::size_t>(1, std::min(threads, request.count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= request.count) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const std::size_t index = request.first_index + i;
        Rng rng = Rng::stream(request.seed, request.role, index);
        const Vector u0 = sample_initial_condition(request.equation, request.grid, rng);
        const RowMatrix traj = generate_trajectory(request.equation, u0, request.grid, request.time.horizon,
                                                   request.time.dt_high, request.integrator,
                                                   static_cast<long>(index));
        std::copy(traj.data(), traj.data() + traj.size(), set.u.storage().begin() + static_cast<long>(i * n_t * n_x));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return set;
}

}  // namespace operon
