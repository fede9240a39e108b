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

#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "operon/errors.hpp"
#include "operon/pde.hpp"
#include "operon/trajectory.hpp"

namespace operon {
namespace {

const std::array<EquationKind, 4> kEquations{EquationKind::kdv, EquationKind::bbm, EquationKind::cahn_hilliard,
                                             EquationKind::burgers};

Vector random_state(const Grid& g, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "state");
  Vector u(static_cast<Eigen::Index>(g.n));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.0, 1.0);
  return u;
}

TEST(Defaults, GridsPerEquation) {
  EXPECT_DOUBLE_EQ(Grid::defaults(EquationKind::kdv).dx(), 0.1);
  EXPECT_DOUBLE_EQ(Grid::defaults(EquationKind::bbm).dx(), 0.2);
  EXPECT_DOUBLE_EQ(Grid::defaults(EquationKind::cahn_hilliard).dx(), 0.01);
  EXPECT_DOUBLE_EQ(Grid::defaults(EquationKind::burgers).dx(), 0.02);
  EXPECT_EQ(Grid::defaults(EquationKind::burgers).x(0), -1.0);
  for (auto k : kEquations) EXPECT_EQ(Grid::defaults(k).n, 100u);
}

TEST(Defaults, TimePointsPerEquation) {
  const std::array<std::pair<std::size_t, std::size_t>, 4> expected{{{201, 41}, {201, 41}, {151, 31}, {201, 41}}};
  for (std::size_t i = 0; i < 4; ++i) {
    const TimeSpec t = TimeSpec::defaults(kEquations[i]);
    EXPECT_EQ(t.n_t_high(), expected[i].first) << to_string(kEquations[i]);
    EXPECT_EQ(t.n_t_low(), expected[i].second) << to_string(kEquations[i]);
  }
  EXPECT_DOUBLE_EQ(TimeSpec::defaults(EquationKind::kdv).dt_low(), 0.125);
}

TEST(Defaults, EquationParameters) {
  const EquationSpec kdv = EquationSpec::defaults(EquationKind::kdv);
  EXPECT_EQ(kdv.gamma, 1.0);
  EXPECT_EQ(kdv.eta, 6.0);
  const EquationSpec ch = EquationSpec::defaults(EquationKind::cahn_hilliard);
  EXPECT_EQ(ch.ch_nu, -0.01);
  EXPECT_EQ(ch.ch_alpha, 0.01);
  EXPECT_EQ(ch.ch_mu, -1e-5);
  EXPECT_EQ(EquationSpec::defaults(EquationKind::burgers).burgers_nu, 0.001);
}

TEST(Wrap, FlooredModulo) {
  EXPECT_EQ(wrap(12.5, 10.0), 2.5);
  EXPECT_EQ(wrap(-2.5, 10.0), 7.5);
  EXPECT_EQ(wrap(0.0, 10.0), 0.0);
  EXPECT_EQ(wrap(10.0, 10.0), 0.0);
}

TEST(InitialCondition, KdvSolitonPeak) {
  const Grid g = Grid::defaults(EquationKind::kdv);
  const Vector u = evaluate_initial_condition(std::vector<KdvSoliton>{{1.0, 0.5, 1.0}, {0.8, 0.1, 0.0}}, g);
  EXPECT_EQ(g.x(50), 5.0);
  EXPECT_DOUBLE_EQ(u[50], 2.0);
  Eigen::Index arg = 0;
  u.maxCoeff(&arg);
  EXPECT_EQ(arg, 50);
}

TEST(InitialCondition, CahnHilliardZeroAmplitude) {
  const Vector u = evaluate_initial_condition(std::vector<ChMode>{{0, 0, 3, 4}, {0, 0, 1, 6}},
                                              Grid::defaults(EquationKind::cahn_hilliard));
  EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitialCondition, BurgersSingleWave) {
  const Grid g = Grid::defaults(EquationKind::burgers);
  const Vector u = evaluate_initial_condition(std::vector<SineWave>{{1.0, 0.0, 1}}, g);
  EXPECT_NEAR(g.x(50), 0.0, 1e-15);
  EXPECT_NEAR(u[50], 0.0, 1e-14);
  for (std::size_t j = 0; j < g.n; ++j) {
    EXPECT_NEAR(u[static_cast<Eigen::Index>(j)], std::sin(std::numbers::pi * g.x(j)), 1e-14);
  }
}

TEST(InitialCondition, SampledParametersInRange) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const auto kdv = std::get<std::vector<KdvSoliton>>(sample_ic_params(EquationSpec::defaults(EquationKind::kdv), rng));
    ASSERT_EQ(kdv.size(), 2u);
    for (const auto& p : kdv) {
      EXPECT_GT(p.k, 0.5);
      EXPECT_LT(p.k, 1.0);
      EXPECT_GT(p.d, 0.0);
      EXPECT_LT(p.d, 1.0);
    }
    const auto bbm = std::get<std::vector<BbmSoliton>>(sample_ic_params(EquationSpec::defaults(EquationKind::bbm), rng));
    for (const auto& p : bbm) {
      EXPECT_GT(p.c, 1.0);
      EXPECT_LT(p.c, 3.0);
    }
    const auto ch =
        std::get<std::vector<ChMode>>(sample_ic_params(EquationSpec::defaults(EquationKind::cahn_hilliard), rng));
    for (const auto& p : ch) {
      EXPECT_GT(p.a, 0.0);
      EXPECT_LT(p.b, 0.2);
      EXPECT_GE(p.k, 1);
      EXPECT_LE(p.j, 6);
    }
    const auto bu = std::get<std::vector<SineWave>>(sample_ic_params(EquationSpec::defaults(EquationKind::burgers), rng));
    for (const auto& p : bu) {
      EXPECT_GT(p.phase, 0.0);
      EXPECT_LT(p.phase, 2.0 * std::numbers::pi);
      EXPECT_GE(p.n, 1);
      EXPECT_LE(p.n, 2);
    }
  }
}

TEST(Rhs, ConstantStateIsStationary) {
  for (auto k : kEquations) {
    const Grid g = Grid::defaults(k);
    const Vector f = rhs_eval(EquationSpec::defaults(k), Vector::Constant(static_cast<Eigen::Index>(g.n), 0.7), g);
    EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-12) << to_string(k);
  }
}

TEST(Rhs, ConservativeSumVanishes) {
  for (auto k : kEquations) {
    const Grid g = Grid::defaults(k);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Vector f = rhs_eval(EquationSpec::defaults(k), random_state(g, s), g);
      EXPECT_LT(std::abs(f.sum() * g.dx()), 1e-13 * std::max(1.0, f.cwiseAbs().maxCoeff())) << to_string(k);
    }
  }
}

TEST(Rhs, ThirdDerivativeSecondOrder) {
  EquationSpec eq = EquationSpec::defaults(EquationKind::kdv);
  eq.eta = 0.0;
  const double P = 10.0, w = 2.0 * std::numbers::pi / P;
  std::vector<double> errors;
  for (std::size_t n : {50u, 100u, 200u}) {
    const Grid g{0.0, P, n};
    Vector u(static_cast<Eigen::Index>(n)), exact(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      u[static_cast<Eigen::Index>(j)] = std::sin(w * g.x(j));
      exact[static_cast<Eigen::Index>(j)] = w * w * w * std::cos(w * g.x(j));  // -gamma * d3 sin = +w^3 cos
    }
    errors.push_back((rhs_eval(eq, u, g) - exact).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i + 1];
    EXPECT_GE(ratio, 3.2);
    EXPECT_LE(ratio, 4.8);
  }
}

TEST(Rhs, JacobianMatchesFiniteDifference) {
  for (auto k : kEquations) {
    const Grid g{0.0, Grid::defaults(k).period, 16};
    const EquationSpec eq = EquationSpec::defaults(k);
    const SpatialOperator op(eq, g);
    const Vector u = random_state(g, 3);
    const Eigen::MatrixXd jac = Eigen::MatrixXd(op.jacobian(u));
    for (Eigen::Index c = 0; c < 16; ++c) {
      Vector up = u, um = u;
      up[c] += 1e-6;
      um[c] -= 1e-6;
      const Vector fd = (op.rhs(up) - op.rhs(um)) / 2e-6;
      EXPECT_LT((fd - jac.col(c)).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()))
          << to_string(k) << " column " << c;
    }
  }
}

TEST(Rhs, BbmMassOperator) {
  const Grid g = Grid::defaults(EquationKind::bbm);
  const SpatialOperator op(EquationSpec::defaults(EquationKind::bbm), g);
  EXPECT_TRUE(op.has_mass());
  const SparseMatrix expected = SparseMatrix(Eigen::MatrixXd::Identity(100, 100).sparseView()) - second_derivative(g);
  EXPECT_LT((Eigen::MatrixXd(op.mass()) - Eigen::MatrixXd(expected)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_FALSE(SpatialOperator(EquationSpec::defaults(EquationKind::kdv), g).has_mass());
}

SparseMatrix scalar_sparse(double v) {
  SparseMatrix m(1, 1);
  m.insert(0, 0) = v;
  return m;
}

TEST(Midpoint, LinearDecay) {
  MidpointStepper stepper([](const Vector& u) -> Vector { return -u; },
                          [](const Vector&) { return scalar_sparse(-1.0); }, scalar_sparse(1.0), {});
  const Vector u1 = stepper.step(Vector::Constant(1, 1.0), 0.1);
  EXPECT_NEAR(u1[0], 0.95 / 1.05, 1e-15);
  EXPECT_NEAR(u1[0], 0.9047619047619048, 1e-15);
}

TEST(Midpoint, ZeroRhsIsFixedPoint) {
  const Grid g = Grid::defaults(EquationKind::kdv);
  const Vector u = random_state(g, 4);
  MidpointStepper stepper([](const Vector& v) -> Vector { return Vector::Zero(v.size()); },
                          [n = g.n](const Vector&) {
                            SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
                            return m;
                          },
                          SparseMatrix(Eigen::MatrixXd::Identity(100, 100).sparseView()), {});
  const Vector u1 = stepper.step(u, 0.1);
  EXPECT_EQ(std::memcmp(u.data(), u1.data(), sizeof(double) * 100), 0);
}

TEST(Midpoint, NonConvergenceCarriesContext) {
  IntegratorConfig cfg;
  cfg.max_iterations = 1;
  cfg.tolerance = 1e-300;
  const Grid g = Grid::defaults(EquationKind::kdv);
  const EquationSpec eq = EquationSpec::defaults(EquationKind::kdv);
  MidpointStepper stepper(SpatialOperator(eq, g), cfg);
  Rng rng(1);
  const Vector u0 = sample_initial_condition(eq, g, rng);
  try {
    stepper.step(u0, 0.05, 12, 34);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_EQ(e.sample(), 12);
    EXPECT_EQ(e.step(), 34);
    EXPECT_GT(e.residual(), 0.0);
    EXPECT_NE(std::string(e.what()).find("12"), std::string::npos) << e.what();
  }
}

double endpoint_error(const EquationSpec& eq, const Grid& g, const Vector& u0, double horizon, std::size_t steps,
                      const Vector& reference) {
  IntegratorConfig cfg;
  cfg.substeps = 1;
  cfg.tolerance = 1e-13;
  const RowMatrix traj = generate_trajectory(eq, u0, g, horizon, horizon / static_cast<double>(steps), cfg);
  return (traj.row(traj.rows() - 1).transpose() - reference).cwiseAbs().maxCoeff();
}

TEST(Midpoint, TemporalSecondOrderCahnHilliard) {
  const EquationSpec eq = EquationSpec::defaults(EquationKind::cahn_hilliard);
  const Grid g = Grid::defaults(EquationKind::cahn_hilliard);
  const Vector u0 = evaluate_initial_condition(std::vector<ChMode>{{0.1, 0.05, 1, 2}, {0.0, 0.0, 1, 1}}, g);
  const double horizon = 0.1;
  const std::size_t coarse = 10;
  IntegratorConfig fine;
  fine.substeps = 1;
  fine.tolerance = 1e-13;
  const RowMatrix ref = generate_trajectory(eq, u0, g, horizon, horizon / (8.0 * 2 * coarse), fine);
  const Vector reference = ref.row(ref.rows() - 1).transpose();
  const double e1 = endpoint_error(eq, g, u0, horizon, coarse, reference);
  const double e2 = endpoint_error(eq, g, u0, horizon, 2 * coarse, reference);
  EXPECT_GE(e1 / e2, 3.2) << e1 << " " << e2;
  EXPECT_LE(e1 / e2, 4.8) << e1 << " " << e2;
}

TEST(Midpoint, SpatialSecondOrderLinearKdv) {
  EquationSpec eq = EquationSpec::defaults(EquationKind::kdv);
  eq.eta = 0.0;
  const double P = 10.0, k = 2.0 * std::numbers::pi / P, T = 1.0;
  std::vector<double> errors;
  for (std::size_t n : {50u, 100u}) {
    const Grid g{0.0, P, n};
    Vector u0(static_cast<Eigen::Index>(n)), exact(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      u0[static_cast<Eigen::Index>(j)] = std::sin(k * g.x(j));
      exact[static_cast<Eigen::Index>(j)] = std::sin(k * g.x(j) + eq.gamma * k * k * k * T);
    }
    IntegratorConfig cfg;
    cfg.substeps = 1;
    cfg.tolerance = 1e-13;
    const RowMatrix traj = generate_trajectory(eq, u0, g, T, 1e-3, cfg);
    errors.push_back((traj.row(traj.rows() - 1).transpose() - exact).cwiseAbs().maxCoeff());
  }
  EXPECT_GE(errors[0] / errors[1], 3.2);
  EXPECT_LE(errors[0] / errors[1], 4.8);
}

TEST(Midpoint, SpatialSecondOrderCahnHilliardSelfOracle) {
  const EquationSpec eq = EquationSpec::defaults(EquationKind::cahn_hilliard);
  const std::vector<ChMode> ic{{0.1, 0.05, 1, 2}, {0.0, 0.0, 1, 1}};
  const double T = 0.05, dt = 1e-4;
  IntegratorConfig cfg;
  cfg.substeps = 1;
  cfg.tolerance = 1e-13;
  auto final_state = [&](std::size_t n) {
    const Grid g{0.0, 1.0, n};
    const RowMatrix traj = generate_trajectory(eq, evaluate_initial_condition(ic, g), g, T, dt, cfg);
    return Vector(traj.row(traj.rows() - 1).transpose());
  };
  const Vector oracle = final_state(400);
  std::vector<double> errors;
  for (std::size_t n : {50u, 100u}) {
    const Vector u = final_state(n);
    const std::size_t stride = 400 / n;
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      err = std::max(err, std::abs(u[static_cast<Eigen::Index>(j)] - oracle[static_cast<Eigen::Index>(j * stride)]));
    }
    errors.push_back(err);
  }
  EXPECT_GE(errors[0] / errors[1], 3.2) << errors[0] << " " << errors[1];
  EXPECT_LE(errors[0] / errors[1], 4.8) << errors[0] << " " << errors[1];
}

TEST(Trajectory, KdvRowCount) {
  const EquationSpec eq = EquationSpec::defaults(EquationKind::kdv);
  const Grid g = Grid::defaults(EquationKind::kdv);
  Rng rng(2);
  const Vector u0 = sample_initial_condition(eq, g, rng);
  const RowMatrix traj = generate_trajectory(eq, u0, g, 5.0, 0.025);
  EXPECT_EQ(traj.rows(), 201);
  EXPECT_EQ(traj.cols(), 100);
  EXPECT_EQ(std::memcmp(traj.row(0).data(), u0.data(), sizeof(double) * 100), 0);
}

TEST(Trajectory, ZeroHorizonIsInitialRow) {
  const Grid g = Grid::defaults(EquationKind::kdv);
  const Vector u0 = random_state(g, 5);
  const RowMatrix traj = generate_trajectory(EquationSpec::defaults(EquationKind::kdv), u0, g, 0.0, 0.025);
  ASSERT_EQ(traj.rows(), 1);
  EXPECT_EQ(Vector(traj.row(0).transpose()), u0);
}

TEST(Trajectory, NonIntegerStepRatioIsConfigError) {
  const Grid g = Grid::defaults(EquationKind::kdv);
  EXPECT_THROW(generate_trajectory(EquationSpec::defaults(EquationKind::kdv), random_state(g, 6), g, 1.0, 0.3),
               ConfigError);
}

TEST(Trajectory, MassConservedAllEquations) {
  for (auto k : kEquations) {
    GenerationRequest req{EquationSpec::defaults(k), Grid::defaults(k), TimeSpec::defaults(k), {}, 7, "test", 0, 2};
    const TrajectorySet set = generate_dataset(req, 1);
    for (std::size_t s = 0; s < set.samples(); ++s) {
      double mean0 = 0.0;
      for (std::size_t j = 0; j < set.n_x(); ++j) mean0 += set.u(s, 0, j);
      mean0 /= static_cast<double>(set.n_x());
      for (std::size_t t = 1; t < set.n_t(); ++t) {
        double mean = 0.0;
        for (std::size_t j = 0; j < set.n_x(); ++j) mean += set.u(s, t, j);
        mean /= static_cast<double>(set.n_x());
        ASSERT_LE(std::abs(mean - mean0), 1e-8) << to_string(k) << " sample " << s << " row " << t;
      }
    }
  }
}

TEST(Trajectory, KdvSolitonTravelsAtFourKSquared) {
  const EquationSpec eq = EquationSpec::defaults(EquationKind::kdv);
  const Grid g = Grid::defaults(EquationKind::kdv);
  const Vector u0 = evaluate_initial_condition(std::vector<KdvSoliton>{{1.0, 0.5, 1.0}, {0.8, 0.1, 0.0}}, g);
  const RowMatrix traj = generate_trajectory(eq, u0, g, 0.5, 0.025);
  Eigen::Index peak = 0;
  const double amplitude = traj.row(traj.rows() - 1).maxCoeff(&peak);
  EXPECT_NEAR(static_cast<double>(peak), 70.0, 1.0);
  EXPECT_NEAR(amplitude, 2.0, 0.1);
}

TEST(Dataset, ReproducibleAndThreadIndependent) {
  GenerationRequest req{EquationSpec::defaults(EquationKind::burgers), Grid::defaults(EquationKind::burgers),
                        TimeSpec{0.5, 0.01, 5}, {}, 11, "high", 3, 4};
  const TrajectorySet a = generate_dataset(req, 1);
  const TrajectorySet b = generate_dataset(req, 1);
  const TrajectorySet c = generate_dataset(req, 3);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  req.first_index = 5;
  req.count = 1;
  const TrajectorySet d = generate_dataset(req, 1);
  for (std::size_t t = 0; t < d.n_t(); ++t) {
    for (std::size_t j = 0; j < d.n_x(); ++j) EXPECT_EQ(d.u(0, t, j), a.u(2, t, j));
  }
}

TEST(Downsample, KeepsEveryFactorRow) {
  GenerationRequest req{EquationSpec::defaults(EquationKind::kdv), Grid::defaults(EquationKind::kdv),
                        TimeSpec::defaults(EquationKind::kdv), {}, 1, "high", 0, 1};
  const TrajectorySet high = generate_dataset(req, 1);
  ASSERT_EQ(high.n_t(), 201u);
  const TrajectorySet low = downsample_time(high, 5);
  EXPECT_EQ(low.n_t(), 41u);
  EXPECT_EQ(low.resolution, Resolution::low);
  EXPECT_DOUBLE_EQ(low.dt, 0.125);
  for (std::size_t k = 0; k < low.n_t(); ++k) {
    EXPECT_EQ(low.t[k], high.t[5 * k]);
    for (std::size_t j = 0; j < low.n_x(); ++j) ASSERT_EQ(low.u(0, k, j), high.u(0, 5 * k, j));
  }
  EXPECT_TRUE(downsample_time(high, 1).u == high.u);
  EXPECT_THROW(downsample_time(high, 3), ConfigError);
  EXPECT_THROW(downsample_time(high, 0), ConfigError);
}

}  // namespace
}  // namespace operon
