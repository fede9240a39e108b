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
#include <vector>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "operon/errors.hpp"
#include "operon/metrics.hpp"

namespace operon {
namespace {

using V = std::vector<double>;

TEST(Mae, Examples) {
  EXPECT_EQ(mae(V{1, 2, 3}, V{1, 2, 3}), 0.0);
  EXPECT_EQ(mae(V{1, 2}, V{2, 2}), 0.5);
  EXPECT_EQ(mae(V{0, 0, 0}, V{1, -1, 1}), 1.0);
}

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse(V{4, 5}, V{4, 5}), 0.0);
  EXPECT_EQ(rmse(V{0, 0}, V{1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(rmse(V{0, 0}, V{3, 4}), 3.5355339059327378);
}

TEST(Rse, Examples) {
  EXPECT_EQ(rse(V{1, 2, 3}, V{1, 2, 3}), 0.0);
  EXPECT_EQ(rse(V{1, 2, 3}, V{2, 2, 2}), 1.0);
  EXPECT_EQ(rse(V{1, 2, 3}, V{1, 1, 3}), 0.5);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(mae(V{1, 2}, V{1}), DimensionError);
  EXPECT_THROW(rmse(V{}, V{}), DimensionError);
  EXPECT_THROW(rse(V{2, 2, 2}, V{1, 2, 3}), NumericError);
}

TEST(Rse, AffineInvariance) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RowMatrix y = testing::random_matrix(1, 30, seed, -2.0, 2.0);
    const RowMatrix yh = testing::random_matrix(1, 30, seed + 1000, -2.0, 2.0);
    const RowMatrix ab = testing::random_matrix(1, 2, seed + 2000, -5.0, 5.0);
    const double a = std::abs(ab(0, 0)) < 0.1 ? 1.0 : ab(0, 0), b = ab(0, 1);
    V y1(y.data(), y.data() + 30), h1(yh.data(), yh.data() + 30), y2, h2;
    for (std::size_t i = 0; i < 30; ++i) {
      y2.push_back(a * y1[i] + b);
      h2.push_back(a * h1[i] + b);
    }
    EXPECT_NEAR(rse(y2, h2), rse(y1, h1), 1e-12 * rse(y1, h1));
  }
}

TEST(Metrics, RmseDominatesMae) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RowMatrix y = testing::random_matrix(1, 17, seed, -3.0, 3.0);
    const RowMatrix yh = testing::random_matrix(1, 17, seed + 500, -3.0, 3.0);
    const V a(y.data(), y.data() + 17), b(yh.data(), yh.data() + 17);
    EXPECT_GE(rmse(a, b), mae(a, b));
    EXPECT_GE(mae(a, b), 0.0);
    EXPECT_GE(rse(a, b), 0.0);
  }
}

TEST(Summarize, PopulationStdev) {
  const Summary s = summarize(V{2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.stdev, 2.0);
  const Summary same = summarize(V{0.3, 0.3, 0.3, 0.3});
  EXPECT_EQ(same.stdev, 0.0);
  EXPECT_EQ(summarize(V{1.5}).stdev, 0.0);
}

TrajectorySet small_test_set() {
  TrajectorySet s;
  s.dt = 1.0;
  s.dx = 1.0;
  s.x = {0, 1, 2};
  s.t = {0, 1, 2};
  s.u = Tensor({2, 3, 3});
  const RowMatrix m = testing::random_matrix(1, 18, 9, -1.0, 1.0);
  std::copy(m.data(), m.data() + 18, s.u.data().begin());
  return s;
}

TEST(Evaluate, IdentityModelScoresZero) {
  const TrajectorySet s = small_test_set();
  const MetricReport r = evaluate_model([&](const RowMatrix&) { return s.flat(); }, s);
  ASSERT_EQ(r.samples(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.mae[i], 0.0);
    EXPECT_EQ(r.rmse[i], 0.0);
    EXPECT_EQ(r.rse[i], 0.0);
  }
}

TEST(Evaluate, MeanPredictorScoresOne) {
  const TrajectorySet s = small_test_set();
  RowMatrix pred = s.flat();
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double mean = pred.row(i).tail(6).mean();
    pred.row(i).tail(6).setConstant(mean);
    pred.row(i).head(3).setConstant(1e6);
  }
  const MetricReport r = evaluate_predictions(s, pred);
  EXPECT_NEAR(r.rse_summary().mean, 1.0, 1e-15);
  EXPECT_NEAR(r.rse_summary().stdev, 0.0, 1e-15);
}

TEST(Evaluate, InitialFrameExcluded) {
  const TrajectorySet s = small_test_set();
  RowMatrix pred = s.flat();
  pred.row(0).head(3).array() += 5.0;
  pred(1, 8) += 2.0;
  const MetricReport r = evaluate_predictions(s, pred);
  EXPECT_EQ(r.mae[0], 0.0);
  EXPECT_DOUBLE_EQ(r.mae[1], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.rmse[1], std::sqrt(4.0 / 6.0));
}

TEST(Evaluate, ShapeMismatchAndConstantSample) {
  TrajectorySet s = small_test_set();
  EXPECT_THROW(evaluate_predictions(s, RowMatrix::Zero(2, 8)), DimensionError);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 3; ++j) s.u(1, t, j) = 0.5;
  }
  try {
    evaluate_predictions(s, s.flat());
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
  }
}

TEST(MetricCsv, RowRoundTrip) {
  MetricReport r;
  r.mae = {0.1, 0.3};
  r.rmse = {0.2, 0.4};
  r.rse = {0.01, 0.03};
  const MetricRow row = make_metric_row("donlstm_multi", "high", 4, 100, 400, r);
  EXPECT_DOUBLE_EQ(row.mae, 0.2);
  EXPECT_DOUBLE_EQ(row.rse, 0.02);
  const std::string line = format_metric_row(row);
  EXPECT_EQ(line.rfind("donlstm_multi,high,4,100,400,", 0), 0u) << line;
  const MetricRow back = parse_metric_row(line);
  EXPECT_EQ(back.model, row.model);
  EXPECT_EQ(back.seed, 4u);
  EXPECT_EQ(back.n_low, 400u);
  EXPECT_EQ(back.mae, row.mae);
  EXPECT_EQ(back.rmse, row.rmse);
  EXPECT_EQ(back.rse, row.rse);
  EXPECT_EQ(std::string(kMetricsCsvHeader), "model,resolution,seed,N_H,N_L,mae,rmse,rse");
  EXPECT_THROW(parse_metric_row("a,b,c"), FormatError);
  EXPECT_THROW(parse_metric_row("m,high,x,1,2,0.1,0.2,0.3"), FormatError);
}

}  // namespace
}  // namespace operon
