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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "operon/tensor.hpp"
#include "operon/trajectory.hpp"

namespace operon {

double mae(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
/// sum (y - y_hat)^2 / sum (y - mean(y))^2.
double rse(std::span<const double> y, std::span<const double> y_hat);

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;
};
/// Mean and population standard deviation.
Summary summarize(std::span<const double> values);

struct MetricReport {
  std::vector<double> mae;
  std::vector<double> rmse;
  std::vector<double> rse;

  std::size_t samples() const { return rse.size(); }
  Summary mae_summary() const { return summarize(mae); }
  Summary rmse_summary() const { return summarize(rmse); }
  Summary rse_summary() const { return summarize(rse); }
};

/// Maps physical-unit initial conditions [N x n_x] to physical-unit
/// trajectories [N x (n_t*n_x)] on the test grid.
using Predictor = std::function<RowMatrix(const RowMatrix& u0)>;

/// Per-sample metrics over frames 1 .. n_t-1 (frame 0 is the model input).
MetricReport evaluate_predictions(const TrajectorySet& test, const RowMatrix& prediction);
MetricReport evaluate_model(const Predictor& predictor, const TrajectorySet& test);

struct MetricRow {
  std::string model;
  std::string resolution;
  std::uint64_t seed = 0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double rse = 0.0;
};

inline constexpr const char* kMetricsCsvHeader = "model,resolution,seed,N_H,N_L,mae,rmse,rse";

MetricRow make_metric_row(const std::string& model, const std::string& resolution, std::uint64_t seed,
                          std::size_t n_high, std::size_t n_low, const MetricReport& report);
std::string format_metric_row(const MetricRow& row);
MetricRow parse_metric_row(const std::string& line);

}  // namespace operon
