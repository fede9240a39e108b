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

#include "operon/metrics.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "operon/errors.hpp"

namespace operon {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw DimensionError(fmt::format("lengths differ: {} vs {}", y.size(), y_hat.size()));
  if (y.empty()) throw DimensionError("metrics need at least one value");
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - y_hat[i]);
  return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double rse(std::span<const double> y, std::span<const double> y_hat) {
  check_lengths(y, y_hat);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    den += (y[i] - mean) * (y[i] - mean);
  }
  if (!(den > 0.0)) throw NumericError("RSE undefined for a constant target");
  return num / den;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

MetricReport evaluate_predictions(const TrajectorySet& test, const RowMatrix& prediction) {
  test.validate();
  const std::size_t frame = test.n_x();
  const std::size_t width = test.n_t() * frame;
  if (static_cast<std::size_t>(prediction.rows()) != test.samples() ||
      static_cast<std::size_t>(prediction.cols()) != width) {
    throw DimensionError(fmt::format("prediction {}x{} does not match test set {}x{}", prediction.rows(),
                                     prediction.cols(), test.samples(), width));
  }
  if (test.n_t() < 2) throw DimensionError("test trajectories need at least two time points");
  MetricReport report;
  for (std::size_t s = 0; s < test.samples(); ++s) {
    std::span<const double> y(test.u.storage().data() + s * width + frame, width - frame);
    std::span<const double> y_hat(prediction.data() + s * width + frame, width - frame);
    report.mae.push_back(mae(y, y_hat));
    report.rmse.push_back(rmse(y, y_hat));
    try {
      report.rse.push_back(rse(y, y_hat));
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("test sample {}: {}", s, e.what()));
    }
  }
  return report;
}

MetricReport evaluate_model(const Predictor& predictor, const TrajectorySet& test) {
  return evaluate_predictions(test, predictor(test.initial_conditions()));
}

MetricRow make_metric_row(const std::string& model, const std::string& resolution, std::uint64_t seed,
                          std::size_t n_high, std::size_t n_low, const MetricReport& report) {
  return {model, resolution, seed, n_high, n_low, report.mae_summary().mean, report.rmse_summary().mean,
          report.rse_summary().mean};
}

std::string format_metric_row(const MetricRow& row) {
  return fmt::format("{},{},{},{},{},{:.17g},{:.17g},{:.17g}", row.model, row.resolution, row.seed, row.n_high,
                     row.n_low, row.mae, row.rmse, row.rse);
}

MetricRow parse_metric_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (fields.size() != 8) throw FormatError(fmt::format("metrics row has {} fields, expected 8", fields.size()));
  try {
    return {fields[0], fields[1], std::stoull(fields[2]), std::stoul(fields[3]), std::stoul(fields[4]),
            std::stod(fields[5]), std::stod(fields[6]), std::stod(fields[7])};
  } catch (const std::exception&) {
    throw FormatError(fmt::format("malformed metrics row '{}'", line));
  }
}

}  // namespace operon
