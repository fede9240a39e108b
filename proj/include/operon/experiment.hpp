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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "operon/deeponet.hpp"
#include "operon/don_lstm.hpp"
#include "operon/metrics.hpp"
#include "operon/pde.hpp"
#include "operon/scaler.hpp"
#include "operon/trainer.hpp"
#include "operon/trajectory.hpp"

namespace operon {

enum class Variant { don_low, don_high, don_multi, lstm_high, donlstm_high, donlstm_multi };

std::string to_string(Variant v);
/// ConfigError listing the six valid names on failure.
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();
bool uses_low(Variant v);
bool uses_high(Variant v);

struct DataConfig {
  std::size_t n_high = 250;
  std::size_t n_low = 1000;
  std::size_t n_test = 1000;
};

struct ModelConfig {
  DeepONetConfig deeponet;
  std::size_t hidden = 200;
};

struct ExperimentConfig {
  EquationSpec equation;
  Grid grid;
  TimeSpec time;
  IntegratorConfig integrator;
  /// Accept a low/high step ratio other than 5.
  bool allow_any_low_ratio = false;
  DataConfig data;
  ModelConfig model;
  TrainingConfig training;
  Variant variant = Variant::donlstm_multi;
  std::vector<std::uint64_t> seeds{0};
  /// N_H values for sweeps, with N_L = low_per_high * N_H.
  std::vector<std::size_t> sweep_n_high{25, 50, 100};
  std::size_t low_per_high = 4;
  std::string data_dir = "data";

  static ExperimentConfig defaults(EquationKind kind);
  /// Widths divided by 10, LSTM hidden 20, N_L=200, N_H=50, N_test=50,
  /// 500 epochs per stage.
  void apply_desk();
  void validate() const;
};

/// Parses a JSON config; every omitted field takes its default. Unknown keys
/// and invalid values raise ConfigError naming the field path.
ExperimentConfig parse_config(const std::string& json_text, bool desk = false);
ExperimentConfig load_config(const std::filesystem::path& path, bool desk = false);
std::string config_to_json(const ExperimentConfig& config);

struct Datasets {
  TrajectorySet high;
  TrajectorySet low;
  TrajectorySet test;
};

/// D_H, D_L and the test set from per-role RNG streams: sample i of a role
/// depends only on (seed, role, i), so smaller sets nest inside larger ones.
/// D_L is integrated at the high resolution and downsampled.
Datasets generate_datasets(const ExperimentConfig& config, std::uint64_t seed, std::size_t threads = 0);

/// First n_high / n_low samples of a larger generated set.
Datasets subset_datasets(const Datasets& full, std::size_t n_high, std::size_t n_low);

/// A trained network plus everything needed to apply it to raw data.
class TrainedModel {
 public:
  TrainedModel() = default;
  /// Builds the network structure with zero parameters.
  TrainedModel(Variant variant, const ModelConfig& model, std::size_t n_x, std::size_t n_t_high);

  Variant variant() const { return variant_; }
  const ModelConfig& model_config() const { return model_; }
  std::size_t n_x() const { return n_x_; }
  std::size_t n_t_high() const { return n_t_high_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const Surrogate& network() const;
  const DeepONet* deeponet() const;
  const DonLstm* donlstm() const { return std::get_if<DonLstm>(&net_); }
  const LstmBaseline* lstm_baseline() const { return std::get_if<LstmBaseline>(&net_); }

  const Scaler& branch_scaler() const { return branch_scaler_; }
  const Scaler& target_scaler() const { return target_scaler_; }
  void set_scalers(const Scaler& branch, const Scaler& target, const Scaler& x, const Scaler& t);
  const Scaler& x_scaler() const;
  const Scaler& t_scaler() const;

  /// Physical-unit prediction [N x (n_t*n_x)] on the tensor grid (x, t).
  RowMatrix predict(const RowMatrix& u0, const std::vector<double>& x, const std::vector<double>& t,
                    std::size_t batch_size = 50) const;
  Predictor predictor(const std::vector<double>& x, const std::vector<double>& t) const;

  /// Standalone DeepONet holding the DeepONet part of a DON-LSTM.
  TrainedModel deeponet_only(Variant as) const;

  std::uint64_t seed = 0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  EquationKind equation = EquationKind::kdv;

 private:
  Variant variant_ = Variant::don_low;
  ModelConfig model_;
  std::size_t n_x_ = 0;
  std::size_t n_t_high_ = 0;
  nn::ParameterSet params_;
  std::variant<DeepONet, LstmBaseline, DonLstm> net_;
  Scaler branch_scaler_ = Scaler::identity(FitDomain::branch_input);
  Scaler target_scaler_ = Scaler::identity(FitDomain::target);
};

struct TrainOutcome {
  TrainedModel model;
  TrainingLog log;
  /// For DON-LSTM variants: the DeepONet at the end of Step 1.
  std::optional<TrainedModel> step1;
};

/// Trains one variant. Scalers are fitted on the first stage's training
/// split and kept for the later stages; validation samples come from a
/// seeded split of each training set.
TrainOutcome train_variant(const ExperimentConfig& config, Variant variant, const TrajectorySet& high,
                           const TrajectorySet& low, std::uint64_t seed);

MetricReport evaluate(const TrainedModel& model, const TrajectorySet& test);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace operon
