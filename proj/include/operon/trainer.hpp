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
#include <vector>

#include "operon/adaptive_loss.hpp"
#include "operon/deeponet.hpp"
#include "operon/don_lstm.hpp"
#include "operon/nn/adam.hpp"
#include "operon/nn/parameters.hpp"
#include "operon/rng.hpp"
#include "operon/surrogate.hpp"

namespace operon {

struct TrainingConfig {
  std::size_t epochs_step1 = 25000;
  std::size_t epochs_step2 = 500;
  std::size_t epochs_step3 = 500;
  std::size_t batch_size = 50;
  double lr1 = 1e-4;
  double lr2 = 1e-5;
  std::size_t n_freq = 100;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  bool adaptive = true;
  double lambda_eta = 1e-3;

  void validate() const;
};

/// Training samples on one query grid: scaled branch inputs and scaled
/// flattened targets.
struct StagePart {
  std::string label;
  RowMatrix u0;
  RowMatrix target;
  QueryGrid grid;

  std::size_t samples() const { return static_cast<std::size_t>(u0.rows()); }
};

/// One or more resolution parts trained together; each part keeps its own
/// adaptive weights.
struct StageData {
  std::vector<StagePart> parts;

  std::size_t samples() const;
  bool empty() const { return samples() == 0; }
};

struct StageSpec {
  std::string name;
  TrainingStage stage = TrainingStage::don_pretrain;
  double learning_rate = 1e-4;
  std::size_t epochs = 0;
  bool adaptive = true;
};

struct CheckpointRecord {
  std::size_t epoch = 0;
  double val_mse = 0.0;
  Vector snapshot;
};

struct LogRow {
  std::string stage;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_mse;
  bool checkpointed = false;
};

inline constexpr const char* kTrainingLogHeader = "stage,epoch,train_loss,val_mse,checkpointed";

struct TrainingLog {
  std::vector<LogRow> rows;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static TrainingLog parse_csv(const std::string& text);
};

/// Index of the lowest validation MSE; the earliest wins ties, NaN never wins.
std::size_t select_checkpoint(const std::vector<CheckpointRecord>& records);

/// Unweighted mean squared error of the model over every part.
double validation_mse(const Surrogate& model, const nn::ParameterSet& params, const StageData& data,
                      std::size_t batch_size);

/// One pass over the data: shuffled minibatches, Adam updates on the
/// trainable entries, lambda ascent after each batch and lambda
/// normalization at the end. `weights` holds one entry per part. Returns the
/// mean batch loss.
double run_epoch(const Surrogate& model, nn::ParameterSet& params, const StageSpec& spec, const StageData& data,
                 nn::AdamState& optimizer, std::vector<AdaptiveWeights>& weights, Rng& rng, std::size_t batch_size,
                 std::size_t epoch = 0);

struct StageResult {
  CheckpointRecord best;
  std::vector<CheckpointRecord> checkpoints;
};

/// Trains for spec.epochs with a fresh optimizer and fresh adaptive weights,
/// checkpoints every n_freq epochs and restores the best checkpoint. The
/// trainable mask must already be set for the stage.
StageResult train_stage(const Surrogate& model, nn::ParameterSet& params, const StageSpec& spec,
                        const TrainingConfig& config, const StageData& train, const StageData& val, Rng& rng,
                        TrainingLog* log = nullptr);

struct ThreeStageResult {
  StageResult step1;
  StageResult step2;
  StageResult step3;
};

/// Step 1: DeepONet on `step1_*`; step 2: DeepONet frozen, LSTM and head on
/// `refine_*` at lr1; step 3: everything on `refine_*` at lr2.
ThreeStageResult run_three_stage(const DonLstm& model, nn::ParameterSet& params, const TrainingConfig& config,
                                 const StageData& step1_train, const StageData& step1_val,
                                 const StageData& refine_train, const StageData& refine_val,
                                 TrainingLog* log = nullptr);

}  // namespace operon
