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

#include "operon/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "operon/errors.hpp"
#include "operon/pde.hpp"
#include "operon/nn/gradcheck.hpp"

namespace operon {

void TrainingConfig::validate() const {
  if (batch_size < 1) throw ConfigError("training.batch_size must be at least 1");
  if (n_freq < 1) throw ConfigError("training.n_freq must be at least 1");
  if (!(lr1 > 0.0)) throw ConfigError("training.lr1 must be positive");
  if (!(lr2 >= 0.0) || !(lr2 < lr1)) throw ConfigError(fmt::format("training.lr2 ({}) must be below lr1 ({})", lr2, lr1));
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("training.val_fraction must lie in (0, 1)");
  if (!(lambda_eta >= 0.0)) throw ConfigError("training.lambda_eta must be non-negative");
}

std::size_t StageData::samples() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.samples();
  return n;
}

std::string TrainingLog::to_csv() const {
  std::string out = std::string(kTrainingLogHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.17g},{},{}\n", r.stage, r.epoch, r.train_loss,
                       r.val_mse ? fmt::format("{:.17g}", *r.val_mse) : std::string(), r.checkpointed ? 1 : 0);
  }
  return out;
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot open {} for writing", path.string()));
  out << to_csv();
  if (!out) throw FormatError(fmt::format("write to {} failed", path.string()));
}

TrainingLog TrainingLog::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrainingLogHeader) throw FormatError("training log: missing header");
  TrainingLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw FormatError(fmt::format("training log: malformed row '{}'", line));
    LogRow r;
    r.stage = f[0];
    r.epoch = std::stoul(f[1]);
    r.train_loss = std::stod(f[2]);
    if (!f[3].empty()) r.val_mse = std::stod(f[3]);
    r.checkpointed = f[4] == "1";
    log.rows.push_back(r);
  }
  return log;
}

std::size_t select_checkpoint(const std::vector<CheckpointRecord>& records) {
  if (records.empty()) throw ConfigError("no checkpoints to select from");
  std::size_t best = 0;
  double best_mse = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double v = records[i].val_mse;
    if (std::isnan(v)) continue;
    if (!found || v < best_mse) {
      best = i;
      best_mse = v;
      found = true;
    }
  }
  return best;
}

namespace {

RowMatrix gather_rows(const RowMatrix& m, const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end) {
  RowMatrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

struct Batch {
  std::size_t part;
  std::vector<std::size_t> rows;
};

}  // namespace

double validation_mse(const Surrogate& model, const nn::ParameterSet& params, const StageData& data,
                      std::size_t batch_size) {
  double total = 0.0;
  double count = 0.0;
  for (const auto& part : data.parts) {
    for (std::size_t begin = 0; begin < part.samples(); begin += batch_size) {
      const auto n = static_cast<Eigen::Index>(std::min(batch_size, part.samples() - begin));
      const auto b = static_cast<Eigen::Index>(begin);
      const RowMatrix pred = model.predict(params, part.u0.middleRows(b, n), part.grid);
      total += (pred - part.target.middleRows(b, n)).squaredNorm();
      count += static_cast<double>(pred.size());
    }
  }
  if (count == 0.0) throw ConfigError("validation set is empty");
  return total / count;
}

double run_epoch(const Surrogate& model, nn::ParameterSet& params, const StageSpec& spec, const StageData& data,
                 nn::AdamState& optimizer, std::vector<AdaptiveWeights>& weights, Rng& rng, std::size_t batch_size,
                 std::size_t epoch) {
  if (data.empty()) throw ConfigError(fmt::format("stage {}: no training samples", spec.name));
  if (spec.adaptive && weights.size() != data.parts.size()) {
    throw ConfigError("run_epoch: one set of adaptive weights per data part is required");
  }
  std::vector<Batch> batches;
  for (std::size_t p = 0; p < data.parts.size(); ++p) {
    std::vector<std::size_t> order(data.parts[p].samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batches.push_back({p, std::vector<std::size_t>(order.begin() + static_cast<long>(begin),
                                                     order.begin() + static_cast<long>(end))});
    }
  }
  rng.shuffle(std::span<Batch>(batches));

  double loss_sum = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const StagePart& part = data.parts[batches[b].part];
    const RowMatrix u0 = gather_rows(part.u0, batches[b].rows, 0, batches[b].rows.size());
    const RowMatrix target = gather_rows(part.target, batches[b].rows, 0, batches[b].rows.size());
    AdaptiveWeights* w = spec.adaptive ? &weights[batches[b].part] : nullptr;
    nn::GradientResult g;
    try {
      g = nn::compute_gradients([&](const nn::ParameterSet& p) { return model.forward_pass(p, u0, part.grid); },
                                params,
                                [&](const RowMatrix& pred) {
                                  return w ? adaptive_loss_eval(pred, target, *w) : mse_eval(pred, target);
                                },
                                b);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("stage {}, epoch {}: {}", spec.name, epoch, e.what()));
    }
    optimizer.step(params, g.gradient);
    if (w) update_lambdas(*w, g.output, target);
    loss_sum += g.loss;
  }
  if (spec.adaptive) {
    for (auto& w : weights) normalize_lambdas(w);
  }
  return loss_sum / static_cast<double>(batches.size());
}

StageResult train_stage(const Surrogate& model, nn::ParameterSet& params, const StageSpec& spec,
                        const TrainingConfig& config, const StageData& train, const StageData& val, Rng& rng,
                        TrainingLog* log) {
  if (val.empty()) throw ConfigError(fmt::format("stage {}: validation set is empty", spec.name));
  nn::AdamConfig adam;
  adam.learning_rate = spec.learning_rate;
  nn::AdamState optimizer(params.size(), adam);
  std::vector<AdaptiveWeights> weights;
  for (const auto& part : train.parts) {
    weights.emplace_back(static_cast<std::size_t>(part.target.cols()), config.lambda_eta);
  }

  StageResult result;
  auto checkpoint = [&](std::size_t epoch) {
    CheckpointRecord rec;
    rec.epoch = epoch;
    rec.val_mse = validation_mse(model, params, val, config.batch_size);
    rec.snapshot = params.values();
    result.checkpoints.push_back(std::move(rec));
    return result.checkpoints.back().val_mse;
  };

  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    const double loss = run_epoch(model, params, spec, train, optimizer, weights, rng, config.batch_size, epoch);
    LogRow row{spec.name, epoch, loss, std::nullopt, false};
    if (epoch % config.n_freq == 0 || (epoch == spec.epochs && result.checkpoints.empty())) {
      row.val_mse = checkpoint(epoch);
      row.checkpointed = true;
    }
    if (log) log->rows.push_back(row);
  }
  if (result.checkpoints.empty()) checkpoint(0);

  result.best = result.checkpoints[select_checkpoint(result.checkpoints)];
  params.values() = result.best.snapshot;
  return result;
}

ThreeStageResult run_three_stage(const DonLstm& model, nn::ParameterSet& params, const TrainingConfig& config,
                                 const StageData& step1_train, const StageData& step1_val,
                                 const StageData& refine_train, const StageData& refine_val, TrainingLog* log) {
  config.validate();
  for (const auto* d : {&refine_train, &refine_val}) {
    for (const auto& part : d->parts) {
      require_uniform_time(part.grid);
      if (part.grid.n_x() != model.n_x()) {
        throw ConfigError(fmt::format("part '{}' has {} spatial points, model expects {}", part.label,
                                      part.grid.n_x(), model.n_x()));
      }
    }
  }
  const QueryGrid* reference = nullptr;
  for (const auto* d : {&refine_train, &refine_val}) {
    if (!d->parts.empty()) reference = &d->parts.front().grid;
  }
  for (const auto* d : {&step1_train, &step1_val}) {
    for (const auto& part : d->parts) {
      if (!part.grid.is_tensor() || !reference) continue;
      const auto n_x = static_cast<std::ptrdiff_t>(part.grid.n_x());
      if (part.grid.n_x() != model.n_x() ||
          !std::equal(part.grid.xs().begin(), part.grid.xs().begin() + n_x, reference->xs().begin())) {
        throw ConfigError(fmt::format("part '{}' does not share the spatial grid", part.label));
      }
      const auto coarse = part.grid.times();
      const auto fine = reference->times();
      if (coarse.size() > 1 && fine.size() > 1) {
        exact_ratio(coarse[1] - coarse[0], fine[1] - fine[0], "step 1 time step / refinement time step");
      }
    }
  }

  ThreeStageResult result;
  Rng rng1 = Rng::stream(config.seed, "batches", 1);
  model.set_trainable(params, TrainingStage::don_pretrain);
  result.step1 = train_stage(model.deeponet(), params,
                             {"step1", TrainingStage::don_pretrain, config.lr1, config.epochs_step1, config.adaptive},
                             config, step1_train, step1_val, rng1, log);

  Rng rng2 = Rng::stream(config.seed, "batches", 2);
  model.set_trainable(params, TrainingStage::lstm_only);
  result.step2 = train_stage(model, params,
                             {"step2", TrainingStage::lstm_only, config.lr1, config.epochs_step2, config.adaptive},
                             config, refine_train, refine_val, rng2, log);

  Rng rng3 = Rng::stream(config.seed, "batches", 3);
  model.set_trainable(params, TrainingStage::joint_finetune);
  result.step3 = train_stage(model, params,
                             {"step3", TrainingStage::joint_finetune, config.lr2, config.epochs_step3, config.adaptive},
                             config, refine_train, refine_val, rng3, log);
  return result;
}

}  // namespace operon
