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
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "operon/adaptive_loss.hpp"
#include "operon/don_lstm.hpp"
#include "operon/errors.hpp"
#include "operon/nn/adam.hpp"
#include "operon/trainer.hpp"

namespace operon {
namespace {

using testing::random_matrix;

/// y = w * u0 elementwise; the query grid only fixes the output width.
class ScalarModel : public Surrogate {
 public:
  explicit ScalarModel(nn::ParameterSet& params) : offset_(params.allocate("w", 1, 1)) {}

  RowMatrix predict(const nn::ParameterSet& params, const RowMatrix& u0, const QueryGrid&) const override {
    return params.values()[static_cast<Eigen::Index>(offset_)] * u0;
  }
  nn::ForwardResult forward_pass(const nn::ParameterSet& params, const RowMatrix& u0,
                                 const QueryGrid& grid) const override {
    nn::ForwardResult r;
    r.output = predict(params, u0, grid);
    r.pullback = [u0, off = offset_](const RowMatrix& d, Vector& g) {
      g[static_cast<Eigen::Index>(off)] += (d.array() * u0.array()).sum();
    };
    return r;
  }
  void set_trainable(nn::ParameterSet& params, TrainingStage) const override { params.set_all_trainable(true); }

 private:
  std::size_t offset_;
};

StageData toy_data(std::size_t n, double w_true, std::uint64_t seed) {
  StagePart part;
  part.label = "toy";
  part.u0 = random_matrix(n, 3, seed);
  part.target = w_true * part.u0;
  part.grid = QueryGrid({{0, 0}, {1, 0}, {2, 0}});
  return {{part}};
}

TrainingConfig small_training() {
  TrainingConfig c;
  c.batch_size = 4;
  c.lr1 = 1e-2;
  c.lr2 = 1e-3;
  c.n_freq = 5;
  return c;
}

TEST(TrainingConfig, DefaultsAndValidation) {
  TrainingConfig c;
  EXPECT_EQ(c.batch_size, 50u);
  EXPECT_EQ(c.lr1, 1e-4);
  EXPECT_EQ(c.lr2, 1e-5);
  EXPECT_EQ(c.n_freq, 100u);
  EXPECT_EQ(c.val_fraction, 0.1);
  EXPECT_NO_THROW(c.validate());
  c.lr2 = c.lr1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainingConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainingConfig{};
  c.n_freq = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunEpoch, ZeroLearningRateLeavesParams) {
  nn::ParameterSet p;
  ScalarModel m(p);
  p.values()[0] = 0.3;
  const StageData data = toy_data(10, 2.0, 1);
  nn::AdamState adam(p.size(), {0.0});
  std::vector<AdaptiveWeights> w{AdaptiveWeights(3)};
  Rng rng(1);
  const double loss = run_epoch(m, p, {"s", TrainingStage::don_pretrain, 0.0, 1, true}, data, adam, w, rng, 4);
  EXPECT_EQ(p.values()[0], 0.3);
  EXPECT_GT(loss, 0.0);
}

TEST(RunEpoch, DecreasesLossOnLinearToy) {
  nn::ParameterSet p;
  ScalarModel m(p);
  const StageData data = toy_data(12, 1.5, 2);
  nn::AdamState adam(p.size(), {1e-2});
  std::vector<AdaptiveWeights> w{AdaptiveWeights(3)};
  Rng rng(2);
  const StageSpec spec{"s", TrainingStage::don_pretrain, 1e-2, 1, true};
  const double before = validation_mse(m, p, data, 50);
  run_epoch(m, p, spec, data, adam, w, rng, 4);
  EXPECT_LT(validation_mse(m, p, data, 50), before);
}

TEST(RunEpoch, LambdasNormalizedAfterEachEpoch) {
  nn::ParameterSet p;
  ScalarModel m(p);
  StageData data = toy_data(9, -0.7, 3);
  StagePart second = toy_data(5, -0.7, 4).parts[0];
  second.u0 = random_matrix(5, 4, 5);
  second.target = -0.7 * second.u0;
  second.grid = QueryGrid({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  data.parts.push_back(second);
  nn::AdamState adam(p.size(), {1e-2});
  std::vector<AdaptiveWeights> w{AdaptiveWeights(3, 0.5), AdaptiveWeights(4, 0.5)};
  Rng rng(3);
  for (int epoch = 0; epoch < 10; ++epoch) {
    run_epoch(m, p, {"s", TrainingStage::don_pretrain, 1e-2, 1, true}, data, adam, w, rng, 2);
    EXPECT_NEAR(w[0].mask_sum(), 1.0, 1e-12);
    EXPECT_NEAR(w[1].mask_sum(), 1.0, 1e-12);
  }
  EXPECT_NE(w[0].lambdas()[0], 1.0 / std::sqrt(3.0));
}

TEST(RunEpoch, NonFiniteLossCarriesContext) {
  nn::ParameterSet p;
  ScalarModel m(p);
  StageData data = toy_data(4, 1.0, 4);
  data.parts[0].target(0, 0) = std::numeric_limits<double>::infinity();
  nn::AdamState adam(p.size(), {1e-2});
  std::vector<AdaptiveWeights> w{AdaptiveWeights(3)};
  Rng rng(4);
  try {
    run_epoch(m, p, {"step2", TrainingStage::don_pretrain, 1e-2, 1, true}, data, adam, w, rng, 4, 7);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("step2"), std::string::npos) << what;
    EXPECT_NE(what.find("epoch 7"), std::string::npos) << what;
    EXPECT_NE(what.find("batch 0"), std::string::npos) << what;
  }
}

CheckpointRecord record(std::size_t epoch, double mse) { return {epoch, mse, Vector()}; }

TEST(SelectCheckpoint, Argmin) {
  EXPECT_EQ(select_checkpoint({record(100, 0.5), record(200, 0.3), record(300, 0.4)}), 1u);
}

TEST(SelectCheckpoint, EarliestWinsTies) { EXPECT_EQ(select_checkpoint({record(100, 0.3), record(200, 0.3)}), 0u); }

TEST(SelectCheckpoint, NanNeverWins) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(select_checkpoint({record(1, nan), record(2, 0.9), record(3, nan)}), 1u);
  EXPECT_THROW(select_checkpoint({}), ConfigError);
}

TEST(TrainStage, ZeroEpochsLeavesParams) {
  nn::ParameterSet p;
  ScalarModel m(p);
  p.values()[0] = 0.25;
  const StageData data = toy_data(8, 2.0, 5);
  Rng rng(5);
  TrainingLog log;
  const StageResult r =
      train_stage(m, p, {"s", TrainingStage::don_pretrain, 1e-2, 0, true}, small_training(), data, data, rng, &log);
  EXPECT_EQ(p.values()[0], 0.25);
  EXPECT_TRUE(log.rows.empty());
  ASSERT_EQ(r.checkpoints.size(), 1u);
  EXPECT_EQ(r.best.epoch, 0u);
}

TEST(TrainStage, FinalCheckpointWhenShorterThanInterval) {
  nn::ParameterSet p;
  ScalarModel m(p);
  const StageData data = toy_data(8, 2.0, 6);
  TrainingConfig c = small_training();
  c.n_freq = 100;
  Rng rng(6);
  TrainingLog log;
  const StageResult r = train_stage(m, p, {"s", TrainingStage::don_pretrain, 1e-2, 7, true}, c, data, data, rng, &log);
  ASSERT_EQ(r.checkpoints.size(), 1u);
  EXPECT_EQ(r.checkpoints[0].epoch, 7u);
  ASSERT_EQ(log.rows.size(), 7u);
  EXPECT_TRUE(log.rows.back().checkpointed);
  EXPECT_FALSE(log.rows.front().val_mse.has_value());
}

TEST(TrainStage, RestoresBestAndReproducesItsMse) {
  nn::ParameterSet p;
  ScalarModel m(p);
  const StageData train = toy_data(16, 1.2, 7), val = toy_data(6, 1.2, 8);
  Rng rng(7);
  const StageResult r =
      train_stage(m, p, {"s", TrainingStage::don_pretrain, 5e-2, 40, true}, small_training(), train, val, rng);
  ASSERT_EQ(r.checkpoints.size(), 8u);
  const std::size_t best = select_checkpoint(r.checkpoints);
  EXPECT_EQ(r.best.epoch, r.checkpoints[best].epoch);
  EXPECT_EQ(p.values(), r.best.snapshot);
  EXPECT_EQ(validation_mse(m, p, val, small_training().batch_size), r.best.val_mse);
  for (const auto& c : r.checkpoints) EXPECT_LE(r.best.val_mse, c.val_mse);
}

TEST(TrainStage, EmptyValidationIsConfigError) {
  nn::ParameterSet p;
  ScalarModel m(p);
  Rng rng(8);
  EXPECT_THROW(train_stage(m, p, {"s", TrainingStage::don_pretrain, 1e-2, 1, true}, small_training(),
                           toy_data(4, 1.0, 9), StageData{}, rng),
               ConfigError);
}

TEST(TrainingLog, CsvRoundTrip) {
  TrainingLog log;
  log.rows.push_back({"step1", 1, 0.1234567890123456789, std::nullopt, false});
  log.rows.push_back({"step1", 2, 1.0 / 3.0, 0.2, true});
  const std::string csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "stage,epoch,train_loss,val_mse,checkpointed");
  EXPECT_NE(csv.find("step1,1,0.12345678901234568,,0\n"), std::string::npos) << csv;
  const TrainingLog back = TrainingLog::parse_csv(csv);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].train_loss, 1.0 / 3.0);
  EXPECT_EQ(*back.rows[1].val_mse, 0.2);
  EXPECT_TRUE(back.rows[1].checkpointed);
  EXPECT_FALSE(back.rows[0].val_mse.has_value());
  EXPECT_EQ(back.to_csv(), csv);
}

struct ThreeStageFixture {
  static constexpr std::size_t n_x = 8;
  nn::ParameterSet params;
  DonLstm model;
  StageData low_train, low_val, high_train, high_val;
  TrainingConfig config;

  ThreeStageFixture() : model(params, small_don(), n_x, 5) {
    Rng rng(1);
    model.initialize(params, rng);
    std::vector<double> x(n_x);
    for (std::size_t j = 0; j < n_x; ++j) x[j] = 0.1 * static_cast<double>(j);
    const std::vector<double> t_low{0.0, 0.5, 1.0}, t_high{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    low_train = part(x, t_low, 12, 1);
    low_val = part(x, t_low, 3, 2);
    high_train = part(x, t_high, 6, 3);
    high_val = part(x, t_high, 3, 4);
    config.epochs_step1 = 10;
    config.epochs_step2 = 10;
    config.epochs_step3 = 10;
    config.batch_size = 4;
    config.lr1 = 1e-2;
    config.lr2 = 1e-3;
    config.n_freq = 5;
    config.seed = 9;
  }

  static DeepONetConfig small_don() {
    DeepONetConfig c;
    c.sensors = n_x;
    c.branch_widths = {6, 4};
    c.trunk_widths = {6, 5, 4};
    return c;
  }

  static StageData part(const std::vector<double>& x, const std::vector<double>& t, std::size_t n, std::uint64_t s) {
    StagePart p;
    p.label = "part";
    p.u0 = random_matrix(n, x.size(), s);
    p.target = random_matrix(n, x.size() * t.size(), s + 50);
    p.grid = QueryGrid::tensor(x, t);
    return {{p}};
  }

  ThreeStageResult run(TrainingLog* log = nullptr) {
    return run_three_stage(model, params, config, low_train, low_val, high_train, high_val, log);
  }
};

TEST(ThreeStage, ZeroEpochsKeepsInitialization) {
  ThreeStageFixture f;
  f.config.epochs_step1 = f.config.epochs_step2 = f.config.epochs_step3 = 0;
  const Vector init = f.params.values();
  f.run();
  EXPECT_EQ(f.params.values(), init);
}

TEST(ThreeStage, DeepONetFrozenThroughStepTwo) {
  ThreeStageFixture f;
  f.config.epochs_step3 = 0;
  const ThreeStageResult r = f.run();
  const auto [b, e] = f.params.range("don.");
  const auto len = static_cast<Eigen::Index>(e - b);
  const Vector step1 = r.step1.best.snapshot.segment(static_cast<Eigen::Index>(b), len);
  const Vector step2 = r.step2.best.snapshot.segment(static_cast<Eigen::Index>(b), len);
  EXPECT_EQ(std::memcmp(step1.data(), step2.data(), sizeof(double) * step1.size()), 0);
  for (const auto& c : r.step2.checkpoints) {
    EXPECT_EQ(std::memcmp(step1.data(), c.snapshot.data() + b, sizeof(double) * step1.size()), 0);
  }
  EXPECT_NE(r.step2.best.snapshot.tail(static_cast<Eigen::Index>(f.params.size() - e)),
            r.step1.best.snapshot.tail(static_cast<Eigen::Index>(f.params.size() - e)));
}

TEST(ThreeStage, LstmFrozenDuringStepOne) {
  ThreeStageFixture f;
  const Vector init = f.params.values();
  f.config.epochs_step2 = f.config.epochs_step3 = 0;
  f.run();
  const auto [b, e] = f.params.range("don.");
  EXPECT_EQ(f.params.values().tail(static_cast<Eigen::Index>(f.params.size() - e)),
            init.tail(static_cast<Eigen::Index>(f.params.size() - e)));
  EXPECT_NE(f.params.values().head(static_cast<Eigen::Index>(e)), init.head(static_cast<Eigen::Index>(e)));
  EXPECT_EQ(b, 0u);
}

TEST(ThreeStage, LogHasStagesInOrder) {
  ThreeStageFixture f;
  TrainingLog log;
  f.run(&log);
  ASSERT_EQ(log.rows.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(log.rows[i].stage, i < 10 ? "step1" : i < 20 ? "step2" : "step3");
    EXPECT_EQ(log.rows[i].epoch, i % 10 + 1);
    EXPECT_EQ(log.rows[i].checkpointed, log.rows[i].epoch % 5 == 0);
  }
}

TEST(ThreeStage, Deterministic) {
  ThreeStageFixture a, b;
  TrainingLog la, lb;
  a.run(&la);
  b.run(&lb);
  EXPECT_EQ(la.to_csv(), lb.to_csv());
  EXPECT_EQ(std::memcmp(a.params.values().data(), b.params.values().data(), sizeof(double) * a.params.size()), 0);
}

TEST(ThreeStage, IncompatibleGridsRejectedBeforeTraining) {
  ThreeStageFixture f;
  const Vector init = f.params.values();
  f.high_train.parts[0].grid = QueryGrid::tensor({0, 1, 2, 3, 4, 5, 6, 7}, {0.0, 0.1, 0.3});
  EXPECT_THROW(f.run(), ConfigError);
  EXPECT_EQ(f.params.values(), init);

  ThreeStageFixture g;
  std::vector<double> x(8);
  for (std::size_t j = 0; j < 8; ++j) x[j] = 0.1 * static_cast<double>(j);
  g.low_train.parts[0].grid = QueryGrid::tensor(x, {0.0, 0.15, 0.3});
  EXPECT_THROW(g.run(), ConfigError);

  ThreeStageFixture h;
  h.low_train.parts[0].grid = QueryGrid::tensor({0, 1, 2, 3, 4, 5, 6, 7}, {0.0, 0.5, 1.0});
  EXPECT_THROW(h.run(), ConfigError);
}

TEST(ThreeStage, RejectsLr2NotBelowLr1) {
  ThreeStageFixture f;
  f.config.lr2 = f.config.lr1;
  EXPECT_THROW(f.run(), ConfigError);
}

}  // namespace
}  // namespace operon
