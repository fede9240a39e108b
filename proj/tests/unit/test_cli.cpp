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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "operon/dataset.hpp"
#include "operon/metrics.hpp"

namespace operon {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(OPERON_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  Result r;
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("operon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.json") << R"({"equation":"kdv","desk":true,
      "data":{"n_high":5,"n_low":10,"n_test":3},
      "training":{"epochs_step1":4,"epochs_step2":2,"epochs_step3":2,"n_freq":2}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config() const { return "--config " + (dir_ / "config.json").string(); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, GenerateWritesFilesAndManifest) {
  const Result r = run("generate " + config() + " --seed 3 --out " + path("data"));
  ASSERT_EQ(r.code, 0) << r.output;
  const TrajectorySet high = read_dataset(path("data/train_high.donl"));
  const TrajectorySet low = read_dataset(path("data/train_low.donl"));
  EXPECT_EQ(high.n_t(), 201u);
  EXPECT_EQ(high.n_x(), 100u);
  EXPECT_EQ(low.n_t(), 41u);
  EXPECT_EQ(low.n_x(), 100u);
  EXPECT_EQ(high.samples(), 5u);
  EXPECT_EQ(low.samples(), 10u);
  const auto manifest = nlohmann::json::parse(read_text(path("data/manifest.json")));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["equation"], "kdv");
  EXPECT_EQ(manifest["checksums"]["train_low.donl"], sha256_file(path("data/train_low.donl")));
}

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate " + config() + " --seed 1 --out " + path("a")).code, 0);
  ASSERT_EQ(run("generate " + config() + " --seed 1 --out " + path("b")).code, 0);
  EXPECT_EQ(read_text(path("a/manifest.json")), read_text(path("b/manifest.json")));
  for (const char* f : {"train_high.donl", "train_low.donl", "test.donl"}) {
    EXPECT_EQ(sha256_file(dir_ / "a" / f), sha256_file(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, LowRatioRejectedBeforeGeneration) {
  std::ofstream(dir_ / "bad.json") << R"({"equation":"kdv","time":{"dt_low":0.05}})";
  const Result r = run("generate --config " + path("bad.json") + " --out " + path("never"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("time.dt_low"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(path("never")));
}

TEST_F(Cli, TrainEvaluateAppendsRows) {
  ASSERT_EQ(run("generate " + config() + " --out " + path("data")).code, 0);
  const Result t = run("train " + config() + " --data " + path("data") +
                       " --variant don_low --variant donlstm_multi --seed 2 --out " + path("runs"));
  ASSERT_EQ(t.code, 0) << t.output;
  const std::string log = read_text(path("runs/donlstm_multi_seed2.log.csv"));
  EXPECT_EQ(log.rfind("stage,epoch,train_loss,val_mse,checkpointed\n", 0), 0u);
  const auto s1 = log.find("\nstep1,"), s2 = log.find("\nstep2,"), s3 = log.find("\nstep3,");
  ASSERT_NE(s3, std::string::npos);
  EXPECT_LT(s1, s2);
  EXPECT_LT(s2, s3);

  const std::string eval = "evaluate " + config() + " --model " + path("runs/don_low_seed2.model.json") +
                           " --model " + path("runs/donlstm_multi_seed2.model.json") + " --test " +
                           path("data/test.donl") + " --out " + path("metrics.csv");
  const Result e1 = run(eval);
  ASSERT_EQ(e1.code, 0) << e1.output;
  EXPECT_NE(e1.output.find("RSE"), std::string::npos);
  const Result e2 = run(eval);
  ASSERT_EQ(e2.code, 0) << e2.output;
  std::istringstream csv(read_text(path("metrics.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kMetricsCsvHeader);
  std::vector<MetricRow> rows;
  while (std::getline(csv, line)) rows.push_back(parse_metric_row(line));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].model, "don_low");
  EXPECT_EQ(rows[0].resolution, "low");
  EXPECT_EQ(rows[1].model, "donlstm_multi");
  EXPECT_EQ(rows[1].seed, 2u);
  EXPECT_EQ(rows[1].n_high, 5u);
  EXPECT_EQ(rows[1].n_low, 10u);
  EXPECT_EQ(format_metric_row(rows[0]), format_metric_row(rows[2]));
}

TEST_F(Cli, TrainIsIdempotent) {
  ASSERT_EQ(run("generate " + config() + " --out " + path("data")).code, 0);
  const std::string train = "train " + config() + " --data " + path("data") + " --variant don_high --seed 0 --out ";
  ASSERT_EQ(run(train + path("r1")).code, 0);
  ASSERT_EQ(run(train + path("r2")).code, 0);
  EXPECT_EQ(read_text(path("r1/don_high_seed0.model.json")), read_text(path("r2/don_high_seed0.model.json")));
  EXPECT_EQ(read_text(path("r1/don_high_seed0.log.csv")), read_text(path("r2/don_high_seed0.log.csv")));
}

TEST_F(Cli, ChecksumMismatchRefusesToTrain) {
  ASSERT_EQ(run("generate " + config() + " --out " + path("data")).code, 0);
  {
    std::fstream f(path("data/train_high.donl"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  const Result r = run("train " + config() + " --data " + path("data") + " --variant don_high --out " + path("runs"));
  EXPECT_EQ(r.code, 4) << r.output;
  EXPECT_NE(r.output.find("checksum"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(path("runs/don_high_seed0.model.json")));
}

TEST_F(Cli, UnknownVariantListsNames) {
  const Result r = run("train " + config() + " --variant transformer --out " + path("runs"));
  EXPECT_EQ(r.code, 2) << r.output;
  for (const char* n : {"don_low", "don_high", "don_multi", "lstm_high", "donlstm_high", "donlstm_multi"}) {
    EXPECT_NE(r.output.find(n), std::string::npos) << n;
  }
  EXPECT_FALSE(fs::exists(path("runs")));
}

TEST_F(Cli, ConfigAndUsageErrorsExitTwo) {
  std::ofstream(dir_ / "typo.json") << R"({"equation":"kdv","training":{"epoch":3}})";
  const Result r = run("generate --config " + path("typo.json") + " --out " + path("x"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("training.epoch"), std::string::npos) << r.output;
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("generate --seed notanumber").code, 2);
}

TEST_F(Cli, MissingFilesExitFour) {
  EXPECT_EQ(run("train " + config() + " --data " + path("nowhere") + " --variant don_low").code, 4);
  EXPECT_EQ(run("evaluate " + config() + " --model " + path("none.model.json") + " --test " + path("none.donl")).code,
            4);
  EXPECT_EQ(run("generate --config " + path("absent.json")).code, 4);
}

}  // namespace
}  // namespace operon
