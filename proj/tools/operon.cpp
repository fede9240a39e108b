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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "operon/dataset.hpp"
#include "operon/errors.hpp"
#include "operon/experiment.hpp"
#include "operon/metrics.hpp"
#include "operon/pde.hpp"
#include "operon/runtime.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace operon;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> variants;
  bool desk = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--variant", o.variants, "Model variant (repeatable)");
  cmd->add_flag("--desk", o.desk, "Apply the desk-scale preset");
  cmd->add_option("--out", o.out, "Output directory or file");
}

ExperimentConfig config_of(const CommonOptions& o) {
  if (o.config.empty()) return parse_config("{}", o.desk);
  return load_config(o.config, o.desk);
}

std::vector<Variant> variants_of(const CommonOptions& o, const ExperimentConfig& cfg) {
  if (o.variants.empty()) return {cfg.variant};
  std::vector<Variant> out;
  for (const auto& v : o.variants) out.push_back(parse_variant(v));
  return out;
}

std::vector<std::uint64_t> seeds_of(const CommonOptions& o, const ExperimentConfig& cfg) {
  if (o.seed) return {*o.seed};
  return cfg.seeds;
}

void write_text(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot open {} for writing", tmp.string()));
    out << text;
    if (!out) throw FormatError(fmt::format("write to {} failed", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kDataFiles{"train_high.donl", "train_low.donl", "test.donl"};

int cmd_generate(const CommonOptions& o) {
  const ExperimentConfig cfg = config_of(o);
  const std::uint64_t seed = o.seed.value_or(cfg.seeds.front());
  const fs::path dir = o.out.empty() ? fs::path(cfg.data_dir) : fs::path(o.out);
  fs::create_directories(dir);
  fmt::print(stderr, "generating {} data: N_H={} N_L={} N_test={} (seed {})\n", to_string(cfg.equation.kind),
             cfg.data.n_high, cfg.data.n_low, cfg.data.n_test, seed);
  const Datasets d = generate_datasets(cfg, seed);
  write_dataset(dir / "train_high.donl", d.high);
  write_dataset(dir / "train_low.donl", d.low);
  write_dataset(dir / "test.donl", d.test);

  json manifest;
  manifest["seed"] = seed;
  manifest["equation"] = to_string(cfg.equation.kind);
  manifest["sizes"] = {{"n_high", d.high.samples()}, {"n_low", d.low.samples()}, {"n_test", d.test.samples()}};
  manifest["grids"] = {{"n_x", d.high.n_x()}, {"n_t_high", d.high.n_t()}, {"n_t_low", d.low.n_t()},
                       {"dt_high", d.high.dt}, {"dt_low", d.low.dt}, {"dx", d.high.dx}};
  json sums;
  for (const auto& f : kDataFiles) sums[f] = sha256_file(dir / f);
  manifest["checksums"] = sums;
  manifest["config"] = json::parse(config_to_json(cfg));
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  fmt::print("wrote {} (high n_t={}, low n_t={}, n_x={})\n", dir.string(), d.high.n_t(), d.low.n_t(), d.high.n_x());
  return 0;
}

struct LoadedData {
  TrajectorySet high;
  TrajectorySet low;
  TrajectorySet test;
  json manifest;
};

LoadedData load_verified(const fs::path& dir, const ExperimentConfig& cfg) {
  LoadedData out;
  out.manifest = json::parse(read_text(dir / "manifest.json"), nullptr, false);
  if (out.manifest.is_discarded() || !out.manifest.contains("checksums")) {
    throw FormatError(fmt::format("{}: malformed manifest", (dir / "manifest.json").string()));
  }
  for (const auto& f : kDataFiles) {
    const std::string expected = out.manifest["checksums"].value(f, "");
    const std::string actual = sha256_file(dir / f);
    if (expected != actual) {
      throw FormatError(fmt::format("checksum mismatch for {}: manifest {} vs file {}; refusing to use stale data",
                                    (dir / f).string(), expected, actual));
    }
  }
  out.high = read_dataset(dir / "train_high.donl");
  out.low = read_dataset(dir / "train_low.donl");
  out.test = read_dataset(dir / "test.donl");
  if (out.high.equation != cfg.equation.kind) {
    throw ConfigError(fmt::format("data in {} is for {}, config asks for {}", dir.string(),
                                  to_string(out.high.equation), to_string(cfg.equation.kind)));
  }
  if (out.high.n_x() != cfg.grid.n) {
    throw ConfigError(fmt::format("data has {} spatial points, config grid.n = {}", out.high.n_x(), cfg.grid.n));
  }
  return out;
}

std::string run_name(Variant v, std::uint64_t seed) { return fmt::format("{}_seed{}", to_string(v), seed); }

/// Runs jobs on up to OPERON_THREADS threads; the first failure is rethrown.
void run_parallel(std::size_t count, const std::function<void(std::size_t)>& job) {
  const std::size_t threads = std::max<std::size_t>(1, std::min(worker_threads(), count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int cmd_train(const CommonOptions& o, const std::string& data_dir) {
  const ExperimentConfig cfg = config_of(o);
  const auto variants = variants_of(o, cfg);
  const auto seeds = seeds_of(o, cfg);
  const fs::path dir = data_dir.empty() ? fs::path(cfg.data_dir) : fs::path(data_dir);
  const LoadedData data = load_verified(dir, cfg);
  for (auto v : variants) {
    ExperimentConfig check = cfg;
    check.variant = v;
    check.data.n_high = data.high.samples();
    check.data.n_low = data.low.samples();
    check.validate();
  }
  const fs::path out = o.out.empty() ? fs::path("runs") : fs::path(o.out);
  fs::create_directories(out);

  std::vector<std::pair<Variant, std::uint64_t>> jobs;
  for (auto v : variants) {
    for (auto s : seeds) jobs.emplace_back(v, s);
  }
  std::mutex print;
  run_parallel(jobs.size(), [&](std::size_t i) {
    const auto [variant, seed] = jobs[i];
    const TrainOutcome r = train_variant(cfg, variant, data.high, data.low, seed);
    const std::string name = run_name(variant, seed);
    save_model(out / (name + ".model.json"), r.model);
    write_text(out / (name + ".log.csv"), r.log.to_csv());
    std::lock_guard lock(print);
    fmt::print("{}: wrote {}\n", name, (out / (name + ".model.json")).string());
  });
  return 0;
}

fs::path metrics_path(const std::string& out) {
  if (out.empty()) return "metrics.csv";
  fs::path p(out);
  if (p.extension() == ".csv") {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
  fs::create_directories(p);
  return p / "metrics.csv";
}

void append_rows(const fs::path& path, const std::vector<MetricRow>& rows) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw FormatError(fmt::format("cannot open {} for appending", path.string()));
  if (fresh) out << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) out << format_metric_row(r) << '\n';
  if (!out) throw FormatError(fmt::format("write to {} failed", path.string()));
}

std::string resolution_label(Variant v) {
  if (v == Variant::don_multi || v == Variant::donlstm_multi) return "multi";
  return uses_low(v) ? "low" : "high";
}

void print_summary(const std::string& label, const std::vector<double>& mae, const std::vector<double>& rmse,
                   const std::vector<double>& rse) {
  const auto a = summarize(mae), b = summarize(rmse), c = summarize(rse);
  fmt::print("{}: MAE {:.6g} ± {:.3g}  RMSE {:.6g} ± {:.3g}  RSE {:.6g} ± {:.3g}\n", label, a.mean, a.stdev, b.mean,
             b.stdev, c.mean, c.stdev);
}

int cmd_evaluate(const CommonOptions& o, std::vector<std::string> models, std::string test_path,
                 const std::string& runs_dir) {
  const ExperimentConfig cfg = config_of(o);
  if (models.empty()) {
    const fs::path runs = runs_dir.empty() ? fs::path("runs") : fs::path(runs_dir);
    for (auto v : variants_of(o, cfg)) {
      for (auto s : seeds_of(o, cfg)) models.push_back((runs / (run_name(v, s) + ".model.json")).string());
    }
  }
  if (test_path.empty()) test_path = (fs::path(cfg.data_dir) / "test.donl").string();
  const TrajectorySet test = read_dataset(test_path);
  std::vector<MetricRow> rows;
  for (const auto& path : models) {
    const TrainedModel m = load_model(path);
    if (m.n_x() != test.n_x()) {
      throw DimensionError(fmt::format("{}: model has {} spatial points, test set {}", path, m.n_x(), test.n_x()));
    }
    if (m.lstm_baseline() && m.n_t_high() != test.n_t()) {
      throw DimensionError(fmt::format("{}: LSTM baseline is bound to {} time points, test set has {}", path,
                                       m.n_t_high(), test.n_t()));
    }
    const MetricReport report = evaluate(m, test);
    rows.push_back(make_metric_row(to_string(m.variant()), resolution_label(m.variant()), m.seed, m.n_high, m.n_low,
                                   report));
    print_summary(fmt::format("{} seed {}", to_string(m.variant()), m.seed), report.mae, report.rmse, report.rse);
  }
  append_rows(metrics_path(o.out), rows);
  if (rows.size() > 1) {
    std::map<std::string, std::vector<const MetricRow*>> by_model;
    for (const auto& r : rows) by_model[r.model].push_back(&r);
    for (const auto& [name, group] : by_model) {
      std::vector<double> mae, rmse, rse;
      for (const auto* r : group) {
        mae.push_back(r->mae);
        rmse.push_back(r->rmse);
        rse.push_back(r->rse);
      }
      print_summary(fmt::format("{} over {} runs", name, group.size()), mae, rmse, rse);
    }
  }
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  const ExperimentConfig cfg = config_of(o);
  std::vector<Variant> variants;
  if (o.variants.empty()) variants = all_variants();
  else variants = variants_of(o, cfg);
  const auto seeds = seeds_of(o, cfg);
  std::size_t max_high = 0;
  for (auto n : cfg.sweep_n_high) max_high = std::max(max_high, n);
  if (max_high == 0) throw ConfigError("sweep.n_high must contain a positive size");
  struct Job {
    std::size_t n_high;
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto n : cfg.sweep_n_high) {
    for (auto v : variants) {
      ExperimentConfig check = cfg;
      check.variant = v;
      check.data.n_high = n;
      check.data.n_low = n * cfg.low_per_high;
      check.validate();
      for (auto s : seeds) jobs.push_back({n, v, s});
    }
  }
  ExperimentConfig gen = cfg;
  gen.data.n_high = max_high;
  gen.data.n_low = max_high * cfg.low_per_high;
  const std::uint64_t data_seed = 0;
  fmt::print(stderr, "generating sweep data: N_H={} N_L={} N_test={}\n", gen.data.n_high, gen.data.n_low,
             gen.data.n_test);
  const Datasets full = generate_datasets(gen, data_seed);

  std::vector<MetricRow> rows(jobs.size());
  std::mutex print;
  run_parallel(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const Datasets d = subset_datasets(full, job.n_high, job.n_high * cfg.low_per_high);
    const TrainOutcome r = train_variant(cfg, job.variant, d.high, d.low, job.seed);
    const MetricReport report = evaluate(r.model, d.test);
    rows[i] = make_metric_row(to_string(job.variant), resolution_label(job.variant), job.seed, r.model.n_high,
                              r.model.n_low, report);
    std::lock_guard lock(print);
    fmt::print("{} N_H={} seed {}: RSE {:.6g}\n", to_string(job.variant), job.n_high, job.seed,
               report.rse_summary().mean);
  });
  const fs::path path = metrics_path(o.out.empty() ? "sweep.csv" : o.out);
  if (fs::exists(path)) fs::remove(path);
  append_rows(path, rows);
  fmt::print("wrote {}\n", path.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"operon: multi-resolution DON-LSTM surrogates for 1-D PDEs"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, eval_opts, sweep_opts;
  auto* gen = app.add_subcommand("generate", "Generate D_H, D_L and test trajectories");
  add_common(gen, gen_opts);

  auto* train = app.add_subcommand("train", "Train model variants on generated data");
  add_common(train, train_opts);
  std::string train_data;
  train->add_option("--data", train_data, "Dataset directory (default: config data.dir)");

  auto* eval = app.add_subcommand("evaluate", "Evaluate trained models on the test set");
  add_common(eval, eval_opts);
  std::vector<std::string> eval_models;
  std::string eval_test, eval_runs;
  eval->add_option("--model", eval_models, "Model file (repeatable)");
  eval->add_option("--test", eval_test, "Test dataset file");
  eval->add_option("--runs", eval_runs, "Directory with trained models (default: runs)");

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate over the N_H sweep");
  add_common(sweep, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_opts);
    if (*train) return cmd_train(train_opts, train_data);
    if (*eval) return cmd_evaluate(eval_opts, eval_models, eval_test, eval_runs);
    if (*sweep) return cmd_sweep(sweep_opts);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const DimensionError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kExitNumeric;
  } catch (const FormatError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return kExitConfig;
}
