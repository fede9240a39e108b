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

#include "operon/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "operon/dataset.hpp"
#include "operon/errors.hpp"

namespace operon {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::don_low: return "don_low";
    case Variant::don_high: return "don_high";
    case Variant::don_multi: return "don_multi";
    case Variant::lstm_high: return "lstm_high";
    case Variant::donlstm_high: return "donlstm_high";
    case Variant::donlstm_multi: return "donlstm_multi";
  }
  return "don_low";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::don_low,   Variant::don_high,     Variant::don_multi,
                                      Variant::lstm_high, Variant::donlstm_high, Variant::donlstm_multi};
  return v;
}

Variant parse_variant(std::string_view name) {
  for (auto v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError(fmt::format(
      "unknown variant '{}' (valid: don_low, don_high, don_multi, lstm_high, donlstm_high, donlstm_multi)", name));
}

bool uses_low(Variant v) { return v == Variant::don_low || v == Variant::don_multi || v == Variant::donlstm_multi; }

bool uses_high(Variant v) { return v != Variant::don_low; }

ExperimentConfig ExperimentConfig::defaults(EquationKind kind) {
  ExperimentConfig c;
  c.equation = EquationSpec::defaults(kind);
  c.grid = Grid::defaults(kind);
  c.time = TimeSpec::defaults(kind);
  c.model.deeponet.sensors = c.grid.n;
  c.model.deeponet.period = c.grid.period;
  return c;
}

void ExperimentConfig::apply_desk() {
  model.deeponet = model.deeponet.scaled_down(10);
  model.hidden = std::max<std::size_t>(1, model.hidden / 10);
  data.n_low = 200;
  data.n_high = 50;
  data.n_test = 50;
  training.epochs_step1 = 500;
  training.epochs_step2 = 500;
  training.epochs_step3 = 500;
  training.lr1 = 1e-3;
  training.lr2 = 1e-4;
}

void ExperimentConfig::validate() const {
  if (grid.n < 3) throw ConfigError("grid.n must be at least 3");
  if (!(grid.period > 0.0)) throw ConfigError("grid.period must be positive");
  if (!(time.horizon >= 0.0)) throw ConfigError("time.horizon must be non-negative");
  if (!(time.dt_high > 0.0)) throw ConfigError("time.dt_high must be positive");
  if (time.low_factor < 1) throw ConfigError("time.dt_low must be a positive multiple of time.dt_high");
  if (time.low_factor != 5 && !allow_any_low_ratio) {
    throw ConfigError(fmt::format("time.dt_low: must equal 5 * time.dt_high, got ratio {} "
                                  "(set time.allow_any_low_ratio to override)",
                                  time.low_factor));
  }
  time.n_t_high();
  time.n_t_low();
  if (integrator.substeps < 1) throw ConfigError("integrator.substeps must be positive");
  if (!(integrator.tolerance > 0.0)) throw ConfigError("integrator.tolerance must be positive");
  if (integrator.max_iterations < 1) throw ConfigError("integrator.max_iterations must be positive");
  if (model.deeponet.sensors != grid.n) {
    throw ConfigError(fmt::format("model: {} branch sensors but grid.n = {}", model.deeponet.sensors, grid.n));
  }
  model.deeponet.validate();
  if (model.hidden < 1) throw ConfigError("model.hidden must be positive");
  training.validate();
  auto check_split = [&](const char* field, std::size_t n) {
    const auto n_val = static_cast<std::size_t>(std::llround(training.val_fraction * static_cast<double>(n)));
    if (n < 2 || n_val < 1) {
      throw ConfigError(fmt::format("{}: variant {} needs a training and a validation sample, but {} samples with "
                                    "training.val_fraction {} leave {} for validation",
                                    field, to_string(variant), n, training.val_fraction, n < 2 ? 0 : n_val));
    }
  };
  if (uses_high(variant)) check_split("data.n_high", data.n_high);
  if (uses_low(variant)) check_split("data.n_low", data.n_low);
  if (data.n_test < 1) throw ConfigError("data.n_test must be positive");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (low_per_high < 1) throw ConfigError("sweep.low_per_high must be positive");
}

namespace {

/// Reads one JSON object, tracking consumed keys so leftovers can be reported.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", label()));
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    out = convert<T>(j_.at(key), field(key));
  }

  Fields child(const char* key) {
    used_.insert(key);
    return Fields(j_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(fmt::format("{}: unknown field", field(k)));
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(fmt::format("{}: expected a boolean", where));
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", where));
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a non-negative integer", where));
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(fmt::format("{}: expected a string", where));
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(fmt::format("{}: expected an array", where));
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], fmt::format("{}[{}]", where, i)));
      }
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

std::vector<nn::Activation> parse_activations(const std::vector<std::string>& names, const std::string& where) {
  std::vector<nn::Activation> out;
  for (const auto& n : names) {
    try {
      out.push_back(nn::parse_activation(n));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
  }
  return out;
}

std::vector<std::string> activation_names(const std::vector<nn::Activation>& acts) {
  std::vector<std::string> out;
  for (auto a : acts) out.push_back(nn::to_string(a));
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, bool desk) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  Fields root(j, "");
  std::string equation = "kdv";
  root.get("equation", equation);
  EquationKind kind;
  try {
    kind = parse_equation(equation);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("equation: {}", e.what()));
  }
  ExperimentConfig c = ExperimentConfig::defaults(kind);
  root.get("desk", desk);
  if (desk) c.apply_desk();

  if (root.has("equation_params")) {
    Fields f = root.child("equation_params");
    f.get("gamma", c.equation.gamma);
    f.get("eta", c.equation.eta);
    f.get("nu", c.equation.ch_nu);
    f.get("alpha", c.equation.ch_alpha);
    f.get("mu", c.equation.ch_mu);
    f.get("burgers_nu", c.equation.burgers_nu);
    f.get("burgers_waves", c.equation.burgers_waves);
    f.get("burgers_n_max", c.equation.burgers_n_max);
    f.finish();
  }
  if (root.has("grid")) {
    Fields f = root.child("grid");
    f.get("origin", c.grid.origin);
    f.get("period", c.grid.period);
    f.get("n", c.grid.n);
    f.finish();
    c.model.deeponet.sensors = c.grid.n;
    c.model.deeponet.period = c.grid.period;
  }
  if (root.has("time")) {
    Fields f = root.child("time");
    f.get("horizon", c.time.horizon);
    f.get("dt_high", c.time.dt_high);
    if (f.has("dt_low")) {
      double dt_low = 0.0;
      f.get("dt_low", dt_low);
      c.time.low_factor = exact_ratio(dt_low, c.time.dt_high, "time.dt_low / time.dt_high");
    }
    f.get("allow_any_low_ratio", c.allow_any_low_ratio);
    f.finish();
  }
  if (root.has("integrator")) {
    Fields f = root.child("integrator");
    f.get("substeps", c.integrator.substeps);
    f.get("tolerance", c.integrator.tolerance);
    f.get("max_iterations", c.integrator.max_iterations);
    f.finish();
  }
  if (root.has("data")) {
    Fields f = root.child("data");
    f.get("n_high", c.data.n_high);
    f.get("n_low", c.data.n_low);
    f.get("n_test", c.data.n_test);
    f.get("dir", c.data_dir);
    f.finish();
  }
  if (root.has("model")) {
    Fields f = root.child("model");
    f.get("branch_widths", c.model.deeponet.branch_widths);
    f.get("trunk_widths", c.model.deeponet.trunk_widths);
    std::vector<std::string> acts;
    if (f.has("branch_activations")) {
      f.get("branch_activations", acts);
      c.model.deeponet.branch_activations = parse_activations(acts, f.field("branch_activations"));
    }
    if (f.has("trunk_activations")) {
      f.get("trunk_activations", acts);
      c.model.deeponet.trunk_activations = parse_activations(acts, f.field("trunk_activations"));
    }
    f.get("periodic", c.model.deeponet.periodic);
    f.get("hidden", c.model.hidden);
    f.finish();
  }
  if (root.has("training")) {
    Fields f = root.child("training");
    f.get("epochs_step1", c.training.epochs_step1);
    f.get("epochs_step2", c.training.epochs_step2);
    f.get("epochs_step3", c.training.epochs_step3);
    f.get("batch_size", c.training.batch_size);
    f.get("lr1", c.training.lr1);
    f.get("lr2", c.training.lr2);
    f.get("n_freq", c.training.n_freq);
    f.get("val_fraction", c.training.val_fraction);
    f.get("adaptive", c.training.adaptive);
    f.get("lambda_eta", c.training.lambda_eta);
    f.finish();
  }
  if (root.has("variant")) {
    std::string v;
    root.get("variant", v);
    try {
      c.variant = parse_variant(v);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("variant: {}", e.what()));
    }
  }
  root.get("seeds", c.seeds);
  if (root.has("sweep")) {
    Fields f = root.child("sweep");
    f.get("n_high", c.sweep_n_high);
    f.get("low_per_high", c.low_per_high);
    f.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool desk) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("cannot open config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), desk);
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["equation"] = to_string(c.equation.kind);
  j["equation_params"] = {{"gamma", c.equation.gamma},           {"eta", c.equation.eta},
                          {"nu", c.equation.ch_nu},              {"alpha", c.equation.ch_alpha},
                          {"mu", c.equation.ch_mu},              {"burgers_nu", c.equation.burgers_nu},
                          {"burgers_waves", c.equation.burgers_waves}, {"burgers_n_max", c.equation.burgers_n_max}};
  j["grid"] = {{"origin", c.grid.origin}, {"period", c.grid.period}, {"n", c.grid.n}};
  j["time"] = {{"horizon", c.time.horizon},
               {"dt_high", c.time.dt_high},
               {"dt_low", c.time.dt_low()},
               {"allow_any_low_ratio", c.allow_any_low_ratio}};
  j["integrator"] = {{"substeps", c.integrator.substeps},
                     {"tolerance", c.integrator.tolerance},
                     {"max_iterations", c.integrator.max_iterations}};
  j["data"] = {{"n_high", c.data.n_high}, {"n_low", c.data.n_low}, {"n_test", c.data.n_test}, {"dir", c.data_dir}};
  j["model"] = {{"branch_widths", c.model.deeponet.branch_widths},
                {"trunk_widths", c.model.deeponet.trunk_widths},
                {"branch_activations", activation_names(c.model.deeponet.resolved_branch_activations())},
                {"trunk_activations", activation_names(c.model.deeponet.resolved_trunk_activations())},
                {"periodic", c.model.deeponet.periodic},
                {"hidden", c.model.hidden}};
  j["training"] = {{"epochs_step1", c.training.epochs_step1}, {"epochs_step2", c.training.epochs_step2},
                   {"epochs_step3", c.training.epochs_step3}, {"batch_size", c.training.batch_size},
                   {"lr1", c.training.lr1},                   {"lr2", c.training.lr2},
                   {"n_freq", c.training.n_freq},             {"val_fraction", c.training.val_fraction},
                   {"adaptive", c.training.adaptive},         {"lambda_eta", c.training.lambda_eta}};
  j["variant"] = to_string(c.variant);
  j["seeds"] = c.seeds;
  j["sweep"] = {{"n_high", c.sweep_n_high}, {"low_per_high", c.low_per_high}};
  return j.dump(2);
}

Datasets generate_datasets(const ExperimentConfig& config, std::uint64_t seed, std::size_t threads) {
  GenerationRequest req;
  req.equation = config.equation;
  req.grid = config.grid;
  req.time = config.time;
  req.integrator = config.integrator;
  req.seed = seed;

  Datasets out;
  req.role = "high";
  req.count = config.data.n_high;
  out.high = generate_dataset(req, threads);
  req.role = "low";
  req.count = config.data.n_low;
  out.low = downsample_time(generate_dataset(req, threads), config.time.low_factor);
  req.role = "test";
  req.count = config.data.n_test;
  out.test = generate_dataset(req, threads);
  return out;
}

Datasets subset_datasets(const Datasets& full, std::size_t n_high, std::size_t n_low) {
  auto first = [](std::size_t n, std::size_t available) {
    if (n > available) throw ConfigError(fmt::format("requested {} samples, only {} available", n, available));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  };
  return {full.high.select(first(n_high, full.high.samples())), full.low.select(first(n_low, full.low.samples())),
          full.test};
}

TrainedModel::TrainedModel(Variant variant, const ModelConfig& model, std::size_t n_x, std::size_t n_t_high)
    : variant_(variant), model_(model), n_x_(n_x), n_t_high_(n_t_high) {
  switch (variant) {
    case Variant::don_low:
    case Variant::don_high:
    case Variant::don_multi: net_ = DeepONet(params_, model.deeponet); break;
    case Variant::lstm_high:
      net_ = LstmBaseline(params_, model.deeponet.sensors, n_t_high, n_x, model.hidden);
      break;
    case Variant::donlstm_high:
    case Variant::donlstm_multi: net_ = DonLstm(params_, model.deeponet, n_x, model.hidden); break;
  }
}

const Surrogate& TrainedModel::network() const {
  return std::visit([](const auto& n) -> const Surrogate& { return n; }, net_);
}

const DeepONet* TrainedModel::deeponet() const {
  if (auto* d = std::get_if<DeepONet>(&net_)) return d;
  if (auto* c = std::get_if<DonLstm>(&net_)) return &c->deeponet();
  return nullptr;
}

void TrainedModel::set_scalers(const Scaler& branch, const Scaler& target, const Scaler& x, const Scaler& t) {
  branch_scaler_ = branch;
  target_scaler_ = target;
  if (auto* d = std::get_if<DeepONet>(&net_)) d->set_coordinate_scalers(x, t);
  if (auto* c = std::get_if<DonLstm>(&net_)) c->deeponet().set_coordinate_scalers(x, t);
}

const Scaler& TrainedModel::x_scaler() const {
  static const Scaler identity = Scaler::identity(FitDomain::trunk_input);
  const DeepONet* d = deeponet();
  return d ? d->x_scaler() : identity;
}

const Scaler& TrainedModel::t_scaler() const {
  static const Scaler identity = Scaler::identity(FitDomain::trunk_input);
  const DeepONet* d = deeponet();
  return d ? d->t_scaler() : identity;
}

RowMatrix TrainedModel::predict(const RowMatrix& u0, const std::vector<double>& x, const std::vector<double>& t,
                                std::size_t batch_size) const {
  if (static_cast<std::size_t>(u0.cols()) != n_x_ || x.size() != n_x_) {
    throw DimensionError(fmt::format("model expects {} spatial points, got {} / {}", n_x_, u0.cols(), x.size()));
  }
  const QueryGrid grid = QueryGrid::tensor(x, t);
  RowMatrix scaled = u0;
  branch_scaler_.apply_inplace(std::span<double>(scaled.data(), static_cast<std::size_t>(scaled.size())));
  RowMatrix out(u0.rows(), static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index begin = 0; begin < u0.rows(); begin += static_cast<Eigen::Index>(batch_size)) {
    const Eigen::Index n = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch_size), u0.rows() - begin);
    out.middleRows(begin, n) = network().predict(params_, scaled.middleRows(begin, n), grid);
  }
  target_scaler_.invert_inplace(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Predictor TrainedModel::predictor(const std::vector<double>& x, const std::vector<double>& t) const {
  return [this, x, t](const RowMatrix& u0) { return predict(u0, x, t); };
}

TrainedModel TrainedModel::deeponet_only(Variant as) const {
  const DeepONet* d = deeponet();
  if (!d) throw ConfigError("model has no DeepONet part");
  TrainedModel out(as, model_, n_x_, n_t_high_);
  auto [begin, end] = params_.range(d->prefix());
  if (end - begin != out.params_.size()) throw DimensionError("DeepONet parameter block size mismatch");
  out.params_.values() = params_.values().segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  out.set_scalers(branch_scaler_, target_scaler_, d->x_scaler(), d->t_scaler());
  out.seed = seed;
  out.n_high = n_high;
  out.n_low = n_low;
  out.equation = equation;
  return out;
}

namespace {

StagePart make_part(const std::string& label, const TrajectorySet& set, const Scaler& branch, const Scaler& target) {
  StagePart p;
  p.label = label;
  p.u0 = set.initial_conditions();
  branch.apply_inplace(std::span<double>(p.u0.data(), static_cast<std::size_t>(p.u0.size())));
  p.target = set.flat();
  target.apply_inplace(std::span<double>(p.target.data(), static_cast<std::size_t>(p.target.size())));
  p.grid = QueryGrid::tensor(set.x, set.t);
  return p;
}

Scaler fit_over(ScalerKind kind, FitDomain domain, const std::vector<const RowMatrix*>& blocks) {
  std::vector<double> all;
  for (const auto* b : blocks) all.insert(all.end(), b->data(), b->data() + b->size());
  return Scaler::fit(kind, all, domain);
}

}  // namespace

TrainOutcome train_variant(const ExperimentConfig& config, Variant variant, const TrajectorySet& high,
                           const TrajectorySet& low, std::uint64_t seed) {
  ExperimentConfig cfg = config;
  cfg.variant = variant;
  cfg.training.seed = seed;
  cfg.training.validate();
  if (uses_high(variant) && high.samples() < 2) throw ConfigError("variant needs at least 2 high-resolution samples");
  if (uses_low(variant) && low.samples() < 2) throw ConfigError("variant needs at least 2 low-resolution samples");
  if (uses_low(variant) && uses_high(variant)) {
    if (low.x != high.x) throw ConfigError("high and low resolution sets do not share the spatial grid");
    const std::size_t factor = exact_ratio(low.dt, high.dt, "low / high time step");
    if (factor == 0) throw ConfigError("low resolution step must be a multiple of the high resolution step");
  }

  const SplitSpec split{seed, cfg.training.val_fraction, 0};
  DatasetSplit hs, ls;
  if (uses_high(variant)) hs = split_dataset(high, split);
  if (uses_low(variant)) ls = split_dataset(low, split);

  std::vector<const TrajectorySet*> first_stage;
  if (variant == Variant::don_low || variant == Variant::donlstm_multi) first_stage = {&ls.train};
  else if (variant == Variant::don_multi) first_stage = {&ls.train, &hs.train};
  else first_stage = {&hs.train};

  std::vector<RowMatrix> u0s, targets;
  for (const auto* s : first_stage) {
    u0s.push_back(s->initial_conditions());
    targets.push_back(s->flat());
  }
  std::vector<const RowMatrix*> u0p, tp;
  for (const auto& m : u0s) u0p.push_back(&m);
  for (const auto& m : targets) tp.push_back(&m);
  const Scaler branch = fit_over(ScalerKind::standard, FitDomain::branch_input, u0p);
  const Scaler target = fit_over(ScalerKind::standard, FitDomain::target, tp);
  const TrajectorySet& ref = *first_stage.front();
  const Scaler xs = Scaler::fit(ScalerKind::minmax, ref.x, FitDomain::trunk_input);
  const Scaler ts = Scaler::fit(ScalerKind::minmax, ref.t, FitDomain::trunk_input);

  const std::size_t n_x = ref.n_x();
  const std::size_t n_t_high = uses_high(variant) ? high.n_t() : low.n_t();
  TrainOutcome out;
  out.model = TrainedModel(variant, cfg.model, n_x, n_t_high);
  TrainedModel& m = out.model;
  m.seed = seed;
  m.n_high = uses_high(variant) ? high.samples() : 0;
  m.n_low = uses_low(variant) ? low.samples() : 0;
  m.equation = ref.equation;
  m.set_scalers(branch, target, xs, ts);

  auto data_of = [&](std::initializer_list<std::pair<const char*, const TrajectorySet*>> sets) {
    StageData d;
    for (const auto& [label, s] : sets) d.parts.push_back(make_part(label, *s, branch, target));
    return d;
  };

  nn::ParameterSet& params = m.params();
  Rng init_don = Rng::stream(seed, "init-don");
  Rng init_seq = Rng::stream(seed, "init-lstm");
  switch (variant) {
    case Variant::don_low:
    case Variant::don_high:
    case Variant::don_multi: {
      const auto& net = *m.deeponet();
      net.initialize(params, init_don);
      StageData train, val;
      if (variant == Variant::don_low) {
        train = data_of({{"low", &ls.train}});
        val = data_of({{"low", &ls.val}});
      } else if (variant == Variant::don_high) {
        train = data_of({{"high", &hs.train}});
        val = data_of({{"high", &hs.val}});
      } else {
        train = data_of({{"low", &ls.train}, {"high", &hs.train}});
        val = data_of({{"low", &ls.val}, {"high", &hs.val}});
      }
      net.set_trainable(params, TrainingStage::don_pretrain);
      Rng rng = Rng::stream(seed, "batches", 1);
      train_stage(net, params,
                  {"step1", TrainingStage::don_pretrain, cfg.training.lr1, cfg.training.epochs_step1,
                   cfg.training.adaptive},
                  cfg.training, train, val, rng, &out.log);
      break;
    }
    case Variant::lstm_high: {
      const LstmBaseline& net = *m.lstm_baseline();
      Rng init_lift = Rng::stream(seed, "init-lift");
      net.initialize(params, init_lift);
      const StageData train = data_of({{"high", &hs.train}});
      const StageData val = data_of({{"high", &hs.val}});
      net.set_trainable(params, TrainingStage::joint_finetune);
      Rng rng = Rng::stream(seed, "batches", 1);
      train_stage(net, params,
                  {"lstm", TrainingStage::joint_finetune, cfg.training.lr1, cfg.training.epochs_step1,
                   cfg.training.adaptive},
                  cfg.training, train, val, rng, &out.log);
      break;
    }
    case Variant::donlstm_high:
    case Variant::donlstm_multi: {
      const DonLstm& net = *m.donlstm();
      net.deeponet().initialize(params, init_don);
      net.sequence_head().initialize(params, init_seq);
      const bool multi = variant == Variant::donlstm_multi;
      const StageData s1_train = multi ? data_of({{"low", &ls.train}}) : data_of({{"high", &hs.train}});
      const StageData s1_val = multi ? data_of({{"low", &ls.val}}) : data_of({{"high", &hs.val}});
      const StageData r_train = data_of({{"high", &hs.train}});
      const StageData r_val = data_of({{"high", &hs.val}});
      ThreeStageResult r = run_three_stage(net, params, cfg.training, s1_train, s1_val, r_train, r_val, &out.log);
      TrainedModel step1 = m;
      step1.params().values() = r.step1.best.snapshot;
      out.step1 = step1.deeponet_only(multi ? Variant::don_low : Variant::don_high);
      break;
    }
  }
  return out;
}

MetricReport evaluate(const TrainedModel& model, const TrajectorySet& test) {
  return evaluate_model(model.predictor(test.x, test.t), test);
}

}  // namespace operon
