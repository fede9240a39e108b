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

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "operon/errors.hpp"
#include "operon/experiment.hpp"

namespace operon {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

json scaler_json(const Scaler& s) {
  return {{"kind", to_string(s.kind())}, {"domain", to_string(s.domain())}, {"a", s.a()}, {"b", s.b()}};
}

Scaler scaler_from(const json& j) {
  return Scaler(parse_scaler_kind(j.at("kind").get<std::string>()), parse_fit_domain(j.at("domain").get<std::string>()),
                j.at("a").get<double>(), j.at("b").get<double>());
}

std::vector<std::string> names(const std::vector<nn::Activation>& acts) {
  std::vector<std::string> out;
  for (auto a : acts) out.push_back(nn::to_string(a));
  return out;
}

std::vector<nn::Activation> activations(const json& j) {
  std::vector<nn::Activation> out;
  for (const auto& n : j) out.push_back(nn::parse_activation(n.get<std::string>()));
  return out;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  const auto& cfg = model.model_config();
  json j;
  j["format"] = "operon-model";
  j["version"] = kModelVersion;
  j["variant"] = to_string(model.variant());
  j["equation"] = to_string(model.equation);
  j["seed"] = model.seed;
  j["n_high"] = model.n_high;
  j["n_low"] = model.n_low;
  j["n_x"] = model.n_x();
  j["n_t_high"] = model.n_t_high();
  j["deeponet"] = {{"sensors", cfg.deeponet.sensors},
                   {"branch_widths", cfg.deeponet.branch_widths},
                   {"trunk_widths", cfg.deeponet.trunk_widths},
                   {"branch_activations", names(cfg.deeponet.resolved_branch_activations())},
                   {"trunk_activations", names(cfg.deeponet.resolved_trunk_activations())},
                   {"periodic", cfg.deeponet.periodic},
                   {"period", cfg.deeponet.period}};
  j["hidden"] = cfg.hidden;
  j["scalers"] = {{"branch", scaler_json(model.branch_scaler())},
                  {"target", scaler_json(model.target_scaler())},
                  {"x", scaler_json(model.x_scaler())},
                  {"t", scaler_json(model.t_scaler())}};
  json layout = json::array();
  for (const auto& b : model.params().layout()) layout.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  j["layout"] = layout;
  const auto& v = model.params().values();
  j["values"] = std::vector<double>(v.data(), v.data() + v.size());
  return j.dump();
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "operon-model") throw FormatError("not an operon model file");
    if (j.at("version").get<int>() != kModelVersion) {
      throw FormatError(fmt::format("unsupported model version {}", j.at("version").get<int>()));
    }
    ModelConfig cfg;
    const auto& d = j.at("deeponet");
    cfg.deeponet.sensors = d.at("sensors").get<std::size_t>();
    cfg.deeponet.branch_widths = d.at("branch_widths").get<std::vector<std::size_t>>();
    cfg.deeponet.trunk_widths = d.at("trunk_widths").get<std::vector<std::size_t>>();
    cfg.deeponet.branch_activations = activations(d.at("branch_activations"));
    cfg.deeponet.trunk_activations = activations(d.at("trunk_activations"));
    cfg.deeponet.periodic = d.at("periodic").get<bool>();
    cfg.deeponet.period = d.at("period").get<double>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    TrainedModel m(parse_variant(j.at("variant").get<std::string>()), cfg, j.at("n_x").get<std::size_t>(),
                   j.at("n_t_high").get<std::size_t>());
    m.equation = parse_equation(j.at("equation").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_high = j.at("n_high").get<std::size_t>();
    m.n_low = j.at("n_low").get<std::size_t>();
    const auto& s = j.at("scalers");
    m.set_scalers(scaler_from(s.at("branch")), scaler_from(s.at("target")), scaler_from(s.at("x")),
                  scaler_from(s.at("t")));
    const auto& layout = j.at("layout");
    const auto& expected = m.params().layout();
    if (layout.size() != expected.size()) throw FormatError("model layout does not match its configuration");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (layout[i].at("name") != expected[i].name || layout[i].at("rows") != expected[i].rows ||
          layout[i].at("cols") != expected[i].cols) {
        throw FormatError(fmt::format("model layout mismatch at block '{}'", expected[i].name));
      }
    }
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != m.params().size()) {
      throw FormatError(fmt::format("model has {} values, layout needs {}", values.size(), m.params().size()));
    }
    m.params().values() = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return m;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("malformed model file: {}", e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("malformed model file: {}", e.what()));
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  const std::string text = model_to_json(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot open {} for writing", tmp.string()));
    out << text << '\n';
    if (!out) throw FormatError(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open model {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace operon
