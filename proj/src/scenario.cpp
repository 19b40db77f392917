// Copyright 2026 The teamform Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "teamform/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace teamform {

using nlohmann::json;

namespace {

class SimAgent final : public Agent {
 public:
  SimAgent(SimAgentModel model, std::map<AgentId, PeerProfile> profiles)
      : model_(std::move(model)), profiles_(std::move(profiles)) {}

  AgentId id() const override { return model_.id; }
  int tom_level() const override { return model_.tom_level; }

  ActionVector act(const InteractionLog& log, int round,
                   std::uint64_t seed) override {
    return sim_act(model_, log, round, seed);
  }

  Belief update_belief(const InteractionLog& log,
                       const std::vector<AgentId>& team) override {
    return sim_update_belief(model_, log, model_.tom_level, team, profiles_);
  }

 private:
  SimAgentModel model_;
  std::map<AgentId, PeerProfile> profiles_;
};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw std::invalid_argument(field + ": " + why);
}

}  // namespace

void to_json(json& j, const Scenario& s) {
  json agents = json::array();
  for (const auto& a : s.agents) {
    json ja{{"latent", a.latent},
            {"rho", a.rho},
            {"noise_sd", a.noise_sd},
            {"tom_level", a.tom_level},
            {"defector", a.defector}};
    if (a.alpha) ja["alpha"] = *a.alpha;
    if (a.role) ja["role"] = *a.role;
    agents.push_back(std::move(ja));
  }
  j = json{{"name", s.name},
           {"dimension", s.dimension},
           {"agents", std::move(agents)}};
  if (s.adapter) {
    j["adapter"] = json{{"endpoint_env", s.adapter->endpoint_env},
                        {"key_env", s.adapter->key_env},
                        {"model_env", s.adapter->model_env},
                        {"temperature", s.adapter->temperature},
                        {"task", s.adapter->task}};
  }
}

void from_json(const json& j, Scenario& s) { s = parse_scenario(j); }

Scenario parse_scenario(const json& j) {
  Scenario s;
  if (!j.is_object()) fail("scenario", "expected a JSON object");
  if (!j.contains("name") || !j.at("name").is_string()) {
    fail("name", "expected a string");
  }
  s.name = j.at("name").get<std::string>();
  if (!j.contains("dimension") || !j.at("dimension").is_number_integer()) {
    fail("dimension", "expected an integer");
  }
  s.dimension = j.at("dimension").get<int>();
  if (!j.contains("agents") || !j.at("agents").is_array()) {
    fail("agents", "expected an array");
  }
  int idx = 0;
  for (const auto& ja : j.at("agents")) {
    std::string field = "agents[" + std::to_string(idx) + "]";
    ScenarioAgent a;
    if (!ja.contains("latent") || !ja.at("latent").is_array()) {
      fail(field + ".latent", "expected an array of numbers");
    }
    a.latent = ja.at("latent").get<std::vector<double>>();
    if (ja.contains("rho")) a.rho = ja.at("rho").get<double>();
    if (ja.contains("noise_sd")) a.noise_sd = ja.at("noise_sd").get<double>();
    if (ja.contains("tom_level")) a.tom_level = ja.at("tom_level").get<int>();
    if (ja.contains("defector")) a.defector = ja.at("defector").get<bool>();
    if (ja.contains("alpha")) a.alpha = ja.at("alpha").get<double>();
    if (ja.contains("role")) a.role = ja.at("role").get<std::string>();
    s.agents.push_back(std::move(a));
    ++idx;
  }
  if (j.contains("adapter")) {
    const auto& jb = j.at("adapter");
    AdapterBlock b;
    if (jb.contains("endpoint_env")) {
      b.endpoint_env = jb.at("endpoint_env").get<std::string>();
    }
    if (jb.contains("key_env")) b.key_env = jb.at("key_env").get<std::string>();
    if (jb.contains("model_env")) {
      b.model_env = jb.at("model_env").get<std::string>();
    }
    if (jb.contains("temperature")) {
      b.temperature = jb.at("temperature").get<double>();
    }
    if (jb.contains("task")) b.task = jb.at("task").get<std::string>();
    s.adapter = std::move(b);
  }
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  if (s.name.empty()) fail("name", "must be non-empty");
  if (s.dimension < 1) fail("dimension", "must be >= 1");
  if (s.agents.size() < 2) fail("agents", "need at least two agents");
  if (s.agents.size() > 63) fail("agents", "at most 63 agents are supported");
  bool any_alpha = false, all_alpha = true;
  int idx = 0;
  for (const auto& a : s.agents) {
    std::string field = "agents[" + std::to_string(idx) + "]";
    if (static_cast<int>(a.latent.size()) != s.dimension) {
      fail(field + ".latent", "expected " + std::to_string(s.dimension) +
                                  " entries, got " +
                                  std::to_string(a.latent.size()));
    }
    for (double v : a.latent) {
      if (!std::isfinite(v)) fail(field + ".latent", "entries must be finite");
    }
    if (!(a.rho >= 0.0 && a.rho < 1.0)) {
      fail(field + ".rho", "must lie in [0, 1)");
    }
    if (!(a.noise_sd >= 0.0)) fail(field + ".noise_sd", "must be >= 0");
    if (a.tom_level < 0 || a.tom_level > 2) {
      fail(field + ".tom_level", "must be 0, 1 or 2");
    }
    if (a.alpha) {
      any_alpha = true;
      if (!(*a.alpha >= 0.0 && *a.alpha <= 1.0)) {
        fail(field + ".alpha", "must lie in [0, 1]");
      }
    } else {
      all_alpha = false;
    }
    ++idx;
  }
  if (any_alpha && !all_alpha) {
    fail("agents", "alpha must be scored for every agent or for none");
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("scenario " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

std::vector<SimAgentModel> scenario_models(const Scenario& s) {
  std::vector<SimAgentModel> out;
  AgentId id = 0;
  for (const auto& a : s.agents) {
    SimAgentModel m;
    m.id = id++;
    m.latent = ActionVector{a.latent, {}};
    m.rho = a.rho;
    m.noise_sd = a.noise_sd;
    m.tom_level = a.tom_level;
    m.defector = a.defector;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::unique_ptr<Agent>> make_sim_agents(const Scenario& s) {
  auto models = scenario_models(s);
  auto profiles = profiles_of(models);
  std::vector<std::unique_ptr<Agent>> out;
  out.reserve(models.size());
  for (auto& m : models) {
    out.push_back(std::make_unique<SimAgent>(std::move(m), profiles));
  }
  return out;
}

void apply_scenario_alphas(const Scenario& s, FormationParams& params) {
  params.alpha.clear();
  AgentId id = 0;
  for (const auto& a : s.agents) {
    if (a.alpha) params.alpha[id] = *a.alpha;
    ++id;
  }
  if (!params.alpha.empty() &&
      static_cast<int>(params.alpha.size()) != s.n()) {
    throw std::invalid_argument(
        "agents: alpha must be scored for every agent or for none");
  }
}

}  // namespace teamform
