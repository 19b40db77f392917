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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "teamform/agent.hpp"
#include "teamform/sim_agents.hpp"
#include "teamform/types.hpp"

namespace teamform {

/// Names of the environment variables a chat-backed scenario reads its
/// endpoint from, plus prompt context. Presence of this block alone does not
/// switch an episode to the endpoint; the caller opts in.
struct AdapterBlock {
  std::string endpoint_env = "TEAMFORM_LLM_URL";
  std::string key_env = "TEAMFORM_LLM_KEY";
  std::string model_env = "TEAMFORM_LLM_MODEL";
  double temperature = 0.0;
  std::string task;
  bool operator==(const AdapterBlock&) const = default;
};

struct ScenarioAgent {
  std::vector<double> latent;
  double rho = 0.0;
  double noise_sd = 0.0;
  int tom_level = 1;
  bool defector = false;
  std::optional<double> alpha;
  std::optional<std::string> role;
  bool operator==(const ScenarioAgent&) const = default;
};

/// A complete experiment description: the agent pool and, optionally, how to
/// reach a chat endpoint. Agent ids are the array positions.
struct Scenario {
  std::string name;
  int dimension = 1;
  std::vector<ScenarioAgent> agents;
  std::optional<AdapterBlock> adapter;

  int n() const { return static_cast<int>(agents.size()); }
  bool operator==(const Scenario&) const = default;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// Parses and validates; throws std::invalid_argument naming the offending
/// field (e.g. "agents[2].latent: expected 3 entries, got 2").
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& j);
void validate_scenario(const Scenario& s);

/// The scenario's agents as simulation models (ids = positions).
std::vector<SimAgentModel> scenario_models(const Scenario& s);

/// Simulated closed-loop agents for the scenario.
std::vector<std::unique_ptr<Agent>> make_sim_agents(const Scenario& s);

/// Copies per-agent alpha scores into params.alpha. Scenarios must score
/// either every agent or none.
void apply_scenario_alphas(const Scenario& s, FormationParams& params);

}  // namespace teamform
