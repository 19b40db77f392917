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

#include "teamform/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "teamform/alignment.hpp"
#include "teamform/formation.hpp"
#include "teamform/rng.hpp"
#include "teamform/scenario.hpp"

namespace teamform {

using nlohmann::json;

std::string to_string(Policy p) {
  switch (p) {
    case Policy::ours:
      return "ours";
    case Policy::random:
      return "random";
    case Policy::none:
      return "none";
  }
  return "ours";
}

Policy policy_from_string(const std::string& s) {
  if (s == "ours") return Policy::ours;
  if (s == "random") return Policy::random;
  if (s == "none") return Policy::none;
  throw std::invalid_argument("unknown policy: " + s +
                              " (expected ours, random or none)");
}

Engine::Engine(std::vector<std::unique_ptr<Agent>> agents,
               FormationParams params, EngineOptions options,
               std::string scenario_name)
    : agents_(std::move(agents)),
      params_(std::move(params)),
      options_(options),
      scenario_name_(std::move(scenario_name)),
      log_(static_cast<int>(agents_.size())),
      pool_matrix_(static_cast<int>(agents_.size()), 0) {
  int n = static_cast<int>(agents_.size());
  if (n < 2) throw std::invalid_argument("an episode needs at least two agents");
  for (int i = 0; i < n; ++i) {
    if (!agents_[i] || agents_[i]->id() != i) {
      throw std::invalid_argument("agents must be keyed 0..n-1 in order");
    }
  }
  params_.validate(n);
  if (options_.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  std::vector<AgentId> all(n);
  std::iota(all.begin(), all.end(), 0);
  state_.current_team = Team(all);
}

RoundRecord Engine::run_round() {
  int round = state_.round + 1;
  const Team& team = state_.current_team;

  // Beliefs first: they inform this round's action and are scored against it.
  std::map<AgentId, Belief> beliefs;
  bool have_history = true;
  for (AgentId i : team.members) {
    if (log_.rounds_observed_by(i).empty()) {
      have_history = false;
      break;
    }
  }
  if (have_history) {
    for (AgentId i : team.members) {
      beliefs.emplace(i, agents_[i]->update_belief(log_, team.members));
    }
  }

  std::map<AgentId, ActionVector> actions;
  for (AgentId i : team.members) {
    actions.emplace(
        i, agents_[i]->act(log_, round, derive_seed(options_.seed, i, round)));
  }

  RoundRecord rec;
  rec.round = round;
  rec.team = team;
  rec.actions = actions;

  if (have_history) {
    AlignmentMatrix m(log_.pool_size(), round);
    for (AgentId i : team.members) {
      auto row = agents_[i]->self_alignment(beliefs.at(i), actions,
                                            team.members);
      if (row) {
        for (AgentId j : team.members) {
          if (i == j) continue;
          auto it = row->find(j);
          if (it == row->end()) {
            throw std::runtime_error("self-scored alignment row of agent " +
                                     std::to_string(i) + " misses subject " +
                                     std::to_string(j));
          }
          m.set(i, j, it->second);
        }
      } else {
        for (AgentId j : team.members) {
          if (i == j) continue;
          m.set(i, j,
                cosine_alignment(beliefs.at(i).predictions.at(j),
                                 actions.at(j)));
        }
      }
    }
    rec.matrix = m;
    rec.alignment_defined = true;

    int c = 0;
    double err = 0.0;
    int pairs = 0;
    for (AgentId i : team.members) {
      for (AgentId j : team.members) {
        if (i == j) continue;
        if (m.at(i, j) < params_.epsilon) ++c;
        const auto& pred = beliefs.at(i).predictions.at(j);
        const auto& act = actions.at(j);
        double d2 = 0.0;
        for (int k = 0; k < act.dim(); ++k) {
          double d = pred.values[k] - act.values[k];
          d2 += d * d;
        }
        err += std::sqrt(d2);
        ++pairs;
      }
    }
    rec.misaligned_pairs = c;
    if (pairs > 0) rec.task_score = -err / pairs;
    for (AgentId i : team.members) {
      rec.member_preference[i] =
          team_preference(i, team, m, params_.self_term_in_mean);
    }
    for (const auto& [i, j, v] : m.entries()) pool_matrix_.set(i, j, v);
  } else {
    rec.matrix = AlignmentMatrix(log_.pool_size(), round);
  }

  log_.record_round(round, actions);
  state_.round = round;
  if (options_.counter_mode == CounterMode::per_round) {
    state_.misalign_count = rec.misaligned_pairs;
  } else {
    state_.misalign_count += rec.misaligned_pairs;
  }
  return rec;
}

std::optional<Team> Engine::maybe_reform(RoundRecord& record) {
  if (options_.policy == Policy::none) return std::nullopt;
  double ratio = static_cast<double>(state_.misalign_count) /
                 state_.current_team.size();
  if (ratio > params_.theta) {
    ++state_.consecutive_over_threshold;
  } else {
    state_.consecutive_over_threshold = 0;
  }
  if (state_.consecutive_over_threshold < params_.tau) return std::nullopt;

  Team old_team = state_.current_team;
  Team next;
  if (options_.policy == Policy::ours) {
    next = optimal_team(log_.pool_size(), pool_matrix_, params_).team;
  } else {
    next = random_team(log_.pool_size(),
                       std::max(params_.resolved_eta(log_.pool_size()), 2),
                       derive_seed(options_.seed, 0x7e401, state_.round));
  }
  state_.lifetimes.push_back(state_.round - state_.team_since_round + 1);
  state_.reformations.push_back(Reformation{state_.round, old_team, next});
  state_.current_team = next;
  state_.team_since_round = state_.round + 1;
  state_.misalign_count = 0;
  state_.consecutive_over_threshold = 0;
  record.reformed = true;
  return next;
}

EpisodeLog Engine::run_episode() {
  EpisodeLog log;
  log.scenario = scenario_name_;
  log.policy = options_.policy;
  log.seed = options_.seed;
  log.n = log_.pool_size();
  log.rounds_planned = options_.rounds;
  log.params = params_;

  for (int r = 0; r < options_.rounds; ++r) {
    RoundRecord rec;
    try {
      rec = run_round();
    } catch (const std::exception&) {
      log.aborted_at_round = state_.round + 1;
      break;
    }
    maybe_reform(rec);
    log.rounds.push_back(std::move(rec));
  }

  log.final_state = state_;
  int total = state_.round;
  if (state_.reformations.empty()) {
    log.metrics.team_stability = total;
    log.metrics.never_reformed = true;
  } else {
    double s = 0.0;
    for (int l : state_.lifetimes) s += l;
    log.metrics.team_stability = s / state_.lifetimes.size();
  }
  if (!log.rounds.empty() && log.rounds.back().alignment_defined) {
    const auto& prefs = log.rounds.back().member_preference;
    double s = 0.0;
    for (const auto& [id, p] : prefs) s += p;
    log.metrics.final_bas = s / prefs.size();
  }
  return log;
}

EpisodeLog run_episode(const Scenario& scenario, FormationParams params,
                       const EngineOptions& options) {
  apply_scenario_alphas(scenario, params);
  Engine engine(make_sim_agents(scenario), std::move(params), options,
                scenario.name);
  return engine.run_episode();
}

// --- JSON ---

namespace {

template <typename T>
json id_map_to_json(const std::map<AgentId, T>& m) {
  json j = json::object();
  for (const auto& [id, v] : m) j[std::to_string(id)] = v;
  return j;
}

template <typename T>
std::map<AgentId, T> id_map_from_json(const json& j) {
  std::map<AgentId, T> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[std::stoi(it.key())] = it.value().get<T>();
  }
  return out;
}

}  // namespace

void to_json(json& j, const RoundRecord& r) {
  j = json{{"round", r.round},
           {"team", r.team},
           {"actions", id_map_to_json(r.actions)},
           {"matrix", r.matrix},
           {"alignment_defined", r.alignment_defined},
           {"misaligned_pairs", r.misaligned_pairs},
           {"member_preference", id_map_to_json(r.member_preference)},
           {"reformed", r.reformed}};
  if (r.task_score) j["task_score"] = *r.task_score;
}

void from_json(const json& j, RoundRecord& r) {
  r.round = j.at("round").get<int>();
  r.team = j.at("team").get<Team>();
  r.actions = id_map_from_json<ActionVector>(j.at("actions"));
  r.matrix = j.at("matrix").get<AlignmentMatrix>();
  r.alignment_defined = j.at("alignment_defined").get<bool>();
  r.misaligned_pairs = j.at("misaligned_pairs").get<int>();
  r.member_preference = id_map_from_json<double>(j.at("member_preference"));
  r.reformed = j.at("reformed").get<bool>();
  r.task_score.reset();
  if (j.contains("task_score")) r.task_score = j.at("task_score").get<double>();
}

void to_json(json& j, const EpisodeLog& l) {
  j = json{{"scenario", l.scenario},
           {"policy", to_string(l.policy)},
           {"seed", l.seed},
           {"n", l.n},
           {"rounds_planned", l.rounds_planned},
           {"params", l.params},
           {"rounds", l.rounds},
           {"final_state", l.final_state},
           {"metrics",
            json{{"team_stability", l.metrics.team_stability},
                 {"never_reformed", l.metrics.never_reformed}}}};
  if (l.metrics.final_bas) j["metrics"]["final_bas"] = *l.metrics.final_bas;
  if (l.aborted_at_round) j["aborted_at_round"] = *l.aborted_at_round;
}

void from_json(const json& j, EpisodeLog& l) {
  l.scenario = j.at("scenario").get<std::string>();
  l.policy = policy_from_string(j.at("policy").get<std::string>());
  l.seed = j.at("seed").get<std::uint64_t>();
  l.n = j.at("n").get<int>();
  l.rounds_planned = j.at("rounds_planned").get<int>();
  l.params = j.at("params").get<FormationParams>();
  l.rounds = j.at("rounds").get<std::vector<RoundRecord>>();
  l.final_state = j.at("final_state").get<EngineState>();
  l.metrics = EpisodeMetrics{};
  l.metrics.team_stability = j.at("metrics").at("team_stability").get<double>();
  l.metrics.never_reformed = j.at("metrics").at("never_reformed").get<bool>();
  if (j.at("metrics").contains("final_bas")) {
    l.metrics.final_bas = j.at("metrics").at("final_bas").get<double>();
  }
  l.aborted_at_round.reset();
  if (j.contains("aborted_at_round")) {
    l.aborted_at_round = j.at("aborted_at_round").get<int>();
  }
}

}  // namespace teamform
