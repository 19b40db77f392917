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
#include "teamform/types.hpp"

namespace teamform {

/// Team selection rule applied when the misalignment trigger fires.
enum class Policy { ours, random, none };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

/// How the misalignment counter treats earlier rounds: recomputed from the
/// current round's pairs (default), or accumulated across rounds until a
/// reformation resets it.
enum class CounterMode { per_round, accumulate };

struct EngineOptions {
  Policy policy = Policy::ours;
  int rounds = 5;
  std::uint64_t seed = 0;
  CounterMode counter_mode = CounterMode::per_round;
  bool operator==(const EngineOptions&) const = default;
};

/// Everything observable about one round.
struct RoundRecord {
  int round = 0;
  Team team;
  std::map<AgentId, ActionVector> actions;
  AlignmentMatrix matrix;
  /// False on the first round of an episode: beliefs need one completed
  /// round, so there is nothing to score yet.
  bool alignment_defined = false;
  /// Ordered in-team pairs scoring below epsilon this round.
  int misaligned_pairs = 0;
  /// Plain mean alignment per member (the round-level belief score).
  std::map<AgentId, double> member_preference;
  /// Synthetic task proxy: negative mean prediction error across ordered
  /// in-team pairs. Absent when alignment is undefined.
  std::optional<double> task_score;
  /// True when this round ended with the team being re-formed.
  bool reformed = false;

  bool operator==(const RoundRecord&) const = default;
};

struct EpisodeMetrics {
  double team_stability = 0.0;
  bool never_reformed = false;
  std::optional<double> final_bas;
  bool operator==(const EpisodeMetrics&) const = default;
};

struct EpisodeLog {
  std::string scenario;
  Policy policy = Policy::ours;
  std::uint64_t seed = 0;
  int n = 0;
  int rounds_planned = 0;
  FormationParams params;
  std::vector<RoundRecord> rounds;
  EngineState final_state;
  EpisodeMetrics metrics;
  /// Set when a member failed mid-round (e.g. endpoint timeout); the episode
  /// stops with the state as of the previous round.
  std::optional<int> aborted_at_round;

  bool operator==(const EpisodeLog&) const = default;
};

void to_json(nlohmann::json& j, const RoundRecord& r);
void from_json(const nlohmann::json& j, RoundRecord& r);
void to_json(nlohmann::json& j, const EpisodeLog& l);
void from_json(const nlohmann::json& j, EpisodeLog& l);

/// Drives one episode: each round the team members update beliefs, act, and
/// are scored pairwise; when the misaligned-pair ratio c/|T| stays above
/// theta for tau consecutive rounds, the team is re-formed per the policy
/// and the counters reset. Exposed stepwise so traces can be inspected.
class Engine {
 public:
  /// Agents must be keyed 0..n-1 in order. The initial team is the full pool.
  Engine(std::vector<std::unique_ptr<Agent>> agents, FormationParams params,
         EngineOptions options, std::string scenario_name = "");

  /// Runs the next round; returns its record and advances the state. Throws
  /// whatever an agent throws (transport failures included) without touching
  /// the state.
  RoundRecord run_round();

  /// Applies the reformation rule to a just-produced record. Returns the new
  /// team when a reformation happened.
  std::optional<Team> maybe_reform(RoundRecord& record);

  /// run_round + maybe_reform for options.rounds rounds, packaged as a log.
  EpisodeLog run_episode();

  const EngineState& state() const { return state_; }
  const InteractionLog& log() const { return log_; }

 private:
  std::vector<std::unique_ptr<Agent>> agents_;
  FormationParams params_;
  EngineOptions options_;
  std::string scenario_name_;
  EngineState state_;
  InteractionLog log_;
  /// Last known score for every ordered pool pair; reformation input.
  AlignmentMatrix pool_matrix_;
};

struct Scenario;

/// Builds simulated agents for the scenario and runs one full episode.
EpisodeLog run_episode(const Scenario& scenario, FormationParams params,
                       const EngineOptions& options);

}  // namespace teamform
