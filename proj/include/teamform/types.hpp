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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace teamform {

/// Agents are numbered densely from 0 so coalitions can be enumerated as
/// bitmask subsets. Reports render ids 1-based; every machine format is
/// 0-based.
using AgentId = int;

/// One action: a fixed-dimension numeric vector, plus an optional free-text
/// payload for agents backed by a chat endpoint. All entries must be finite.
struct ActionVector {
  std::vector<double> values;
  std::optional<std::string> text;

  int dim() const { return static_cast<int>(values.size()); }
  bool operator==(const ActionVector&) const = default;
};

/// Throws std::invalid_argument if any entry is non-finite.
void validate_action(const ActionVector& a);

/// Shared record of who did what, round by round, together with which rounds
/// each agent was present for. Agents outside the active team neither act nor
/// observe, so their view simply stops growing.
class InteractionLog {
 public:
  InteractionLog() = default;
  explicit InteractionLog(int n);

  /// Appends one round. Rounds must be recorded in strictly increasing
  /// order; the actors named in `actions` are exactly the agents that both
  /// act and observe this round. All vectors must share one dimension.
  void record_round(int round, const std::map<AgentId, ActionVector>& actions);

  int pool_size() const { return n_; }
  int last_round() const;
  bool empty() const { return archive_.empty(); }

  const std::map<int, std::map<AgentId, ActionVector>>& archive() const {
    return archive_;
  }
  /// Rounds agent `i` was present for, ascending.
  const std::vector<int>& rounds_observed_by(AgentId i) const;

  /// (round, action) pairs of `subject` across the rounds `observer` was
  /// present for, ascending by round.
  std::vector<std::pair<int, ActionVector>> observed_actions(
      AgentId observer, AgentId subject) const;

  /// Actions recorded at `round` by agents other than `subject`, provided the
  /// observer was present. Empty when the round is outside the observer's
  /// view.
  std::vector<ActionVector> peer_actions_at(AgentId observer, int round,
                                            AgentId subject) const;

  bool operator==(const InteractionLog&) const = default;

 private:
  int n_ = 0;
  std::map<int, std::map<AgentId, ActionVector>> archive_;
  std::map<AgentId, std::vector<int>> views_;
};

/// A level-k belief held by `owner`: predicted next actions for each
/// teammate, and for k >= 1 a nested level-(k-1) belief per teammate modeling
/// that teammate's own view. `nested` is empty exactly when level == 0.
struct Belief {
  AgentId owner = 0;
  int level = 0;
  std::map<AgentId, ActionVector> predictions;
  std::map<AgentId, Belief> nested;

  bool operator==(const Belief&) const = default;
};

/// Throws std::invalid_argument when the nesting structure is malformed
/// (negative level, nested map size/level/owner out of contract).
void validate_belief(const Belief& b);

/// Belief-action alignment scores for one round: a square of ordered pairs
/// (observer, subject), observer != subject, each score in [-1, 1]. Entries
/// not yet scored are absent.
class AlignmentMatrix {
 public:
  AlignmentMatrix() = default;
  AlignmentMatrix(int n, int round);

  /// Throws std::invalid_argument on self-pairs, ids out of range, or scores
  /// outside [-1, 1].
  void set(AgentId observer, AgentId subject, double score);

  bool has(AgentId observer, AgentId subject) const;
  /// Throws std::out_of_range when the pair has no score.
  double at(AgentId observer, AgentId subject) const;

  int size() const { return n_; }
  int round() const { return round_; }
  /// Defined entries as (observer, subject, score), ascending.
  std::vector<std::tuple<AgentId, AgentId, double>> entries() const;

  bool operator==(const AlignmentMatrix& o) const;

 private:
  int n_ = 0;
  int round_ = 0;
  std::vector<double> scores_;  // n*n, NaN = absent
};

/// A coalition: sorted unique member ids.
struct Team {
  std::vector<AgentId> members;

  Team() = default;
  explicit Team(std::vector<AgentId> m);

  int size() const { return static_cast<int>(members.size()); }
  bool contains(AgentId i) const;

  /// Bitmask form; requires every member < 64.
  std::uint64_t mask() const;
  static Team from_mask(std::uint64_t mask);

  bool operator==(const Team&) const = default;
  /// Lexicographic on the sorted member sequence.
  bool operator<(const Team& o) const { return members < o.members; }
};

/// Knobs of the formation stage. `eta` empty means "half the pool, rounded
/// up". `alpha` empty disables the specialization term regardless of lambda;
/// when non-empty it must cover every agent the solver may select.
struct FormationParams {
  double epsilon = 0.2;
  double theta = 0.3;
  int tau = 1;
  double lambda = 1.0;
  std::optional<int> eta;
  std::map<AgentId, double> alpha;

  /// Literal mean convention: keep the self term (as zero) and divide by
  /// |T| instead of |T|-1.
  bool self_term_in_mean = false;
  /// Literal welfare aggregation: sum the per-member specialized preference
  /// (which multiplies the alpha bonus by team size) instead of adding the
  /// bonus once per team.
  bool per_member_alpha_welfare = false;
  /// Largest pool solved exhaustively; beyond it the greedy heuristic runs.
  int exhaustive_limit = 20;

  int resolved_eta(int n) const { return eta ? *eta : (n + 1) / 2; }
  /// Throws std::invalid_argument naming the offending field.
  void validate(int n) const;

  bool operator==(const FormationParams&) const = default;
};

struct Reformation {
  int round = 0;
  Team old_team;
  Team new_team;

  bool operator==(const Reformation&) const = default;
};

/// Mutable trajectory state of the reformation loop.
struct EngineState {
  Team current_team;
  int misalign_count = 0;
  int consecutive_over_threshold = 0;
  int round = 0;
  int team_since_round = 1;
  std::vector<Reformation> reformations;
  std::vector<int> lifetimes;

  int reform_count() const { return static_cast<int>(reformations.size()); }
  bool operator==(const EngineState&) const = default;
};

void to_json(nlohmann::json& j, const ActionVector& a);
void from_json(const nlohmann::json& j, ActionVector& a);
void to_json(nlohmann::json& j, const InteractionLog& l);
void from_json(const nlohmann::json& j, InteractionLog& l);
void to_json(nlohmann::json& j, const Belief& b);
void from_json(const nlohmann::json& j, Belief& b);
void to_json(nlohmann::json& j, const AlignmentMatrix& m);
void from_json(const nlohmann::json& j, AlignmentMatrix& m);
void to_json(nlohmann::json& j, const Team& t);
void from_json(const nlohmann::json& j, Team& t);
void to_json(nlohmann::json& j, const FormationParams& p);
void from_json(const nlohmann::json& j, FormationParams& p);
void to_json(nlohmann::json& j, const Reformation& r);
void from_json(const nlohmann::json& j, Reformation& r);
void to_json(nlohmann::json& j, const EngineState& s);
void from_json(const nlohmann::json& j, EngineState& s);

}  // namespace teamform
