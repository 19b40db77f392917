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

#include "teamform/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace teamform {

using nlohmann::json;

void validate_action(const ActionVector& a) {
  if (a.values.empty()) {
    throw std::invalid_argument("action vector must have at least one entry");
  }
  for (double v : a.values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("action vector has a non-finite entry");
    }
  }
}

InteractionLog::InteractionLog(int n) : n_(n) {
  if (n < 0) throw std::invalid_argument("log pool size must be >= 0");
}

void InteractionLog::record_round(
    int round, const std::map<AgentId, ActionVector>& actions) {
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  if (round <= last_round()) {
    throw std::invalid_argument("rounds must be recorded in increasing order");
  }
  if (actions.empty()) throw std::invalid_argument("round has no actors");
  int dim = -1;
  if (!archive_.empty()) {
    dim = archive_.begin()->second.begin()->second.dim();
  }
  for (const auto& [id, a] : actions) {
    if (id < 0 || id >= n_) throw std::invalid_argument("actor id out of range");
    validate_action(a);
    if (dim < 0) dim = a.dim();
    if (a.dim() != dim) {
      throw std::invalid_argument("action dimension mismatch in log");
    }
  }
  archive_[round] = actions;
  for (const auto& [id, a] : actions) views_[id].push_back(round);
}

int InteractionLog::last_round() const {
  return archive_.empty() ? 0 : archive_.rbegin()->first;
}

const std::vector<int>& InteractionLog::rounds_observed_by(AgentId i) const {
  static const std::vector<int> kNone;
  auto it = views_.find(i);
  return it == views_.end() ? kNone : it->second;
}

std::vector<std::pair<int, ActionVector>> InteractionLog::observed_actions(
    AgentId observer, AgentId subject) const {
  std::vector<std::pair<int, ActionVector>> out;
  for (int r : rounds_observed_by(observer)) {
    auto round_it = archive_.find(r);
    if (round_it == archive_.end()) continue;
    auto it = round_it->second.find(subject);
    if (it != round_it->second.end()) out.emplace_back(r, it->second);
  }
  return out;
}

std::vector<ActionVector> InteractionLog::peer_actions_at(
    AgentId observer, int round, AgentId subject) const {
  std::vector<ActionVector> out;
  const auto& view = rounds_observed_by(observer);
  if (!std::binary_search(view.begin(), view.end(), round)) return out;
  auto round_it = archive_.find(round);
  if (round_it == archive_.end()) return out;
  for (const auto& [id, a] : round_it->second) {
    if (id != subject) out.push_back(a);
  }
  return out;
}

void validate_belief(const Belief& b) {
  if (b.level < 0) throw std::invalid_argument("belief level must be >= 0");
  if (b.level == 0 && !b.nested.empty()) {
    throw std::invalid_argument("level-0 belief must have no nested beliefs");
  }
  if (b.level > 0 && b.nested.size() != b.predictions.size()) {
    throw std::invalid_argument(
        "nested beliefs must cover exactly the predicted teammates");
  }
  for (const auto& [id, p] : b.predictions) {
    if (id == b.owner) {
      throw std::invalid_argument("belief predicts its own owner");
    }
    validate_action(p);
  }
  for (const auto& [id, nb] : b.nested) {
    if (nb.owner != id) {
      throw std::invalid_argument("nested belief owner mismatch");
    }
    if (nb.level != b.level - 1) {
      throw std::invalid_argument("nested belief level must be exactly k-1");
    }
    validate_belief(nb);
  }
}

AlignmentMatrix::AlignmentMatrix(int n, int round) : n_(n), round_(round) {
  if (n < 0) throw std::invalid_argument("matrix size must be >= 0");
  scores_.assign(static_cast<std::size_t>(n) * n,
                 std::numeric_limits<double>::quiet_NaN());
}

void AlignmentMatrix::set(AgentId i, AgentId j, double score) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) {
    throw std::invalid_argument("alignment pair id out of range");
  }
  if (i == j) throw std::invalid_argument("alignment has no self-pairs");
  if (!(score >= -1.0 && score <= 1.0)) {
    throw std::invalid_argument("alignment score outside [-1, 1]");
  }
  scores_[static_cast<std::size_t>(i) * n_ + j] = score;
}

bool AlignmentMatrix::has(AgentId i, AgentId j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || i == j) return false;
  return !std::isnan(scores_[static_cast<std::size_t>(i) * n_ + j]);
}

double AlignmentMatrix::at(AgentId i, AgentId j) const {
  if (!has(i, j)) {
    throw std::out_of_range("alignment score missing for pair (" +
                            std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  return scores_[static_cast<std::size_t>(i) * n_ + j];
}

std::vector<std::tuple<AgentId, AgentId, double>> AlignmentMatrix::entries()
    const {
  std::vector<std::tuple<AgentId, AgentId, double>> out;
  for (AgentId i = 0; i < n_; ++i) {
    for (AgentId j = 0; j < n_; ++j) {
      if (has(i, j)) out.emplace_back(i, j, at(i, j));
    }
  }
  return out;
}

bool AlignmentMatrix::operator==(const AlignmentMatrix& o) const {
  return n_ == o.n_ && round_ == o.round_ && entries() == o.entries();
}

Team::Team(std::vector<AgentId> m) : members(std::move(m)) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!members.empty() && members.front() < 0) {
    throw std::invalid_argument("team member id must be >= 0");
  }
}

bool Team::contains(AgentId i) const {
  return std::binary_search(members.begin(), members.end(), i);
}

std::uint64_t Team::mask() const {
  std::uint64_t m = 0;
  for (AgentId i : members) {
    if (i >= 64) throw std::invalid_argument("team member id exceeds mask width");
    m |= std::uint64_t{1} << i;
  }
  return m;
}

Team Team::from_mask(std::uint64_t mask) {
  Team t;
  for (int i = 0; i < 64; ++i) {
    if (mask & (std::uint64_t{1} << i)) t.members.push_back(i);
  }
  return t;
}

void FormationParams::validate(int n) const {
  if (!(epsilon >= -1.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [-1, 1]");
  }
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  int e = resolved_eta(n);
  if (e < 1) throw std::invalid_argument("eta must be >= 1");
  if (e > n) throw std::invalid_argument("eta exceeds the pool size");
  if (exhaustive_limit < 2 || exhaustive_limit > 24) {
    throw std::invalid_argument("exhaustive_limit must lie in [2, 24]");
  }
  for (const auto& [id, a] : alpha) {
    if (id < 0 || id >= n) {
      throw std::invalid_argument("alpha keyed by unknown agent id");
    }
    if (!(a >= 0.0 && a <= 1.0)) {
      throw std::invalid_argument("alpha values must lie in [0, 1]");
    }
  }
}

// --- JSON ---

namespace {

template <typename T>
std::map<AgentId, T> id_map_from_json(const json& j) {
  std::map<AgentId, T> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[std::stoi(it.key())] = it.value().get<T>();
  }
  return out;
}

template <typename T>
json id_map_to_json(const std::map<AgentId, T>& m) {
  json j = json::object();
  for (const auto& [id, v] : m) j[std::to_string(id)] = v;
  return j;
}

}  // namespace

void to_json(json& j, const ActionVector& a) {
  j = json{{"values", a.values}};
  if (a.text) j["text"] = *a.text;
}

void from_json(const json& j, ActionVector& a) {
  a.values = j.at("values").get<std::vector<double>>();
  a.text.reset();
  if (j.contains("text")) a.text = j.at("text").get<std::string>();
}

void to_json(json& j, const InteractionLog& l) {
  json rounds = json::array();
  for (const auto& [r, actions] : l.archive()) {
    rounds.push_back(json{{"round", r}, {"actions", id_map_to_json(actions)}});
  }
  j = json{{"n", l.pool_size()}, {"rounds", std::move(rounds)}};
}

void from_json(const json& j, InteractionLog& l) {
  l = InteractionLog(j.at("n").get<int>());
  for (const auto& entry : j.at("rounds")) {
    l.record_round(entry.at("round").get<int>(),
                   id_map_from_json<ActionVector>(entry.at("actions")));
  }
}

void to_json(json& j, const Belief& b) {
  j = json{{"owner", b.owner},
           {"level", b.level},
           {"predictions", id_map_to_json(b.predictions)}};
  if (!b.nested.empty()) j["nested"] = id_map_to_json(b.nested);
}

void from_json(const json& j, Belief& b) {
  b.owner = j.at("owner").get<AgentId>();
  b.level = j.at("level").get<int>();
  b.predictions = id_map_from_json<ActionVector>(j.at("predictions"));
  b.nested.clear();
  if (j.contains("nested")) b.nested = id_map_from_json<Belief>(j.at("nested"));
}

void to_json(json& j, const AlignmentMatrix& m) {
  json scores = json::array();
  for (const auto& [i, s, v] : m.entries()) {
    scores.push_back(json::array({i, s, v}));
  }
  j = json{{"n", m.size()}, {"round", m.round()}, {"scores", std::move(scores)}};
}

void from_json(const json& j, AlignmentMatrix& m) {
  m = AlignmentMatrix(j.at("n").get<int>(), j.at("round").get<int>());
  for (const auto& triple : j.at("scores")) {
    m.set(triple.at(0).get<AgentId>(), triple.at(1).get<AgentId>(),
          triple.at(2).get<double>());
  }
}

void to_json(json& j, const Team& t) { j = json{{"members", t.members}}; }

void from_json(const json& j, Team& t) {
  t = Team(j.at("members").get<std::vector<AgentId>>());
}

void to_json(json& j, const FormationParams& p) {
  j = json{{"epsilon", p.epsilon},
           {"theta", p.theta},
           {"tau", p.tau},
           {"lambda", p.lambda},
           {"alpha", id_map_to_json(p.alpha)},
           {"self_term_in_mean", p.self_term_in_mean},
           {"per_member_alpha_welfare", p.per_member_alpha_welfare},
           {"exhaustive_limit", p.exhaustive_limit}};
  j["eta"] = p.eta ? json(*p.eta) : json(nullptr);
}

void from_json(const json& j, FormationParams& p) {
  p = FormationParams{};
  p.epsilon = j.at("epsilon").get<double>();
  p.theta = j.at("theta").get<double>();
  p.tau = j.at("tau").get<int>();
  p.lambda = j.at("lambda").get<double>();
  if (j.contains("eta") && !j.at("eta").is_null()) p.eta = j.at("eta").get<int>();
  if (j.contains("alpha")) p.alpha = id_map_from_json<double>(j.at("alpha"));
  if (j.contains("self_term_in_mean")) {
    p.self_term_in_mean = j.at("self_term_in_mean").get<bool>();
  }
  if (j.contains("per_member_alpha_welfare")) {
    p.per_member_alpha_welfare = j.at("per_member_alpha_welfare").get<bool>();
  }
  if (j.contains("exhaustive_limit")) {
    p.exhaustive_limit = j.at("exhaustive_limit").get<int>();
  }
}

void to_json(json& j, const Reformation& r) {
  j = json{{"round", r.round}, {"old_team", r.old_team}, {"new_team", r.new_team}};
}

void from_json(const json& j, Reformation& r) {
  r.round = j.at("round").get<int>();
  r.old_team = j.at("old_team").get<Team>();
  r.new_team = j.at("new_team").get<Team>();
}

void to_json(json& j, const EngineState& s) {
  j = json{{"current_team", s.current_team},
           {"misalign_count", s.misalign_count},
           {"consecutive_over_threshold", s.consecutive_over_threshold},
           {"round", s.round},
           {"team_since_round", s.team_since_round},
           {"reformations", s.reformations},
           {"lifetimes", s.lifetimes},
           {"reform_count", s.reform_count()}};
}

void from_json(const json& j, EngineState& s) {
  s.current_team = j.at("current_team").get<Team>();
  s.misalign_count = j.at("misalign_count").get<int>();
  s.consecutive_over_threshold = j.at("consecutive_over_threshold").get<int>();
  s.round = j.at("round").get<int>();
  s.team_since_round = j.at("team_since_round").get<int>();
  s.reformations = j.at("reformations").get<std::vector<Reformation>>();
  s.lifetimes = j.at("lifetimes").get<std::vector<int>>();
  if (j.contains("reform_count") &&
      j.at("reform_count").get<int>() != s.reform_count()) {
    throw std::invalid_argument("reform_count does not match reformations");
  }
}

}  // namespace teamform
