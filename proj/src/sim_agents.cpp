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

#include "teamform/sim_agents.hpp"

#include <algorithm>
#include <stdexcept>

#include "teamform/rng.hpp"

namespace teamform {

void validate_model(const SimAgentModel& m) {
  if (m.id < 0) throw std::invalid_argument("model id must be >= 0");
  if (m.latent.values.empty()) {
    throw std::invalid_argument("model latent must be non-empty");
  }
  validate_action(m.latent);
  if (!(m.rho >= 0.0 && m.rho < 1.0)) {
    throw std::invalid_argument("model rho must lie in [0, 1)");
  }
  if (!(m.noise_sd >= 0.0)) {
    throw std::invalid_argument("model noise_sd must be >= 0");
  }
  if (m.tom_level < 0 || m.tom_level > 2) {
    throw std::invalid_argument("model tom_level must be 0, 1 or 2");
  }
}

std::map<AgentId, PeerProfile> profiles_of(
    const std::vector<SimAgentModel>& models) {
  std::map<AgentId, PeerProfile> out;
  for (const auto& m : models) {
    out[m.id] = PeerProfile{m.id, m.rho, m.defector};
  }
  return out;
}

namespace {

ActionVector mean_of(const std::vector<ActionVector>& vs) {
  ActionVector out;
  out.values.assign(vs.front().values.size(), 0.0);
  for (const auto& v : vs) {
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] += v.values[i];
    }
  }
  for (double& x : out.values) x /= static_cast<double>(vs.size());
  return out;
}

ActionVector apply_rule(double rho, const ActionVector& latent,
                        const std::vector<ActionVector>& peers) {
  if (peers.empty() || rho == 0.0) return ActionVector{latent.values, {}};
  ActionVector pm = mean_of(peers);
  ActionVector out;
  out.values.resize(latent.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (1.0 - rho) * latent.values[i] + rho * pm.values[i];
  }
  return out;
}

void check_dim(const SimAgentModel& m, const InteractionLog& log) {
  if (log.empty()) return;
  int d = log.archive().begin()->second.begin()->second.dim();
  if (m.latent.dim() != d) {
    throw std::invalid_argument("model dimension does not match the log");
  }
}

/// Historical mean of the subject's actions in the observer's view.
ActionVector empirical_mean(const InteractionLog& log, AgentId observer,
                            AgentId subject) {
  auto obs = log.observed_actions(observer, subject);
  if (obs.empty()) {
    throw std::runtime_error("no observed actions for agent " +
                             std::to_string(subject));
  }
  std::vector<ActionVector> vs;
  vs.reserve(obs.size());
  for (auto& [r, a] : obs) vs.push_back(a);
  return mean_of(vs);
}

/// Latent estimate that undoes the coupling: each observed action is
/// inverted through the subject's rule (first round is the latent itself),
/// then averaged. Falls back to the empirical mean when no round is
/// invertible.
ActionVector decoupled_estimate(const InteractionLog& log, AgentId observer,
                                AgentId subject, double subject_rho) {
  auto obs = log.observed_actions(observer, subject);
  if (obs.empty()) {
    throw std::runtime_error("no observed actions for agent " +
                             std::to_string(subject));
  }
  std::vector<ActionVector> terms;
  for (auto& [r, a] : obs) {
    if (r == 1 || subject_rho == 0.0) {
      terms.push_back(a);
      continue;
    }
    auto peers = log.peer_actions_at(observer, r - 1, subject);
    if (peers.empty()) continue;
    ActionVector pm = mean_of(peers);
    ActionVector t;
    t.values.resize(a.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      t.values[i] = (a.values[i] - subject_rho * pm.values[i]) /
                    (1.0 - subject_rho);
    }
    terms.push_back(t);
  }
  if (terms.empty()) return empirical_mean(log, observer, subject);
  return mean_of(terms);
}

const PeerProfile& profile_of(const std::map<AgentId, PeerProfile>& profiles,
                              AgentId id) {
  auto it = profiles.find(id);
  if (it == profiles.end()) {
    throw std::invalid_argument("no profile for agent " + std::to_string(id));
  }
  return it->second;
}

/// Level-k belief owned by `owner`, computed strictly from what `view`
/// observed. Nested beliefs keep the viewer fixed while the owner changes.
Belief belief_rec(AgentId view, AgentId owner, int k,
                  const std::vector<AgentId>& team,
                  const std::map<AgentId, PeerProfile>& profiles,
                  const InteractionLog& log) {
  Belief b;
  b.owner = owner;
  b.level = k;
  for (AgentId j : team) {
    if (j == owner) continue;
    if (k == 0) {
      b.predictions[j] = empirical_mean(log, view, j);
      continue;
    }
    const PeerProfile& pj = profile_of(profiles, j);
    ActionVector v_hat = decoupled_estimate(log, view, j, pj.rho);
    int last = log.rounds_observed_by(view).empty()
                   ? 0
                   : log.rounds_observed_by(view).back();
    auto peers = log.peer_actions_at(view, last, j);
    b.predictions[j] = apply_rule(pj.rho, v_hat, peers);
    b.nested.emplace(j, belief_rec(view, j, k - 1, team, profiles, log));
  }
  return b;
}

}  // namespace

ActionVector sim_act(const SimAgentModel& m, const InteractionLog& log,
                     int round, std::uint64_t seed) {
  validate_model(m);
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  check_dim(m, log);

  ActionVector out;
  if (m.defector) {
    double sign = (round % 2 == 1) ? 1.0 : -1.0;
    out.values.resize(m.latent.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = sign * m.latent.values[i];
    }
  } else {
    const auto& seen = log.rounds_observed_by(m.id);
    if (seen.empty()) {
      out = ActionVector{m.latent.values, {}};
    } else {
      auto peers = log.peer_actions_at(m.id, seen.back(), m.id);
      out = apply_rule(m.rho, m.latent, peers);
    }
  }
  if (m.noise_sd > 0.0) {
    Rng rng(seed);
    for (double& x : out.values) x += m.noise_sd * rng.gaussian();
  }
  return out;
}

Belief sim_update_belief(const SimAgentModel& m, const InteractionLog& log,
                         int k, const std::vector<AgentId>& team,
                         const std::map<AgentId, PeerProfile>& profiles) {
  validate_model(m);
  if (k < 0) throw std::invalid_argument("belief level must be >= 0");
  if (k > m.tom_level) {
    throw std::invalid_argument("belief level exceeds the agent's tom_level");
  }
  if (log.rounds_observed_by(m.id).empty()) {
    throw std::runtime_error("belief update requires one completed round");
  }
  check_dim(m, log);

  Belief b = belief_rec(m.id, m.id, k, team, profiles, log);
  if (m.defector) {
    for (auto& [id, p] : b.predictions) {
      for (double& x : p.values) x = -x;
    }
  }
  validate_belief(b);
  return b;
}

}  // namespace teamform
