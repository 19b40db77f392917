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
#include <vector>

#include "teamform/types.hpp"

namespace teamform {

/// Parametric agent for closed-loop simulation. A regular agent's action is
///   (1 - rho) * latent + rho * mean(others' previous-round actions) + noise
/// (pure latent plus noise on the first round). A defector instead plays its
/// latent with the sign flipped on even rounds, ignores the coupling, and
/// negates its belief predictions, which pins its alignment scores low.
struct SimAgentModel {
  AgentId id = 0;
  ActionVector latent;
  double rho = 0.0;       // in [0, 1)
  double noise_sd = 0.0;  // >= 0
  int tom_level = 1;      // in {0, 1, 2}
  bool defector = false;
};

/// Throws std::invalid_argument naming the offending field.
void validate_model(const SimAgentModel& m);

/// Public knowledge about a peer needed to apply its action rule; latents
/// stay private and must be estimated from history.
struct PeerProfile {
  AgentId id = 0;
  double rho = 0.0;
  bool defector = false;
};

std::map<AgentId, PeerProfile> profiles_of(
    const std::vector<SimAgentModel>& models);

/// The agent's action for `round`, deterministic given the seed. Noise draws
/// come from an agent-local stream, so results do not depend on who else
/// acts. Throws when the latent dimension disagrees with the log.
ActionVector sim_act(const SimAgentModel& m, const InteractionLog& log,
                     int round, std::uint64_t seed);

/// The agent's level-k belief about every other member of `team`, built only
/// from rounds the agent observed.
///
/// Level 0 predicts each teammate's historical mean action. Level k >= 1
/// applies the teammate's action rule: the latent estimate inverts the rule
/// per observed round (v = (a - rho * peer_mean) / (1 - rho), first round
/// taken as-is) and averages, which makes noiseless predictions exact from
/// the second round on; nested beliefs recurse one level down from each
/// teammate's viewpoint using the same observable data.
///
/// Throws when the agent has no completed round to learn from, or when
/// k exceeds the model's tom_level.
Belief sim_update_belief(const SimAgentModel& m, const InteractionLog& log,
                         int k, const std::vector<AgentId>& team,
                         const std::map<AgentId, PeerProfile>& profiles);

}  // namespace teamform
