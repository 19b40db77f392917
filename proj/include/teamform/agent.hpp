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
#include <vector>

#include "teamform/types.hpp"

namespace teamform {

/// What the episode engine needs from an agent. Simulated agents are pure
/// functions of the log and seed; agents backed by a chat endpoint implement
/// the same surface (and may throw on transport failure, which aborts the
/// round).
class Agent {
 public:
  virtual ~Agent() = default;

  virtual AgentId id() const = 0;
  virtual int tom_level() const = 0;

  virtual ActionVector act(const InteractionLog& log, int round,
                           std::uint64_t seed) = 0;

  /// Belief at the agent's own recursion depth about the given team.
  virtual Belief update_belief(const InteractionLog& log,
                               const std::vector<AgentId>& team) = 0;

  /// Self-scored alignment row (this agent as observer). Agents that return
  /// a value replace the numeric kernel for their row; the default (nullopt)
  /// keeps the kernel path.
  virtual std::optional<std::map<AgentId, double>> self_alignment(
      const Belief& own_belief, const std::map<AgentId, ActionVector>& actions,
      const std::vector<AgentId>& subjects) {
    (void)own_belief;
    (void)actions;
    (void)subjects;
    return std::nullopt;
  }
};

}  // namespace teamform
