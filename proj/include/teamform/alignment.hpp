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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "teamform/types.hpp"

namespace teamform {

/// Cosine similarity between a predicted and an observed action, the default
/// belief-action alignment kernel. Exactly one all-zero vector scores 0.0
/// (neutral); two all-zero vectors are an error, as is a dimension mismatch.
double cosine_alignment(const ActionVector& predicted,
                        const ActionVector& actual);

/// An alignment kernel maps (predicted, actual) to a score in [-1, 1].
using AlignmentKernel =
    std::function<double(const ActionVector&, const ActionVector&)>;

/// Kernels are pluggable by name; "cosine" is registered at startup.
/// Throws std::out_of_range for unknown names.
AlignmentKernel alignment_kernel(const std::string& name);
void register_alignment_kernel(const std::string& name, AlignmentKernel k);

/// Scores every ordered in-team pair (observer i, subject j), i != j:
/// kernel(beliefs[i].predictions[j], actions[j]). Throws when a team member
/// lacks a belief, a prediction, or an action.
AlignmentMatrix build_alignment_matrix(
    const std::map<AgentId, Belief>& beliefs,
    const std::map<AgentId, ActionVector>& actions, const Team& team,
    int round, const AlignmentKernel& kernel = cosine_alignment);

/// What to do with a subject whose externally reported score is unusable.
enum class InvalidScorePolicy { error_out, substitute_neutral };

struct IngestedScores {
  std::map<AgentId, double> scores;
  std::vector<std::string> warnings;
  /// False when a required subject stayed unscored under error_out.
  bool valid = true;
};

/// Sanitizes self-reported alignment scores (e.g. from a chat endpoint)
/// before they enter a matrix: out-of-range values are clamped to [-1, 1]
/// with a warning; subjects in `expected` that are absent from `parsed` are
/// either substituted with neutral 0.0 or invalidate the row, per policy.
IngestedScores ingest_external_scores(
    const std::map<AgentId, double>& parsed,
    const std::vector<AgentId>& expected,
    InvalidScorePolicy policy = InvalidScorePolicy::error_out);

}  // namespace teamform
