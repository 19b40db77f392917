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

#include "teamform/types.hpp"

namespace teamform {

/// How the returned team relates to the no-blocking-subgroup condition.
enum class StabilityStatus {
  stable,             // certified: no admissible subgroup strictly improves
  unstable_fallback,  // welfare maximizer returned without the certificate
  unverified,         // heuristic result too large to certify exhaustively
};

struct FormationOutcome {
  Team team;
  double welfare = 0.0;
  /// Per-member preference under the active model (specialized when alphas
  /// are in play, plain mean alignment otherwise).
  std::map<AgentId, double> preferences;
  StabilityStatus stability = StabilityStatus::stable;
  /// Witness subgroup when the team is returned unstable.
  std::optional<Team> blocking;
  /// True when no team passed the pairwise epsilon filter and it was dropped.
  bool epsilon_relaxed = false;
  /// False when the greedy heuristic produced the result; such teams carry
  /// no optimality guarantee.
  bool exhaustive = true;
};

/// Mean alignment agent `i` assigns to the rest of the team. The self term
/// is excluded and the mean runs over |T|-1 others; the literal convention
/// (zero self term, divide by |T|) is available via `self_term_in_mean`.
/// Requires i in team and |T| >= 2.
double team_preference(AgentId i, const Team& team, const AlignmentMatrix& m,
                       bool self_term_in_mean = false);

/// team_preference plus lambda times the mean specialization score over all
/// team members (including i). An empty alpha map or lambda = 0 deactivates
/// the bonus; a partially specified alpha map is an error.
double specialized_preference(AgentId i, const Team& team,
                              const AlignmentMatrix& m,
                              const FormationParams& params);

/// Sum of member preferences. When specialization is active the alpha bonus
/// enters once per team (keeping team choice invariant under a uniform alpha
/// shift); `per_member_alpha_welfare` switches to the literal per-member sum.
double social_welfare(const Team& team, const AlignmentMatrix& m,
                      const FormationParams& params);

/// True when every ordered in-team pair scores at least epsilon (inclusive).
bool passes_epsilon(const Team& team, const AlignmentMatrix& m,
                    double epsilon);

/// A strict subgroup of size >= eta (and >= 2) in which every member strictly
/// improves its preference, if one exists; deterministically the smallest
/// such subgroup by (size, then lexicographic members). The epsilon filter
/// plays no role here.
std::optional<Team> find_blocking_coalition(const Team& team,
                                            const AlignmentMatrix& m,
                                            const FormationParams& params);

/// Welfare-maximizing team over all subsets of {0..n-1} of size >= eta (and
/// never below 2, since pairwise quantities need two members) that pass the
/// epsilon filter and admit no blocking subgroup. Ties break toward
/// larger size, then the lexicographically smallest member set. When no team
/// passes epsilon, the filter is dropped (flagged) but the stability
/// constraint is kept; when even that fails, the unconstrained welfare
/// maximizer is returned flagged unstable.
///
/// Exhaustive (OpenMP-parallel) up to params.exhaustive_limit agents; a
/// greedy heuristic labeled non-optimal handles larger pools. The matrix
/// must cover every ordered pair over the pool.
FormationOutcome optimal_team(int n, const AlignmentMatrix& m,
                              const FormationParams& params);

/// Same result as optimal_team, computed on a single thread. Kept as the
/// reference implementation for tests and benchmarks.
FormationOutcome optimal_team_serial(int n, const AlignmentMatrix& m,
                                     const FormationParams& params);

/// Uniformly random team of exactly eta members, deterministic in the seed.
Team random_team(int n, int eta, std::uint64_t seed);

}  // namespace teamform
