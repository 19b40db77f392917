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

#include "teamform/formation.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "teamform/rng.hpp"

namespace teamform {

namespace {

using Mask = std::uint64_t;

int popcount(Mask m) { return std::popcount(m); }

/// Lexicographic order on the ascending member sequences of two masks.
bool lex_less(Mask a, Mask b) {
  while (a != 0 && b != 0) {
    int la = std::countr_zero(a);
    int lb = std::countr_zero(b);
    if (la != lb) return la < lb;
    a &= a - 1;
    b &= b - 1;
  }
  return a == 0 && b != 0;
}

/// Total order used to pick the winner: higher welfare, then larger size,
/// then lexicographically smaller member set.
bool better(double w1, Mask m1, double w2, Mask m2) {
  if (w1 != w2) return w1 > w2;
  int s1 = popcount(m1), s2 = popcount(m2);
  if (s1 != s2) return s1 > s2;
  return lex_less(m1, m2);
}

bool alphas_active(const FormationParams& p) {
  return p.lambda > 0.0 && !p.alpha.empty();
}

/// Dense view of the problem; all hot loops run on it. Sums always iterate
/// ids in ascending order so results are bit-identical across the public
/// entry points, the serial reference, and the parallel kernel.
struct DenseProblem {
  int n = 0;
  double epsilon = 0.0;
  int eta = 0;
  double lambda = 0.0;
  bool self_mean = false;
  bool per_member_welfare = false;
  bool use_alpha = false;
  std::vector<double> score;  // n*n, zero diagonal
  std::vector<double> alpha;  // n
  std::vector<Mask> bad;      // bad[i]: subjects i scores below epsilon

  double at(int i, int j) const { return score[static_cast<std::size_t>(i) * n + j]; }

  double alpha_mean(Mask t) const {
    double s = 0.0;
    for (Mask m = t; m != 0; m &= m - 1) s += alpha[std::countr_zero(m)];
    return s / popcount(t);
  }

  /// Plain mean alignment of member i within team t.
  double plain_pref(int i, Mask t) const {
    double s = 0.0;
    for (Mask m = t; m != 0; m &= m - 1) {
      int j = std::countr_zero(m);
      if (j != i) s += at(i, j);
    }
    int denom = self_mean ? popcount(t) : popcount(t) - 1;
    return s / denom;
  }

  /// Preference used in blocking comparisons (specialized when active).
  double pref(int i, Mask t) const {
    double p = plain_pref(i, t);
    if (use_alpha) p += lambda * alpha_mean(t);
    return p;
  }

  double welfare(Mask t) const {
    double w = 0.0;
    for (Mask m = t; m != 0; m &= m - 1) w += plain_pref(std::countr_zero(m), t);
    if (use_alpha) {
      double bonus = lambda * alpha_mean(t);
      w += per_member_welfare ? popcount(t) * bonus : bonus;
    }
    return w;
  }

  bool eps_ok(Mask t) const {
    for (Mask m = t; m != 0; m &= m - 1) {
      int i = std::countr_zero(m);
      if ((bad[i] & t) & ~(Mask{1} << i)) return false;
    }
    return true;
  }

  /// Smallest admissible strict subgroup size for blocking checks;
  /// preferences need at least two members.
  int block_floor() const { return std::max(eta, 2); }

  bool blocked(Mask t) const {
    int floor = block_floor();
    if (popcount(t) <= floor) return false;
    std::vector<double> base(n, 0.0);
    for (Mask m = t; m != 0; m &= m - 1) {
      int i = std::countr_zero(m);
      base[i] = pref(i, t);
    }
    for (Mask c = (t - 1) & t; c != 0; c = (c - 1) & t) {
      if (popcount(c) < floor) continue;
      bool all_better = true;
      for (Mask m = c; m != 0; m &= m - 1) {
        int i = std::countr_zero(m);
        if (!(pref(i, c) > base[i])) {
          all_better = false;
          break;
        }
      }
      if (all_better) return true;
    }
    return false;
  }
};

DenseProblem make_dense(int n, const AlignmentMatrix& m,
                        const FormationParams& params) {
  params.validate(n);
  if (n < 2) throw std::invalid_argument("formation needs at least two agents");
  if (n > 63) throw std::invalid_argument("pool too large for mask enumeration");
  int eta = params.resolved_eta(n);
  if (eta > n) throw std::invalid_argument("eta exceeds the pool size");

  DenseProblem d;
  d.n = n;
  d.epsilon = params.epsilon;
  // A team needs two members for any pairwise quantity to exist, so the
  // candidate floor never drops below 2 even when eta resolves to 1.
  d.eta = std::max(eta, 2);
  d.lambda = params.lambda;
  d.self_mean = params.self_term_in_mean;
  d.per_member_welfare = params.per_member_alpha_welfare;
  d.use_alpha = alphas_active(params);
  d.score.assign(static_cast<std::size_t>(n) * n, 0.0);
  d.alpha.assign(n, 0.0);
  d.bad.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d.score[static_cast<std::size_t>(i) * n + j] = m.at(i, j);
      if (m.at(i, j) < params.epsilon) d.bad[i] |= Mask{1} << j;
    }
  }
  if (d.use_alpha) {
    for (int i = 0; i < n; ++i) {
      auto it = params.alpha.find(i);
      if (it == params.alpha.end()) {
        throw std::invalid_argument("alpha missing for agent " +
                                    std::to_string(i) +
                                    " while specialization is active");
      }
      d.alpha[i] = it->second;
    }
  }
  return d;
}

struct ScanBest {
  bool found = false;
  double welfare = 0.0;
  Mask mask = 0;

  void offer(double w, Mask m) {
    if (!found || better(w, m, welfare, mask)) {
      found = true;
      welfare = w;
      mask = m;
    }
  }
  void merge(const ScanBest& o) {
    if (o.found) offer(o.welfare, o.mask);
  }
};

enum class Phase { eps_and_stable, stable_only, any };

bool admits(const DenseProblem& d, Mask t, Phase phase) {
  switch (phase) {
    case Phase::eps_and_stable:
      return d.eps_ok(t) && !d.blocked(t);
    case Phase::stable_only:
      return !d.blocked(t);
    case Phase::any:
      return true;
  }
  return false;
}

ScanBest scan_serial(const DenseProblem& d, Phase phase) {
  ScanBest best;
  Mask end = Mask{1} << d.n;
  for (Mask t = 1; t < end; ++t) {
    if (popcount(t) < d.eta) continue;
    if (!admits(d, t, phase)) continue;
    best.offer(d.welfare(t), t);
  }
  return best;
}

ScanBest scan_parallel(const DenseProblem& d, Phase phase) {
  ScanBest best;
  long long end = 1LL << d.n;
#pragma omp parallel
  {
    ScanBest local;
#pragma omp for schedule(dynamic, 4096) nowait
    for (long long t = 1; t < end; ++t) {
      Mask mask = static_cast<Mask>(t);
      if (popcount(mask) < d.eta) continue;
      if (!admits(d, mask, phase)) continue;
      local.offer(d.welfare(mask), mask);
    }
#pragma omp critical
    best.merge(local);
  }
  return best;
}

FormationOutcome finish(const AlignmentMatrix& m, const FormationParams& params,
                        const ScanBest& best, bool eps_relaxed,
                        StabilityStatus stability, bool exhaustive) {
  FormationOutcome out;
  out.team = Team::from_mask(best.mask);
  out.welfare = best.welfare;
  out.stability = stability;
  out.epsilon_relaxed = eps_relaxed;
  out.exhaustive = exhaustive;
  for (AgentId i : out.team.members) {
    out.preferences[i] = specialized_preference(i, out.team, m, params);
  }
  if (stability == StabilityStatus::unstable_fallback) {
    out.blocking = find_blocking_coalition(out.team, m, params);
  }
  return out;
}

FormationOutcome solve_exhaustive(int n, const AlignmentMatrix& m,
                                  const FormationParams& params,
                                  bool parallel) {
  DenseProblem d = make_dense(n, m, params);
  auto scan = [&](Phase ph) {
    return parallel ? scan_parallel(d, ph) : scan_serial(d, ph);
  };
  ScanBest best = scan(Phase::eps_and_stable);
  if (best.found) {
    return finish(m, params, best, false, StabilityStatus::stable, true);
  }
  best = scan(Phase::stable_only);
  if (best.found) {
    return finish(m, params, best, true, StabilityStatus::stable, true);
  }
  // Unreachable when eta >= 2: an eta-sized team has no admissible strict
  // subgroup, so phase two always finds a candidate. Kept for completeness.
  best = scan(Phase::any);
  return finish(m, params, best, true, StabilityStatus::unstable_fallback,
                true);
}

// Blocking checks cost 2^|T|; beyond this size the greedy result's
// certificate is reported unverified instead of stalling.
constexpr int kGreedyCertifyLimit = 26;

FormationOutcome solve_greedy(int n, const AlignmentMatrix& m,
                              const FormationParams& params) {
  DenseProblem d = make_dense(n, m, params);
  bool relaxed = false;

  auto best_pair = [&](bool require_eps) {
    ScanBest best;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Mask t = (Mask{1} << i) | (Mask{1} << j);
        if (require_eps && !d.eps_ok(t)) continue;
        best.offer(d.welfare(t), t);
      }
    }
    return best;
  };

  ScanBest seed = best_pair(true);
  if (!seed.found) {
    relaxed = true;
    seed = best_pair(false);
  }
  Mask team = seed.mask;

  auto try_grow = [&](bool require_improvement, bool respect_stability) {
    ScanBest step;
    double current = d.welfare(team);
    for (int a = 0; a < n; ++a) {
      Mask bit = Mask{1} << a;
      if (team & bit) continue;
      Mask t = team | bit;
      if (!relaxed && !d.eps_ok(t)) continue;
      if (respect_stability && popcount(t) <= kGreedyCertifyLimit &&
          d.blocked(t)) {
        continue;
      }
      double w = d.welfare(t);
      if (require_improvement && !(w > current)) continue;
      step.offer(w, t);
    }
    if (!step.found) return false;
    team = step.mask;
    return true;
  };

  // Reach the size floor first, shedding the epsilon filter and then the
  // stability guard if they would strand the team below eta.
  while (popcount(team) < d.eta) {
    if (try_grow(false, true)) continue;
    if (!relaxed) {
      relaxed = true;
      continue;
    }
    if (!try_grow(false, false)) {
      throw std::runtime_error("greedy heuristic could not reach eta members");
    }
  }
  while (popcount(team) < n && try_grow(true, true)) {
  }

  ScanBest chosen;
  chosen.offer(d.welfare(team), team);
  StabilityStatus status = StabilityStatus::unverified;
  if (popcount(team) <= kGreedyCertifyLimit) {
    status = d.blocked(team) ? StabilityStatus::unstable_fallback
                             : StabilityStatus::stable;
  }
  relaxed = relaxed || !d.eps_ok(team);
  return finish(m, params, chosen, relaxed, status, false);
}

void check_coverage(int n, const AlignmentMatrix& m) {
  if (m.size() < n) {
    throw std::invalid_argument("alignment matrix smaller than the pool");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && !m.has(i, j)) {
        throw std::invalid_argument("alignment matrix missing pair (" +
                                    std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

double team_preference(AgentId i, const Team& team, const AlignmentMatrix& m,
                       bool self_term_in_mean) {
  if (!team.contains(i)) {
    throw std::invalid_argument("agent is not a member of the team");
  }
  if (team.size() < 2) {
    throw std::invalid_argument("preference is undefined for a singleton team");
  }
  double s = 0.0;
  for (AgentId j : team.members) {
    if (j != i) s += m.at(i, j);
  }
  int denom = self_term_in_mean ? team.size() : team.size() - 1;
  return s / denom;
}

double specialized_preference(AgentId i, const Team& team,
                              const AlignmentMatrix& m,
                              const FormationParams& params) {
  double plain = team_preference(i, team, m, params.self_term_in_mean);
  if (!alphas_active(params)) return plain;
  double s = 0.0;
  for (AgentId j : team.members) {
    auto it = params.alpha.find(j);
    if (it == params.alpha.end()) {
      throw std::invalid_argument("alpha missing for agent " +
                                  std::to_string(j) +
                                  " while specialization is active");
    }
    s += it->second;
  }
  return plain + params.lambda * (s / team.size());
}

double social_welfare(const Team& team, const AlignmentMatrix& m,
                      const FormationParams& params) {
  double w = 0.0;
  for (AgentId i : team.members) {
    w += team_preference(i, team, m, params.self_term_in_mean);
  }
  if (alphas_active(params)) {
    double s = 0.0;
    for (AgentId j : team.members) {
      auto it = params.alpha.find(j);
      if (it == params.alpha.end()) {
        throw std::invalid_argument("alpha missing for agent " +
                                    std::to_string(j) +
                                    " while specialization is active");
      }
      s += it->second;
    }
    double bonus = params.lambda * (s / team.size());
    w += params.per_member_alpha_welfare ? team.size() * bonus : bonus;
  }
  return w;
}

bool passes_epsilon(const Team& team, const AlignmentMatrix& m,
                    double epsilon) {
  for (AgentId i : team.members) {
    for (AgentId j : team.members) {
      if (i != j && m.at(i, j) < epsilon) return false;
    }
  }
  return true;
}

std::optional<Team> find_blocking_coalition(const Team& team,
                                            const AlignmentMatrix& m,
                                            const FormationParams& params) {
  int eta = params.resolved_eta(m.size());
  int floor = std::max(eta, 2);
  if (team.size() <= floor) return std::nullopt;

  std::map<AgentId, double> base;
  for (AgentId i : team.members) {
    base[i] = specialized_preference(i, team, m, params);
  }

  std::optional<Team> best;
  Mask t = team.mask();
  for (Mask c = (t - 1) & t; c != 0; c = (c - 1) & t) {
    if (popcount(c) < floor) continue;
    Team cand = Team::from_mask(c);
    bool all_better = true;
    for (AgentId i : cand.members) {
      if (!(specialized_preference(i, cand, m, params) > base[i])) {
        all_better = false;
        break;
      }
    }
    if (!all_better) continue;
    if (!best || cand.size() < best->size() ||
        (cand.size() == best->size() && cand < *best)) {
      best = cand;
    }
  }
  return best;
}

FormationOutcome optimal_team(int n, const AlignmentMatrix& m,
                              const FormationParams& params) {
  check_coverage(n, m);
  if (n > params.exhaustive_limit) return solve_greedy(n, m, params);
  return solve_exhaustive(n, m, params, /*parallel=*/true);
}

FormationOutcome optimal_team_serial(int n, const AlignmentMatrix& m,
                                     const FormationParams& params) {
  check_coverage(n, m);
  if (n > params.exhaustive_limit) return solve_greedy(n, m, params);
  return solve_exhaustive(n, m, params, /*parallel=*/false);
}

Team random_team(int n, int eta, std::uint64_t seed) {
  if (eta < 1 || eta > n) {
    throw std::invalid_argument("random team size must lie in [1, n]");
  }
  std::vector<AgentId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < eta; ++i) {
    int j = i + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(eta);
  return Team(std::move(ids));
}

}  // namespace teamform
