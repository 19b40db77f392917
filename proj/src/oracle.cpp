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

#include "teamform/oracle.hpp"

#include <stdexcept>
#include <vector>

namespace teamform::oracle {

namespace {

using Members = std::vector<AgentId>;

void subsets_rec(int n, int from, Members& cur,
                 std::vector<Members>& out) {
  if (from == n) {
    out.push_back(cur);
    return;
  }
  subsets_rec(n, from + 1, cur, out);
  cur.push_back(from);
  subsets_rec(n, from + 1, cur, out);
  cur.pop_back();
}

std::vector<Members> all_subsets(int n) {
  std::vector<Members> out;
  Members cur;
  subsets_rec(n, 0, cur, out);
  return out;
}

bool alpha_active(const FormationParams& p) {
  return p.lambda > 0.0 && !p.alpha.empty();
}

double alpha_mean(const Members& t, const FormationParams& p) {
  double s = 0.0;
  for (AgentId j : t) {
    auto it = p.alpha.find(j);
    if (it == p.alpha.end()) {
      throw std::invalid_argument("alpha missing for agent " +
                                  std::to_string(j));
    }
    s += it->second;
  }
  return s / static_cast<double>(t.size());
}

double preference(AgentId i, const Members& t, const AlignmentMatrix& m,
                  const FormationParams& p) {
  double s = 0.0;
  for (AgentId j : t) {
    if (j != i) s += m.at(i, j);
  }
  double denom = p.self_term_in_mean ? static_cast<double>(t.size())
                                     : static_cast<double>(t.size() - 1);
  double pref = s / denom;
  if (alpha_active(p)) pref += p.lambda * alpha_mean(t, p);
  return pref;
}

double welfare(const Members& t, const AlignmentMatrix& m,
               const FormationParams& p) {
  double w = 0.0;
  for (AgentId i : t) {
    double s = 0.0;
    for (AgentId j : t) {
      if (j != i) s += m.at(i, j);
    }
    double denom = p.self_term_in_mean ? static_cast<double>(t.size())
                                       : static_cast<double>(t.size() - 1);
    w += s / denom;
  }
  if (alpha_active(p)) {
    double bonus = p.lambda * alpha_mean(t, p);
    if (p.per_member_alpha_welfare) bonus *= static_cast<double>(t.size());
    w += bonus;
  }
  return w;
}

bool eps_pass(const Members& t, const AlignmentMatrix& m, double eps) {
  for (AgentId i : t) {
    for (AgentId j : t) {
      if (i != j && m.at(i, j) < eps) return false;
    }
  }
  return true;
}

bool is_proper_subset(const Members& c, const Members& t) {
  if (c.size() >= t.size()) return false;
  std::size_t k = 0;
  for (AgentId x : t) {
    if (k < c.size() && c[k] == x) ++k;
  }
  return k == c.size();
}

bool has_blocker(const Members& t, const std::vector<Members>& subsets,
                 const AlignmentMatrix& m, const FormationParams& p,
                 int floor) {
  for (const Members& c : subsets) {
    if (static_cast<int>(c.size()) < floor) continue;
    if (!is_proper_subset(c, t)) continue;
    bool all_better = true;
    for (AgentId i : c) {
      if (!(preference(i, c, m, p) > preference(i, t, m, p))) {
        all_better = false;
        break;
      }
    }
    if (all_better) return true;
  }
  return false;
}

bool wins(double w_new, const Members& t_new, double w_old,
          const Members& t_old) {
  if (w_new != w_old) return w_new > w_old;
  if (t_new.size() != t_old.size()) return t_new.size() > t_old.size();
  return t_new < t_old;
}

}  // namespace

Result best_team(int n, const AlignmentMatrix& m,
                 const FormationParams& params) {
  params.validate(n);
  if (n < 2) throw std::invalid_argument("pool must have at least two agents");
  int eta = params.resolved_eta(n);
  int floor = eta < 2 ? 2 : eta;

  std::vector<Members> subsets = all_subsets(n);
  std::vector<const Members*> candidates;
  for (const Members& t : subsets) {
    if (static_cast<int>(t.size()) >= floor) candidates.push_back(&t);
  }

  auto pick = [&](bool need_eps, bool need_stable) {
    const Members* best = nullptr;
    double best_w = 0.0;
    for (const Members* t : candidates) {
      if (need_eps && !eps_pass(*t, m, params.epsilon)) continue;
      if (need_stable && has_blocker(*t, subsets, m, params, floor)) continue;
      double w = welfare(*t, m, params);
      if (best == nullptr || wins(w, *t, best_w, *best)) {
        best = t;
        best_w = w;
      }
    }
    return std::pair<const Members*, double>(best, best_w);
  };

  auto strict = pick(true, true);
  if (strict.first != nullptr) {
    return Result{Team(*strict.first), strict.second, true, false};
  }
  auto stable_only = pick(false, true);
  if (stable_only.first != nullptr) {
    return Result{Team(*stable_only.first), stable_only.second, true, true};
  }
  auto any = pick(false, false);
  if (any.first == nullptr) throw std::runtime_error("no candidate team exists");
  return Result{Team(*any.first), any.second, false, true};
}

}  // namespace teamform::oracle
