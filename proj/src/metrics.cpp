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

#include "teamform/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "teamform/formation.hpp"

namespace teamform {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string render_team(const Team& team) {
  std::string out;
  for (AgentId id : team.members) {
    if (!out.empty()) out += '+';
    out += std::to_string(id + 1);  // reports are 1-based
  }
  return out;
}

int policy_rank(Policy p) {
  switch (p) {
    case Policy::ours:
      return 0;
    case Policy::random:
      return 1;
    case Policy::none:
      return 2;
  }
  return 3;
}

// Stable order so aggregation depends only on the multiset of logs.
std::vector<const EpisodeLog*> sorted_logs(const std::vector<EpisodeLog>& logs) {
  std::vector<const EpisodeLog*> out;
  out.reserve(logs.size());
  for (const auto& l : logs) out.push_back(&l);
  std::stable_sort(out.begin(), out.end(),
                   [](const EpisodeLog* a, const EpisodeLog* b) {
                     int ra = policy_rank(a->policy), rb = policy_rank(b->policy);
                     if (ra != rb) return ra < rb;
                     return a->seed < b->seed;
                   });
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {kNan, kNan};
  double s = 0.0;
  for (double x : xs) s += x;
  double mean = s / xs.size();
  if (xs.size() < 2) return {mean, 0.0};
  double q = 0.0;
  for (double x : xs) q += (x - mean) * (x - mean);
  return {mean, std::sqrt(q / (xs.size() - 1))};
}

double log_welfare(const EpisodeLog& log, const RoundRecord& rec) {
  if (!rec.alignment_defined) return kNan;
  return social_welfare(rec.team, rec.matrix, log.params);
}

}  // namespace

double team_bas(const RoundRecord& record, bool self_term_in_mean) {
  if (!record.alignment_defined) {
    throw std::invalid_argument(
        "round " + std::to_string(record.round) +
        " has no alignment scores; team alignment is undefined");
  }
  double s = 0.0;
  for (AgentId i : record.team.members) {
    s += team_preference(i, record.team, record.matrix, self_term_in_mean);
  }
  return s / record.team.size();
}

std::string StabilityScore::render() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g/%d", value, total_rounds);
  return buf;
}

StabilityScore team_stability(const EpisodeLog& log) {
  StabilityScore score;
  score.total_rounds = log.final_state.round;
  if (log.final_state.lifetimes.empty()) {
    score.value = log.final_state.round;
    score.never_reformed = true;
  } else {
    double s = 0.0;
    for (int l : log.final_state.lifetimes) s += l;
    score.value = s / log.final_state.lifetimes.size();
  }
  return score;
}

AggregateReport aggregate(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("no episode logs to aggregate");
  AggregateReport report;
  report.scenario = logs.front().scenario;
  report.n = logs.front().n;
  report.rounds_planned = logs.front().rounds_planned;
  for (const auto& l : logs) {
    if (l.scenario != report.scenario) {
      throw std::invalid_argument("cannot aggregate mixed scenarios: \"" +
                                  report.scenario + "\" vs \"" + l.scenario +
                                  "\"");
    }
    if (l.n != report.n) {
      throw std::invalid_argument(
          "cannot aggregate mixed pool sizes: " + std::to_string(report.n) +
          " vs " + std::to_string(l.n));
    }
    if (l.rounds_planned != report.rounds_planned) {
      throw std::invalid_argument("cannot aggregate mixed round counts: " +
                                  std::to_string(report.rounds_planned) +
                                  " vs " + std::to_string(l.rounds_planned));
    }
  }

  auto order = sorted_logs(logs);
  for (Policy p : {Policy::ours, Policy::random, Policy::none}) {
    std::vector<const EpisodeLog*> group;
    for (const EpisodeLog* l : order) {
      if (l->policy == p) group.push_back(l);
    }
    if (group.empty()) continue;

    PolicySummary s;
    s.policy = p;
    s.episodes = static_cast<int>(group.size());
    s.bas_mean_by_round.assign(report.rounds_planned, kNan);
    s.bas_std_by_round.assign(report.rounds_planned, kNan);
    s.bas_n_by_round.assign(report.rounds_planned, 0);

    std::vector<std::vector<double>> by_round(report.rounds_planned);
    std::vector<double> finals, stabilities, reforms, tasks;
    for (const EpisodeLog* l : group) {
      for (const auto& rec : l->rounds) {
        if (rec.round < 1 || rec.round > report.rounds_planned) continue;
        if (rec.alignment_defined) {
          by_round[rec.round - 1].push_back(team_bas(rec));
        }
        if (rec.task_score) tasks.push_back(*rec.task_score);
      }
      if (l->metrics.final_bas) finals.push_back(*l->metrics.final_bas);
      stabilities.push_back(team_stability(*l).value);
      reforms.push_back(l->final_state.reform_count());
    }
    for (int r = 0; r < report.rounds_planned; ++r) {
      if (by_round[r].empty()) continue;
      auto [m, sd] = mean_std(by_round[r]);
      s.bas_mean_by_round[r] = m;
      s.bas_std_by_round[r] = sd;
      s.bas_n_by_round[r] = static_cast<int>(by_round[r].size());
    }
    auto [fm, fsd] = mean_std(finals);
    s.final_bas_mean = fm;
    s.final_bas_std = fsd;
    s.final_bas_n = static_cast<int>(finals.size());
    auto [sm, ssd] = mean_std(stabilities);
    s.stability_mean = sm;
    s.stability_std = ssd;
    s.reforms_mean = mean_std(reforms).first;
    auto [tm, tsd] = mean_std(tasks);
    (void)tsd;
    s.task_score_mean = tasks.empty() ? kNan : tm;
    s.task_score_n = static_cast<int>(tasks.size());
    report.policies.push_back(std::move(s));
  }

  // Seed-paired final-round comparison; first log per (policy, seed) wins.
  std::map<std::uint64_t, double> ours_final, random_final;
  for (const EpisodeLog* l : order) {
    if (!l->metrics.final_bas) continue;
    if (l->policy == Policy::ours) {
      ours_final.emplace(l->seed, *l->metrics.final_bas);
    } else if (l->policy == Policy::random) {
      random_final.emplace(l->seed, *l->metrics.final_bas);
    }
  }
  std::vector<double> diffs;
  for (const auto& [seed, v] : ours_final) {
    auto it = random_final.find(seed);
    if (it != random_final.end()) diffs.push_back(v - it->second);
  }
  if (!diffs.empty()) {
    PairedComparison cmp;
    cmp.pairs = static_cast<int>(diffs.size());
    auto [m, sd] = mean_std(diffs);
    cmp.mean_diff = m;
    cmp.std_diff = sd;
    if (diffs.size() < 2) {
      cmp.t_statistic = 0.0;
      cmp.p_value = 1.0;
    } else if (sd == 0.0) {
      cmp.t_statistic = m > 0 ? std::numeric_limits<double>::infinity()
                       : m < 0 ? -std::numeric_limits<double>::infinity()
                               : 0.0;
      cmp.p_value = m > 0 ? 0.0 : m < 0 ? 1.0 : 0.5;
    } else {
      cmp.t_statistic = m / (sd / std::sqrt(static_cast<double>(diffs.size())));
      cmp.p_value = 0.5 * std::erfc(cmp.t_statistic / std::sqrt(2.0));
    }
    report.ours_vs_random = cmp;
  }
  return report;
}

void write_rounds_csv(std::ostream& out, const std::vector<EpisodeLog>& logs) {
  out << "policy,seed,round,bas,c,team,welfare\n";
  for (const EpisodeLog* l : sorted_logs(logs)) {
    for (const auto& rec : l->rounds) {
      double bas = rec.alignment_defined ? team_bas(rec) : kNan;
      out << to_string(l->policy) << ',' << l->seed << ',' << rec.round << ','
          << fmt_double(bas) << ',' << rec.misaligned_pairs << ','
          << render_team(rec.team) << ',' << fmt_double(log_welfare(*l, rec))
          << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const AggregateReport& report) {
  out << "policy,metric,mean,stddev,n\n";
  for (const auto& s : report.policies) {
    std::string p = to_string(s.policy);
    for (int r = 0; r < report.rounds_planned; ++r) {
      if (s.bas_n_by_round[r] == 0) continue;
      out << p << ",bas_round_" << (r + 1) << ','
          << fmt_double(s.bas_mean_by_round[r]) << ','
          << fmt_double(s.bas_std_by_round[r]) << ',' << s.bas_n_by_round[r]
          << '\n';
    }
    out << p << ",final_bas," << fmt_double(s.final_bas_mean) << ','
        << fmt_double(s.final_bas_std) << ',' << s.final_bas_n << '\n';
    out << p << ",stability," << fmt_double(s.stability_mean) << ','
        << fmt_double(s.stability_std) << ',' << s.episodes << '\n';
    out << p << ",reforms," << fmt_double(s.reforms_mean) << ",0,"
        << s.episodes << '\n';
    out << p << ",task_score," << fmt_double(s.task_score_mean) << ",0,"
        << s.task_score_n << '\n';
  }
  if (report.ours_vs_random) {
    const auto& c = *report.ours_vs_random;
    out << "ours-random,final_bas_diff," << fmt_double(c.mean_diff) << ','
        << fmt_double(c.std_diff) << ',' << c.pairs << '\n';
    out << "ours-random,t_stat," << fmt_double(c.t_statistic) << ",0,"
        << c.pairs << '\n';
    out << "ours-random,p_value," << fmt_double(c.p_value) << ",0," << c.pairs
        << '\n';
  }
}

}  // namespace teamform
