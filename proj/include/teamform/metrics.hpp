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

#ifndef TEAMFORM_METRICS_HPP_
#define TEAMFORM_METRICS_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "teamform/engine.hpp"

namespace teamform {

/// Mean over team members of each member's mean alignment toward the others,
/// recomputed from the round's matrix. Throws if the round has no alignment.
double team_bas(const RoundRecord& record, bool self_term_in_mean = false);

/// Average team lifetime for an episode, rendered as "<value>/<rounds>".
struct StabilityScore {
  double value = 0.0;
  bool never_reformed = false;
  int total_rounds = 0;

  /// e.g. value 3.6 over 5 rounds renders as "3.6/5".
  std::string render() const;
};

StabilityScore team_stability(const EpisodeLog& log);

/// Per-policy episode statistics. Rounds with no alignment contribute nothing.
struct PolicySummary {
  Policy policy = Policy::ours;
  int episodes = 0;
  std::vector<double> bas_mean_by_round;  // NaN where no episode had alignment
  std::vector<double> bas_std_by_round;
  std::vector<int> bas_n_by_round;
  double final_bas_mean = 0.0;
  double final_bas_std = 0.0;
  int final_bas_n = 0;
  double stability_mean = 0.0;
  double stability_std = 0.0;
  double reforms_mean = 0.0;
  double task_score_mean = 0.0;
  int task_score_n = 0;
};

/// Seed-paired comparison of final-round team alignment, ours minus random.
struct PairedComparison {
  int pairs = 0;
  double mean_diff = 0.0;
  double std_diff = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // one-sided, H1: ours > random
};

struct AggregateReport {
  std::string scenario;
  int n = 0;
  int rounds_planned = 0;
  std::vector<PolicySummary> policies;  // fixed order: ours, random, none
  std::optional<PairedComparison> ours_vs_random;
};

/// Aggregates episode logs of one scenario. The result depends only on the
/// multiset of logs, not their order. Throws if logs mix scenarios, pool
/// sizes or planned round counts.
AggregateReport aggregate(const std::vector<EpisodeLog>& logs);

/// Writes one row per round per episode:
/// policy,seed,round,bas,c,team,welfare
/// Teams render 1-based joined with '+', e.g. "1+2+4"; bas and welfare are
/// "nan" on rounds with no alignment. Rows are sorted by (policy, seed,
/// round) so identical log sets produce identical bytes.
void write_rounds_csv(std::ostream& out, const std::vector<EpisodeLog>& logs);

/// Writes aggregated statistics: policy,metric,mean,stddev,n
void write_summary_csv(std::ostream& out, const AggregateReport& report);

}  // namespace teamform

#endif  // TEAMFORM_METRICS_HPP_
