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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "teamform/engine.hpp"
#include "teamform/formation.hpp"
#include "teamform/metrics.hpp"
#include "teamform/oracle.hpp"
#include "teamform/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace teamform;

namespace {

struct ParamFlags {
  double epsilon = FormationParams{}.epsilon;
  double theta = FormationParams{}.theta;
  int tau = FormationParams{}.tau;
  double lambda = FormationParams{}.lambda;
  int eta = 0;  // 0: scenario default ceil(n/2)
  int exhaustive_limit = FormationParams{}.exhaustive_limit;

  void add_to(CLI::App& app) {
    app.add_option("--epsilon", epsilon,
                   "Pairwise alignment admission threshold");
    app.add_option("--theta", theta, "Misalignment ratio that arms reformation");
    app.add_option("--tau", tau,
                   "Consecutive over-threshold rounds before reforming");
    app.add_option("--lambda", lambda, "Weight of specialization scores");
    app.add_option("--eta", eta,
                   "Minimum team size (default: half the pool, rounded up)");
    app.add_option("--exhaustive-limit", exhaustive_limit,
                   "Largest pool searched exhaustively");
  }

  FormationParams resolve() const {
    FormationParams p;
    p.epsilon = epsilon;
    p.theta = theta;
    p.tau = tau;
    p.lambda = lambda;
    if (eta > 0) p.eta = eta;
    p.exhaustive_limit = exhaustive_limit;
    return p;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string policy_tag(Policy p) { return to_string(p); }

void print_report(std::ostream& out, const AggregateReport& report) {
  out << "scenario: " << report.scenario << "  pool: " << report.n
      << "  rounds: " << report.rounds_planned << "\n";
  for (const auto& s : report.policies) {
    out << "  policy " << policy_tag(s.policy) << ": " << s.episodes
        << " episode(s)";
    if (s.final_bas_n > 0) {
      out << ", final-round team alignment " << s.final_bas_mean << " +/- "
          << s.final_bas_std;
    }
    out << ", stability " << s.stability_mean << ", reforms " << s.reforms_mean
        << "\n";
  }
  if (report.ours_vs_random) {
    const auto& c = *report.ours_vs_random;
    out << "  ours - random (seed-paired, final round): " << c.mean_diff
        << " over " << c.pairs << " pair(s), t = " << c.t_statistic
        << ", one-sided p = " << c.p_value << "\n";
  }
}

int cmd_run(const std::string& scenario_path,
            const std::vector<std::string>& policy_names, int seeds,
            int rounds, const ParamFlags& flags,
            const std::string& counter_mode_name, int jobs,
            const std::string& output_dir) {
  Scenario scenario = load_scenario(scenario_path);
  FormationParams params = flags.resolve();
  apply_scenario_alphas(scenario, params);
  params.validate(scenario.n());

  std::vector<Policy> policies;
  for (const auto& name : policy_names) {
    policies.push_back(policy_from_string(name));
  }
  if (policies.empty()) policies.push_back(Policy::ours);

  CounterMode counter_mode;
  if (counter_mode_name == "per_round") {
    counter_mode = CounterMode::per_round;
  } else if (counter_mode_name == "accumulate") {
    counter_mode = CounterMode::accumulate;
  } else {
    throw std::invalid_argument("unknown counter mode: " + counter_mode_name +
                                " (expected per_round or accumulate)");
  }

  const int total = static_cast<int>(policies.size()) * seeds;
  std::vector<EpisodeLog> episodes(total);
  std::vector<std::string> errors(total);

#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
  // Episodes are independent and keyed by (policy, seed); the schedule
  // cannot change any result.
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < total; ++idx) {
    Policy policy = policies[idx / seeds];
    std::uint64_t seed = static_cast<std::uint64_t>(idx % seeds);
    EngineOptions options;
    options.policy = policy;
    options.rounds = rounds;
    options.seed = seed;
    options.counter_mode = counter_mode;
    try {
      episodes[idx] = run_episode(scenario, params, options);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }

  bool failed = false;
  for (int idx = 0; idx < total; ++idx) {
    if (errors[idx].empty()) continue;
    failed = true;
    std::cerr << "episode " << policy_tag(policies[idx / seeds]) << "/seed"
              << (idx % seeds) << ": " << errors[idx] << "\n";
  }
  if (failed) return 1;

  fs::path out(output_dir);
  fs::create_directories(out / "logs");
  write_text(out / "scenario.json", json(scenario).dump(2) + "\n");

  json run_params;
  run_params["params"] = params;
  run_params["rounds"] = rounds;
  run_params["seeds"] = seeds;
  run_params["counter_mode"] = counter_mode_name;
  json policy_list = json::array();
  for (Policy p : policies) policy_list.push_back(policy_tag(p));
  run_params["policies"] = policy_list;
  write_text(out / "params.json", run_params.dump(2) + "\n");

  for (int idx = 0; idx < total; ++idx) {
    const EpisodeLog& log = episodes[idx];
    fs::path name = out / "logs" /
                    (policy_tag(log.policy) + "_seed" +
                     std::to_string(log.seed) + ".json");
    write_text(name, json(log).dump(2) + "\n");
  }

  {
    std::ofstream csv(out / "rounds.csv", std::ios::binary);
    write_rounds_csv(csv, episodes);
  }
  AggregateReport report = aggregate(episodes);
  {
    std::ofstream csv(out / "summary.csv", std::ios::binary);
    write_summary_csv(csv, report);
  }
  print_report(std::cout, report);
  std::cout << "wrote " << total << " episode log(s) under " << out.string()
            << "\n";
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  try {
    Scenario s = load_scenario(scenario_path);
    std::cout << "ok: " << s.name << " (" << s.n() << " agents, dimension "
              << s.dimension << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 1;
  }
}

int cmd_oracle(const std::string& matrix_path, const ParamFlags& flags) {
  std::ifstream in(matrix_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << matrix_path << "\n";
    return 1;
  }
  json j = json::parse(in);
  AlignmentMatrix m = j.get<AlignmentMatrix>();
  FormationParams params = flags.resolve();
  oracle::Result result = oracle::best_team(m.size(), m, params);
  json out;
  out["team"] = result.team.members;
  out["welfare"] = result.welfare;
  out["stable"] = result.stable;
  out["epsilon_relaxed"] = result.epsilon_relaxed;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& logs_dir, const std::string& output_dir) {
  std::vector<EpisodeLog> episodes;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(logs_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    episodes.push_back(json::parse(in).get<EpisodeLog>());
  }
  if (episodes.empty()) {
    std::cerr << "no episode logs (*.json) under " << logs_dir << "\n";
    return 1;
  }
  AggregateReport report = aggregate(episodes);
  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    std::ofstream rounds(fs::path(output_dir) / "rounds.csv",
                         std::ios::binary);
    write_rounds_csv(rounds, episodes);
    std::ofstream summary(fs::path(output_dir) / "summary.csv",
                          std::ios::binary);
    write_summary_csv(summary, report);
  }
  print_report(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "teamform: belief-aware stable team formation for multi-agent pools"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run simulated episodes");
  std::string scenario_path;
  std::vector<std::string> policies;
  int seeds = 1;
  int rounds = 5;
  std::string counter_mode = "per_round";
  int jobs = 0;
  std::string output_dir = "out";
  ParamFlags run_flags;
  run->add_option("--scenario", scenario_path, "Scenario JSON file")
      ->required();
  run->add_option("--policy", policies,
                  "Reformation policy: ours, random or none (repeatable)");
  run->add_option("--seeds", seeds, "Number of seeds (0..N-1)")
      ->check(CLI::PositiveNumber);
  run->add_option("--rounds", rounds, "Interaction rounds per episode")
      ->check(CLI::PositiveNumber);
  run_flags.add_to(*run);
  run->add_option("--counter-mode", counter_mode,
                  "Misalignment counter: per_round or accumulate");
  run->add_option("--jobs", jobs, "Worker threads for the episode loop");
  run->add_option("--output-dir", output_dir, "Where to write logs and CSVs");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  std::string validate_path;
  validate->add_option("--scenario", validate_path, "Scenario JSON file")
      ->required();

  // oracle
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "Reference team search over an alignment matrix file");
  std::string matrix_path;
  ParamFlags oracle_flags;
  oracle_cmd
      ->add_option("--matrix", matrix_path,
                   "Matrix JSON: {n, round, scores: [[i,j,score]...]}")
      ->required();
  oracle_flags.add_to(*oracle_cmd);

  // report
  auto* report = app.add_subcommand("report", "Re-aggregate episode logs");
  std::string logs_dir;
  std::string report_out;
  report->add_option("--logs", logs_dir, "Directory of episode log JSONs")
      ->required();
  report->add_option("--output-dir", report_out,
                     "Optional directory for regenerated CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, policies, seeds, rounds, run_flags,
                     counter_mode, jobs, output_dir);
    }
    if (validate->parsed()) return cmd_validate(validate_path);
    if (oracle_cmd->parsed()) return cmd_oracle(matrix_path, oracle_flags);
    if (report->parsed()) return cmd_report(logs_dir, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
