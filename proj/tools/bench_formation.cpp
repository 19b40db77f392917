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

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "teamform/formation.hpp"
#include "teamform/oracle.hpp"
#include "teamform/rng.hpp"

using namespace teamform;

namespace {

AlignmentMatrix random_matrix(int n, std::uint64_t seed) {
  AlignmentMatrix m(n, 1);
  Rng rng(seed);
  for (AgentId i = 0; i < n; ++i) {
    for (AgentId j = 0; j < n; ++j) {
      if (i != j) m.set(i, j, rng.uniform(-1.0, 1.0));
    }
  }
  return m;
}

template <typename F>
double time_ms(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

bool same(const FormationOutcome& a, const FormationOutcome& b) {
  return a.team == b.team && a.welfare == b.welfare &&
         a.stability == b.stability && a.epsilon_relaxed == b.epsilon_relaxed;
}

bool same(const FormationOutcome& a, const oracle::Result& b) {
  bool a_stable = a.stability == StabilityStatus::stable;
  return a.team == b.team && a.welfare == b.welfare && a_stable == b.stable &&
         a.epsilon_relaxed == b.epsilon_relaxed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Times the parallel team search against the serial switch and the "
      "reference implementation"};
  int n = 12;
  int instances = 5;
  bool check = false;
  double epsilon = 0.2;
  int eta = 0;
  app.add_option("--n", n, "Pool size")->check(CLI::Range(2, 24));
  app.add_option("--instances", instances, "Random matrices to solve")
      ->check(CLI::PositiveNumber);
  app.add_flag("--check", check,
               "Require all three implementations to agree exactly");
  app.add_option("--epsilon", epsilon, "Pairwise admission threshold");
  app.add_option("--eta", eta, "Minimum team size (default ceil(n/2))");
  CLI11_PARSE(app, argc, argv);

  FormationParams params;
  params.epsilon = epsilon;
  params.lambda = 0.0;
  if (eta > 0) params.eta = eta;
  params.exhaustive_limit = 24;  // keep the whole sweep exhaustive

  double parallel_ms = 0.0, serial_ms = 0.0, oracle_ms = 0.0;
  int mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    AlignmentMatrix m = random_matrix(n, derive_seed(0xbe7c4, k, n));
    FormationOutcome par, ser;
    oracle::Result ref;
    parallel_ms += time_ms([&] { par = optimal_team(n, m, params); });
    serial_ms += time_ms([&] { ser = optimal_team_serial(n, m, params); });
    oracle_ms += time_ms([&] { ref = oracle::best_team(n, m, params); });
    if (check) {
      if (!same(par, ser)) {
        ++mismatches;
        std::cerr << "instance " << k << ": parallel and serial disagree\n";
      }
      if (!same(par, ref)) {
        ++mismatches;
        std::cerr << "instance " << k << ": solver and reference disagree\n";
      }
    }
  }

  std::printf("pool n=%d, %d instance(s), eta=%d, epsilon=%g\n", n,
              instances, params.resolved_eta(n), epsilon);
  std::printf("%-22s %12s %14s\n", "implementation", "total ms",
              "ms / instance");
  std::printf("%-22s %12.2f %14.3f\n", "parallel scan", parallel_ms,
              parallel_ms / instances);
  std::printf("%-22s %12.2f %14.3f\n", "serial scan", serial_ms,
              serial_ms / instances);
  std::printf("%-22s %12.2f %14.3f\n", "reference (oracle)", oracle_ms,
              oracle_ms / instances);
  if (serial_ms > 0.0 && parallel_ms > 0.0) {
    std::printf("parallel speedup over serial: %.2fx\n",
                serial_ms / parallel_ms);
  }
  if (check) {
    if (mismatches > 0) {
      std::printf("CHECK FAILED: %d mismatch(es)\n", mismatches);
      return 1;
    }
    std::printf("check passed: all implementations agree on %d instance(s)\n",
                instances);
  }
  return 0;
}
