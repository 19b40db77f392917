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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <limits>

#include "json.hpp"
#include "teamform/rng.hpp"
#include "teamform/types.hpp"

using namespace teamform;
using nlohmann::json;

namespace {

ActionVector av(std::initializer_list<double> vs) {
  ActionVector a;
  a.values = vs;
  return a;
}

template <typename T>
T round_trip(const T& value) {
  json j = value;
  return j.get<T>();
}

}  // namespace

TEST_CASE("action vectors serialize losslessly") {
  ActionVector a = av({1.0, -0.5, 0.25});
  CHECK(round_trip(a) == a);
  a.text = "free-form payload";
  CHECK(round_trip(a) == a);
}

TEST_CASE("action validation rejects empty and non-finite vectors") {
  CHECK_THROWS_AS(validate_action(ActionVector{}), std::invalid_argument);
  ActionVector bad = av({1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(validate_action(bad), std::invalid_argument);
  CHECK_NOTHROW(validate_action(av({0.0})));
}

TEST_CASE("interaction log records rounds and tracks views") {
  InteractionLog log(3);
  CHECK(log.empty());
  CHECK(log.pool_size() == 3);

  std::map<AgentId, ActionVector> r1{{0, av({1, 0})}, {1, av({0, 1})}};
  log.record_round(1, r1);
  CHECK(log.last_round() == 1);
  CHECK(log.rounds_observed_by(0) == std::vector<int>{1});
  CHECK(log.rounds_observed_by(2).empty());  // 2 did not act, saw nothing

  std::map<AgentId, ActionVector> r2{{0, av({1, 1})}, {2, av({0, 2})}};
  log.record_round(2, r2);
  // Agent 0 saw both rounds; agent 2 only the one it acted in.
  CHECK(log.rounds_observed_by(0) == std::vector<int>{1, 2});
  CHECK(log.rounds_observed_by(2) == std::vector<int>{2});

  auto seen = log.observed_actions(0, 0);
  REQUIRE(seen.size() == 2);
  CHECK(seen[0].first == 1);
  CHECK(seen[1].second == av({1, 1}));
  // Agent 2 never observed round 1, so it cannot see 0's round-1 action.
  CHECK(log.observed_actions(2, 0).size() == 1);

  auto peers = log.peer_actions_at(0, 2, 0);
  REQUIRE(peers.size() == 1);
  CHECK(peers[0] == av({0, 2}));

  CHECK(round_trip(log) == log);
}

TEST_CASE("interaction log rejects malformed rounds") {
  InteractionLog log(2);
  std::map<AgentId, ActionVector> r1{{0, av({1})}, {1, av({2})}};
  log.record_round(1, r1);
  SUBCASE("rounds must strictly increase") {
    CHECK_THROWS_AS(log.record_round(1, r1), std::invalid_argument);
  }
  SUBCASE("dimension must stay constant") {
    std::map<AgentId, ActionVector> bad{{0, av({1, 2})}, {1, av({2, 3})}};
    CHECK_THROWS_AS(log.record_round(2, bad), std::invalid_argument);
  }
  SUBCASE("unknown actors are rejected") {
    std::map<AgentId, ActionVector> bad{{5, av({1})}};
    CHECK_THROWS_AS(log.record_round(2, bad), std::invalid_argument);
  }
}

TEST_CASE("alignment matrix enforces range and no self pairs") {
  AlignmentMatrix m(3, 7);
  CHECK(m.round() == 7);
  m.set(0, 1, 0.5);
  m.set(1, 0, -1.0);
  CHECK(m.at(0, 1) == 0.5);
  CHECK(!m.has(0, 2));
  CHECK_THROWS_AS(m.at(0, 2), std::out_of_range);
  CHECK_THROWS_AS(m.set(1, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(m.set(0, 1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(m.set(0, 3, 0.0), std::invalid_argument);

  auto entries = m.entries();
  REQUIRE(entries.size() == 2);
  CHECK(std::get<0>(entries[0]) == 0);  // sorted by (i, j)
  CHECK(round_trip(m) == m);
}

TEST_CASE("belief invariants") {
  Belief b;
  b.owner = 0;
  b.level = 0;
  b.predictions[1] = av({1, 0});
  CHECK_NOTHROW(validate_belief(b));

  SUBCASE("level 0 admits no nesting") {
    Belief nested;
    nested.owner = 1;
    nested.level = -1;
    b.nested[1] = nested;
    CHECK_THROWS_AS(validate_belief(b), std::invalid_argument);
  }
  SUBCASE("self-predictions are rejected") {
    b.predictions[0] = av({1, 0});
    CHECK_THROWS_AS(validate_belief(b), std::invalid_argument);
  }
  SUBCASE("nested beliefs sit exactly one level down and match owners") {
    b.level = 1;
    Belief n1;
    n1.owner = 1;
    n1.level = 0;
    n1.predictions[0] = av({0, 1});
    b.nested[1] = n1;
    CHECK_NOTHROW(validate_belief(b));

    b.nested[1].level = 1;  // wrong depth
    b.nested[1].nested[0] = Belief{0, 0, {{1, av({1, 0})}}, {}};
    CHECK_THROWS_AS(validate_belief(b), std::invalid_argument);

    b.nested[1] = n1;
    b.nested[1].owner = 2;  // owner mismatch
    CHECK_THROWS_AS(validate_belief(b), std::invalid_argument);
  }
  SUBCASE("level >= 1 requires nesting for each prediction") {
    b.level = 1;
    CHECK_THROWS_AS(validate_belief(b), std::invalid_argument);
  }
  SUBCASE("round trip") {
    b.level = 1;
    Belief n1;
    n1.owner = 1;
    n1.level = 0;
    n1.predictions[0] = av({0, 1});
    b.nested[1] = n1;
    CHECK(round_trip(b) == b);
  }
}

TEST_CASE("teams normalize to sorted unique members") {
  Team t({3, 1, 3, 0});
  CHECK(t.members == std::vector<AgentId>{0, 1, 3});
  CHECK(t.size() == 3);
  CHECK(t.contains(1));
  CHECK(!t.contains(2));
  CHECK(Team::from_mask(t.mask()) == t);
  CHECK(Team({0, 1}) < Team({0, 2}));
  CHECK(round_trip(t) == t);
}

TEST_CASE("formation params defaults and validation") {
  FormationParams p;
  CHECK(p.epsilon == 0.2);
  CHECK(p.theta == 0.3);
  CHECK(p.tau == 1);
  CHECK(p.lambda == 1.0);
  CHECK(!p.eta.has_value());
  CHECK(p.resolved_eta(5) == 3);  // half the pool, rounded up
  CHECK(p.resolved_eta(4) == 2);
  CHECK(p.resolved_eta(7) == 4);
  p.eta = 2;
  CHECK(p.resolved_eta(7) == 2);
  CHECK_NOTHROW(p.validate(7));

  SUBCASE("field errors name the field") {
    FormationParams bad;
    bad.epsilon = 2.0;
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("epsilon"),
                         std::invalid_argument);
    bad = FormationParams{};
    bad.theta = 0.0;
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("theta"),
                         std::invalid_argument);
    bad = FormationParams{};
    bad.tau = 0;
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("tau"),
                         std::invalid_argument);
    bad = FormationParams{};
    bad.lambda = -1.0;
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("lambda"),
                         std::invalid_argument);
    bad = FormationParams{};
    bad.eta = 9;
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("eta"),
                         std::invalid_argument);
    bad = FormationParams{};
    bad.alpha = {{0, 2.0}};
    CHECK_THROWS_WITH_AS(bad.validate(4), doctest::Contains("alpha"),
                         std::invalid_argument);
  }
  SUBCASE("round trip preserves the unset eta") {
    FormationParams q;
    q.alpha = {{0, 0.9}, {1, 0.2}};
    json j = q;
    CHECK(j["eta"].is_null());
    CHECK(round_trip(q) == q);
    q.eta = 3;
    CHECK(round_trip(q) == q);
  }
}

TEST_CASE("engine state serializes with a consistent reform count") {
  EngineState s;
  s.current_team = Team({0, 1});
  s.round = 4;
  s.team_since_round = 3;
  s.reformations.push_back(Reformation{2, Team({0, 1, 2}), Team({0, 1})});
  s.lifetimes = {2};
  CHECK(s.reform_count() == 1);
  CHECK(round_trip(s) == s);

  json j = s;
  CHECK(j["reform_count"] == 1);
  j["reform_count"] = 5;  // contradicts the reformation list
  CHECK_THROWS_AS(j.get<EngineState>(), std::invalid_argument);
}

TEST_CASE("random instances round-trip through JSON") {
  Rng rng(2026);
  for (int iter = 0; iter < 50; ++iter) {
    int n = 2 + static_cast<int>(rng.bounded(6));
    AlignmentMatrix m(n, 1 + static_cast<int>(rng.bounded(9)));
    for (AgentId i = 0; i < n; ++i) {
      for (AgentId j = 0; j < n; ++j) {
        if (i != j && rng.uniform01() < 0.8) {
          m.set(i, j, rng.uniform(-1.0, 1.0));
        }
      }
    }
    CHECK(round_trip(m) == m);

    std::vector<AgentId> members;
    for (AgentId i = 0; i < n; ++i) {
      if (rng.uniform01() < 0.5) members.push_back(i);
    }
    Team t(members);
    CHECK(round_trip(t) == t);
  }
}
