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

#include "teamform/types.hpp"

namespace teamform::oracle {

/// Result of the reference search. Field meanings match the main solver's
/// outcome so the two can be diffed directly.
struct Result {
  Team team;
  double welfare = 0.0;
  bool stable = true;
  bool epsilon_relaxed = false;
};

/// Reference implementation of the team search: plain recursive subset
/// enumeration, no pruning, no masks, single-threaded. Deliberately kept
/// independent of the production solver so the two can check each other;
/// only the data types are shared.
Result best_team(int n, const AlignmentMatrix& m, const FormationParams& params);

}  // namespace teamform::oracle
