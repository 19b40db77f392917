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

#include "teamform/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace teamform {

double cosine_alignment(const ActionVector& predicted,
                        const ActionVector& actual) {
  if (predicted.dim() != actual.dim()) {
    throw std::invalid_argument("alignment kernel: dimension mismatch");
  }
  validate_action(predicted);
  validate_action(actual);
  double dot = 0.0, np = 0.0, na = 0.0;
  for (int i = 0; i < predicted.dim(); ++i) {
    dot += predicted.values[i] * actual.values[i];
    np += predicted.values[i] * predicted.values[i];
    na += actual.values[i] * actual.values[i];
  }
  bool pz = np == 0.0, az = na == 0.0;
  if (pz && az) {
    throw std::invalid_argument("alignment kernel: both vectors are zero");
  }
  if (pz || az) return 0.0;
  double c = dot / (std::sqrt(np) * std::sqrt(na));
  return std::clamp(c, -1.0, 1.0);
}

namespace {

std::unordered_map<std::string, AlignmentKernel>& kernel_registry() {
  static std::unordered_map<std::string, AlignmentKernel> reg{
      {"cosine", cosine_alignment}};
  return reg;
}

std::mutex& kernel_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

AlignmentKernel alignment_kernel(const std::string& name) {
  std::lock_guard<std::mutex> lock(kernel_mutex());
  auto it = kernel_registry().find(name);
  if (it == kernel_registry().end()) {
    throw std::out_of_range("unknown alignment kernel: " + name);
  }
  return it->second;
}

void register_alignment_kernel(const std::string& name, AlignmentKernel k) {
  std::lock_guard<std::mutex> lock(kernel_mutex());
  kernel_registry()[name] = std::move(k);
}

AlignmentMatrix build_alignment_matrix(
    const std::map<AgentId, Belief>& beliefs,
    const std::map<AgentId, ActionVector>& actions, const Team& team,
    int round, const AlignmentKernel& kernel) {
  AgentId n = 0;
  for (AgentId m : team.members) n = std::max(n, m);
  AlignmentMatrix out(n + 1, round);
  for (AgentId i : team.members) {
    auto bi = beliefs.find(i);
    if (bi == beliefs.end()) {
      throw std::invalid_argument("no belief for team member " +
                                  std::to_string(i));
    }
    for (AgentId j : team.members) {
      if (i == j) continue;
      auto pred = bi->second.predictions.find(j);
      if (pred == bi->second.predictions.end()) {
        throw std::invalid_argument("belief of agent " + std::to_string(i) +
                                    " has no prediction for " +
                                    std::to_string(j));
      }
      auto act = actions.find(j);
      if (act == actions.end()) {
        throw std::invalid_argument("no action recorded for team member " +
                                    std::to_string(j));
      }
      out.set(i, j, kernel(pred->second, act->second));
    }
  }
  return out;
}

IngestedScores ingest_external_scores(const std::map<AgentId, double>& parsed,
                                      const std::vector<AgentId>& expected,
                                      InvalidScorePolicy policy) {
  IngestedScores out;
  for (AgentId id : expected) {
    auto it = parsed.find(id);
    if (it == parsed.end() || !std::isfinite(it->second)) {
      if (policy == InvalidScorePolicy::substitute_neutral) {
        out.scores[id] = 0.0;
        out.warnings.push_back("agent " + std::to_string(id) +
                               ": no usable score, substituted neutral 0.0");
      } else {
        out.valid = false;
        out.warnings.push_back("agent " + std::to_string(id) +
                               ": no usable score");
      }
      continue;
    }
    double v = it->second;
    if (v < -1.0 || v > 1.0) {
      double clamped = std::clamp(v, -1.0, 1.0);
      out.warnings.push_back("agent " + std::to_string(id) + ": score " +
                             std::to_string(v) + " clamped to " +
                             std::to_string(clamped));
      v = clamped;
    }
    out.scores[id] = v;
  }
  return out;
}

}  // namespace teamform
