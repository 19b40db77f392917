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

#ifndef TEAMFORM_LLM_ADAPTER_HPP_
#define TEAMFORM_LLM_ADAPTER_HPP_

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "teamform/agent.hpp"
#include "teamform/alignment.hpp"
#include "teamform/scenario.hpp"
#include "teamform/types.hpp"

namespace teamform {

// ---------------------------------------------------------------------------
// Chat-completion wire types
// ---------------------------------------------------------------------------

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;  // must be non-empty
  double temperature = 0.0;
};

struct ChatUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string content;  // non-empty on success
  ChatUsage usage;
  int attempts = 1;
  std::vector<std::string> attempt_log;  // one line per failed attempt
};

struct EndpointConfig {
  std::string url;  // full endpoint, e.g. http://host:port/v1/chat/completions
  std::string api_key;  // empty: no Authorization header (local mocks)
  std::string model;
  int timeout_ms = 30000;
  int max_attempts = 3;
  int backoff_base_ms = 250;
};

/// Resolves the endpoint from the environment variables named in the
/// scenario's adapter block. A missing URL variable is an error that names
/// the variable; a missing key is allowed (local mocks), a missing model
/// falls back to "default".
EndpointConfig endpoint_from_env(const AdapterBlock& block);

enum class ChatErrorKind { timeout, auth, rate_limit, transport, protocol };

std::string to_string(ChatErrorKind kind);

class ChatError : public std::runtime_error {
 public:
  ChatError(ChatErrorKind kind, const std::string& what, int attempts)
      : std::runtime_error(what), kind_(kind), attempts_(attempts) {}

  ChatErrorKind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  ChatErrorKind kind_;
  int attempts_;
};

/// One chat completion. Transient failures (timeouts, connection errors,
/// HTTP 429 and 5xx) are retried with exponential backoff up to
/// `max_attempts`; authentication failures (401/403) and malformed responses
/// are not retried. Throws ChatError with the kind of the last failure.
ChatResponse chat_call(const EndpointConfig& config, const ChatRequest& request);

// ---------------------------------------------------------------------------
// Prompt rendering and response parsing (pure, fixture-testable)
// ---------------------------------------------------------------------------

/// Who is being prompted and for what.
struct RoleContext {
  std::string role_name;    // e.g. "Project Manager"
  std::string task_action;  // the current task handed to the agent
  std::string action_hint;  // schema hint for the action slot,
                            // e.g. "The instruction for engineers."
};

/// Renders the recursive-belief prompt for reasoning depth k (0, 1 or 2),
/// including the exact JSON response schema for that depth. Pure text;
/// deterministic for fixed inputs. Throws on k outside {0, 1, 2}.
std::string render_tom_prompt(const RoleContext& role, int k,
                              const std::string& history_digest);

template <typename T>
struct Parsed {
  T value{};
  bool ok = false;
  std::string error;                  // set when !ok; names what is missing
  std::vector<std::string> warnings;  // coercions, clamps
};

struct TomLevelBlock {
  std::string belief;
  std::string explanation;
  std::string action;
};

struct TomResponse {
  int level = 0;                        // highest level present
  std::map<int, TomLevelBlock> levels;  // all parsed level blocks
  const TomLevelBlock& working() const { return levels.at(level); }
};

/// Extracts the level-keyed JSON (stripping code fences and leading prose)
/// and returns all level blocks; the highest level present becomes the
/// working belief/action. Malformed input yields ok=false and an error
/// naming the missing key or quoting the offending fragment.
Parsed<TomResponse> parse_tom_response(const std::string& text);

/// Converts a parsed response into the engine's belief form: every subject
/// gets the working belief text as an opaque payload over a zero vector of
/// the scenario dimension, with nested levels filled from the lower blocks.
Belief tom_response_to_belief(const TomResponse& response, AgentId owner,
                              const std::vector<AgentId>& subjects, int dim);

/// Renders the self-evaluation prompt asking the observer to score each
/// named subject's action against its own belief model, including the
/// "# Your belief model:" section and the per-subject
/// score/explanation/justification response schema. Throws if `actions` is
/// empty.
std::string render_alignment_prompt(
    const std::string& belief_text,
    const std::map<std::string, std::string>& actions);

/// Parses self-evaluation scores for the expected subject names. A numeric
/// string score (e.g. "0.7") is coerced with a warning; a missing subject
/// yields ok=false with an error listing it, keeping the parsed subset.
Parsed<std::map<std::string, double>> parse_alignment_response(
    const std::string& text, const std::vector<std::string>& expected);

// ---------------------------------------------------------------------------
// Chat-backed agent
// ---------------------------------------------------------------------------

struct LlmAgentConfig {
  AgentId id = 0;
  int tom_level = 1;
  int dim = 1;  // scenario action dimension (payload vectors are zero-filled)
  RoleContext role;
  EndpointConfig endpoint;
  /// Display names used in prompts; missing ids render as "Agent<id+1>".
  std::map<AgentId, std::string> names;
  InvalidScorePolicy score_policy = InvalidScorePolicy::substitute_neutral;
};

/// An agent whose beliefs, actions and alignment self-scores come from a
/// chat endpoint. One completion serves both the round's belief and action;
/// alignment rows come from the self-evaluation prompt, never from the
/// numeric kernel. Transport failures propagate as ChatError (the engine
/// aborts the round).
class LlmAgent final : public Agent {
 public:
  explicit LlmAgent(LlmAgentConfig config);

  AgentId id() const override { return config_.id; }
  int tom_level() const override { return config_.tom_level; }

  ActionVector act(const InteractionLog& log, int round,
                   std::uint64_t seed) override;
  Belief update_belief(const InteractionLog& log,
                       const std::vector<AgentId>& team) override;
  std::optional<std::map<AgentId, double>> self_alignment(
      const Belief& own_belief, const std::map<AgentId, ActionVector>& actions,
      const std::vector<AgentId>& subjects) override;

  /// Digest of what this agent has observed, rendered into prompts.
  std::string history_digest(const InteractionLog& log) const;

 private:
  const TomResponse& ensure_round(const InteractionLog& log, int round);
  std::string name_of(AgentId id) const;

  LlmAgentConfig config_;
  int cached_round_ = -1;
  TomResponse cached_;
  std::vector<AgentId> team_;  // subjects of the cached belief
};

}  // namespace teamform

#endif  // TEAMFORM_LLM_ADAPTER_HPP_
