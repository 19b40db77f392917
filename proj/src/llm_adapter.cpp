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

#include "teamform/llm_adapter.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace teamform {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Endpoint and transport
// ---------------------------------------------------------------------------

EndpointConfig endpoint_from_env(const AdapterBlock& block) {
  EndpointConfig config;
  const char* url = std::getenv(block.endpoint_env.c_str());
  if (url == nullptr || *url == '\0') {
    throw std::invalid_argument("endpoint URL environment variable " +
                                block.endpoint_env + " is not set");
  }
  config.url = url;
  if (const char* key = std::getenv(block.key_env.c_str())) config.api_key = key;
  const char* model = std::getenv(block.model_env.c_str());
  config.model = (model != nullptr && *model != '\0') ? model : "default";
  return config;
}

std::string to_string(ChatErrorKind kind) {
  switch (kind) {
    case ChatErrorKind::timeout:
      return "timeout";
    case ChatErrorKind::auth:
      return "auth";
    case ChatErrorKind::rate_limit:
      return "rate_limit";
    case ChatErrorKind::transport:
      return "transport";
    case ChatErrorKind::protocol:
      return "protocol";
  }
  return "transport";
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /… (never empty)
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint URL must include a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_timeout(httplib::Error e) {
  return e == httplib::Error::ConnectionTimeout || e == httplib::Error::Read ||
         e == httplib::Error::Write;
}

}  // namespace

ChatResponse chat_call(const EndpointConfig& config,
                       const ChatRequest& request) {
  if (request.messages.empty()) {
    throw ChatError(ChatErrorKind::protocol, "chat request has no messages", 0);
  }
  SplitUrl target = split_url(config.url);
  httplib::Client client(target.origin);
  client.set_connection_timeout(0, config.timeout_ms * 1000LL);
  client.set_read_timeout(0, config.timeout_ms * 1000LL);
  client.set_write_timeout(0, config.timeout_ms * 1000LL);
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }

  json body;
  body["model"] = config.model.empty() ? request.model : config.model;
  body["temperature"] = request.temperature;
  body["messages"] = json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string payload = body.dump();

  int max_attempts = std::max(1, config.max_attempts);
  std::vector<std::string> attempt_log;
  ChatErrorKind last_kind = ChatErrorKind::transport;
  std::string last_what = "no attempt made";

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    bool retryable = false;
    auto res = client.Post(target.path, headers, payload, "application/json");
    if (!res) {
      last_kind = is_timeout(res.error()) ? ChatErrorKind::timeout
                                          : ChatErrorKind::transport;
      last_what = "chat endpoint " + to_string(last_kind) + ": " +
                  httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 401 || res->status == 403) {
      last_kind = ChatErrorKind::auth;
      last_what =
          "chat endpoint rejected the credential (HTTP " +
          std::to_string(res->status) + ")";
      retryable = false;
    } else if (res->status == 429) {
      last_kind = ChatErrorKind::rate_limit;
      last_what = "chat endpoint rate limit (HTTP 429)";
      retryable = true;
    } else if (res->status >= 500) {
      last_kind = ChatErrorKind::transport;
      last_what = "chat endpoint server error (HTTP " +
                  std::to_string(res->status) + ")";
      retryable = true;
    } else if (res->status != 200) {
      last_kind = ChatErrorKind::protocol;
      last_what = "chat endpoint unexpected status (HTTP " +
                  std::to_string(res->status) + ")";
      retryable = false;
    } else {
      try {
        json parsed = json::parse(res->body);
        ChatResponse out;
        out.content = parsed.at("choices").at(0).at("message").at("content")
                          .get<std::string>();
        if (out.content.empty()) {
          throw std::runtime_error("empty completion content");
        }
        if (parsed.contains("usage")) {
          out.usage.prompt_tokens =
              parsed["usage"].value("prompt_tokens", 0);
          out.usage.completion_tokens =
              parsed["usage"].value("completion_tokens", 0);
        }
        out.attempts = attempt;
        out.attempt_log = std::move(attempt_log);
        return out;
      } catch (const std::exception& e) {
        last_kind = ChatErrorKind::protocol;
        last_what = std::string("malformed chat completion body: ") + e.what();
        retryable = false;
      }
    }

    if (!retryable || attempt == max_attempts) {
      throw ChatError(last_kind, last_what + " (after " +
                                     std::to_string(attempt) + " attempt(s))",
                      attempt);
    }
    int backoff_ms = config.backoff_base_ms * (1 << (attempt - 1));
    attempt_log.push_back("attempt " + std::to_string(attempt) + ": " +
                          last_what + "; backing off " +
                          std::to_string(backoff_ms) + " ms");
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
  }
  throw ChatError(last_kind, last_what, max_attempts);  // unreachable
}

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

namespace {

std::string level_block(int level, const std::string& hint, bool quote_single) {
  const char q = quote_single ? '\'' : '"';
  std::string x = "x_" + std::to_string(level);
  std::string y = "y_" + std::to_string(level);
  std::ostringstream out;
  auto key = [&](const std::string& k) { return std::string{q} + k + q; };
  out << "  " << key("ToM_level" + std::to_string(level)) << ": {\n";
  if (level == 0) {
    out << "    " << key("belief") << ": " << key("no belief") << ",\n";
  } else {
    std::string basis =
        level >= 2 ? " based on your action x_" + std::to_string(level - 1)
                   : "";
    out << "    " << key("belief") << ": " << q << "{" << y
        << " inferred actions for teammates" << basis << "}" << q << ",\n";
    out << "    " << key("explanation") << ": " << q
        << "{Concise explanation of inferring actions " << y
        << " and choosing " << x << " based on this belief}" << q << ",\n";
  }
  out << "    " << key("action") << ": " << q << "{" << x << " " << hint << "}"
      << q << "\n";
  out << "  }";
  return out.str();
}

}  // namespace

std::string render_tom_prompt(const RoleContext& role, int k,
                              const std::string& history_digest) {
  if (k < 0 || k > 2) {
    throw std::invalid_argument("reasoning depth must be 0, 1 or 2, got " +
                                std::to_string(k));
  }
  std::ostringstream out;
  out << "You are the " << role.role_name
      << " of the team. Your current action is " << role.task_action << ".\n";
  out << "You have the ability of " << k
      << " Level Theory of Mind. You can **recursively** infer the mental "
         "states of other agents in the team.\n";
  out << "Then, you will provide outline {x_i} based on this belief\n\n";
  if (!history_digest.empty()) {
    out << "# Interaction history:\n" << history_digest << "\n\n";
  }
  out << "## Please explain your thought process for inferring others' "
         "actions `{y_i}' and choosing `{x_i}' at each level. Remember MUST "
         "Respond in the following JSON format, including each key:\n\n";
  std::string hint =
      role.action_hint.empty() ? "your action" : role.action_hint;
  out << "{\n";
  if (k == 0) {
    out << level_block(0, hint, false) << "\n";
  } else if (k == 1) {
    out << level_block(1, hint, false) << "\n";
  } else {
    out << level_block(1, hint, false) << ",\n"
        << level_block(2, hint, false) << "\n";
  }
  out << "}\n";
  return out.str();
}

std::string render_alignment_prompt(
    const std::string& belief_text,
    const std::map<std::string, std::string>& actions) {
  if (actions.empty()) {
    throw std::invalid_argument(
        "self-evaluation needs at least one subject action");
  }
  std::ostringstream out;
  out << "You will provide your belief alignment scores for each teammate's "
         "implementation based on your belief model.\n";
  out << "Teammates' actions: {\n";
  bool first = true;
  for (const auto& [name, text] : actions) {
    if (!first) out << ",\n";
    first = false;
    out << "    " << json(name).dump() << ": " << json(text).dump();
  }
  out << "\n}\n\n";
  out << "# Your belief model: \n\n" << belief_text << "\n\n";
  out << "# Instruction:\n\n";
  out << " For each teammate, provide a belief alignment score between -1 "
         "and 1. \n";
  out << " Respond in the following JSON format:\n";
  out << "{\n";
  first = true;
  for (const auto& [name, text] : actions) {
    (void)text;
    if (!first) out << ",\n";
    first = false;
    out << "    " << json(name).dump() << ": {\n";
    out << "        \"score\": float (-1 to 1). Belief alignment score for "
        << name << ",\n";
    out << "        \"explanation\": Brief explanation of " << name
        << "'s alignment score in 10 words or less,\n";
    out << "        \"justification\": Detailed justification of " << name
        << "'s alignment score, considering their implementation and your "
           "belief model, in 30-50 words\n";
    out << "    }";
  }
  out << "\n}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

namespace {

/// Finds the first balanced top-level JSON object, skipping code fences and
/// leading prose. Returns an empty optional when none parses.
std::optional<json> extract_json_object(const std::string& text,
                                        std::string* fragment) {
  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          std::string candidate = text.substr(start, i - start + 1);
          json parsed = json::parse(candidate, nullptr, false);
          if (!parsed.is_discarded()) return parsed;
          if (fragment) *fragment = candidate.substr(0, 120);
          break;  // try the next '{'
        }
      }
    }
  }
  return std::nullopt;
}

std::string get_string(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

Parsed<TomResponse> parse_tom_response(const std::string& text) {
  Parsed<TomResponse> out;
  std::string fragment;
  auto parsed = extract_json_object(text, &fragment);
  if (!parsed) {
    out.error = "no JSON object found in response";
    if (!fragment.empty()) out.error += "; offending fragment: " + fragment;
    return out;
  }
  bool any = false;
  for (int level = 0; level <= 2; ++level) {
    std::string key = "ToM_level" + std::to_string(level);
    if (!parsed->contains(key)) continue;
    const json& block = (*parsed)[key];
    if (!block.is_object()) {
      out.error = "key \"" + key + "\" is not an object";
      return out;
    }
    TomLevelBlock lb;
    if (block.contains("belief")) lb.belief = get_string(block, "belief");
    if (block.contains("explanation")) {
      lb.explanation = get_string(block, "explanation");
    }
    if (!block.contains("action")) {
      out.error = "level block \"" + key + "\" is missing key \"action\"";
      return out;
    }
    lb.action = get_string(block, "action");
    out.value.levels[level] = std::move(lb);
    out.value.level = level;
    any = true;
  }
  if (!any) {
    out.error =
        "response JSON has no ToM_level0/ToM_level1/ToM_level2 block";
    return out;
  }
  out.ok = true;
  return out;
}

Belief tom_response_to_belief(const TomResponse& response, AgentId owner,
                              const std::vector<AgentId>& subjects, int dim) {
  if (dim < 1) throw std::invalid_argument("action dimension must be >= 1");
  auto text_at = [&](int level) -> std::string {
    auto it = response.levels.find(level);
    if (it != response.levels.end()) return it->second.belief;
    return level == 0 ? "no belief" : response.working().belief;
  };
  std::vector<AgentId> everyone = subjects;
  everyone.push_back(owner);
  std::sort(everyone.begin(), everyone.end());

  // Recursion mirrors the simulated nesting: the viewer stays fixed while
  // the nominal owner changes, one level shallower per step.
  std::function<Belief(AgentId, int)> build = [&](AgentId o, int level) {
    Belief b;
    b.owner = o;
    b.level = level;
    for (AgentId s : everyone) {
      if (s == o) continue;
      ActionVector payload;
      payload.values.assign(dim, 0.0);
      payload.text = text_at(level);
      b.predictions[s] = std::move(payload);
      if (level > 0) b.nested[s] = build(s, level - 1);
    }
    return b;
  };
  Belief b = build(owner, response.level);
  validate_belief(b);
  return b;
}

Parsed<std::map<std::string, double>> parse_alignment_response(
    const std::string& text, const std::vector<std::string>& expected) {
  Parsed<std::map<std::string, double>> out;
  std::string fragment;
  auto parsed = extract_json_object(text, &fragment);
  if (!parsed) {
    out.error = "no JSON object found in response";
    if (!fragment.empty()) out.error += "; offending fragment: " + fragment;
    return out;
  }
  std::vector<std::string> missing;
  for (const auto& name : expected) {
    if (!parsed->contains(name)) {
      missing.push_back(name);
      continue;
    }
    const json& block = (*parsed)[name];
    const json* score = nullptr;
    if (block.is_object() && block.contains("score")) {
      score = &block["score"];
    } else if (block.is_number() || block.is_string()) {
      score = &block;  // tolerate a bare score
    }
    if (score == nullptr) {
      missing.push_back(name);
      continue;
    }
    if (score->is_number()) {
      out.value[name] = score->get<double>();
    } else if (score->is_string()) {
      try {
        std::size_t pos = 0;
        const std::string s = score->get<std::string>();
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        out.value[name] = v;
        out.warnings.push_back("score for " + name +
                               " arrived as string \"" + s + "\"; coerced");
      } catch (const std::exception&) {
        missing.push_back(name);
      }
    } else {
      missing.push_back(name);
    }
  }
  if (!missing.empty()) {
    out.error = "missing or unusable score for: ";
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i > 0) out.error += ", ";
      out.error += missing[i];
    }
    return out;  // ok stays false; parsed subset kept
  }
  out.ok = true;
  return out;
}

// ---------------------------------------------------------------------------
// Chat-backed agent
// ---------------------------------------------------------------------------

LlmAgent::LlmAgent(LlmAgentConfig config) : config_(std::move(config)) {
  if (config_.tom_level < 0 || config_.tom_level > 2) {
    throw std::invalid_argument("reasoning depth must be 0, 1 or 2");
  }
  if (config_.dim < 1) {
    throw std::invalid_argument("action dimension must be >= 1");
  }
}

std::string LlmAgent::name_of(AgentId id) const {
  auto it = config_.names.find(id);
  if (it != config_.names.end()) return it->second;
  return "Agent" + std::to_string(id + 1);
}

std::string LlmAgent::history_digest(const InteractionLog& log) const {
  std::ostringstream out;
  for (AgentId subject = 0; subject < log.pool_size(); ++subject) {
    for (const auto& [round, action] : log.observed_actions(config_.id, subject)) {
      out << "Round " << round << ", " << name_of(subject) << ": ";
      if (action.text && !action.text->empty()) {
        out << *action.text;
      } else {
        out << json(action.values).dump();
      }
      out << "\n";
    }
  }
  return out.str();
}

const TomResponse& LlmAgent::ensure_round(const InteractionLog& log,
                                          int round) {
  if (cached_round_ == round) return cached_;
  ChatRequest request;
  request.model = config_.endpoint.model;
  request.temperature = 0.0;
  request.messages.push_back(
      {"user", render_tom_prompt(config_.role, config_.tom_level,
                                 history_digest(log))});
  ChatResponse response = chat_call(config_.endpoint, request);
  auto parsed = parse_tom_response(response.content);
  if (!parsed.ok) {
    throw ChatError(ChatErrorKind::protocol,
                    "agent " + std::to_string(config_.id) +
                        " response unusable: " + parsed.error,
                    response.attempts);
  }
  cached_ = std::move(parsed.value);
  cached_round_ = round;
  return cached_;
}

ActionVector LlmAgent::act(const InteractionLog& log, int round,
                           std::uint64_t seed) {
  (void)seed;  // temperature 0; the endpoint is the source of variation
  const TomResponse& response = ensure_round(log, round);
  ActionVector action;
  action.values.assign(config_.dim, 0.0);
  action.text = response.working().action;
  return action;
}

Belief LlmAgent::update_belief(const InteractionLog& log,
                               const std::vector<AgentId>& team) {
  std::vector<AgentId> subjects;
  for (AgentId id : team) {
    if (id != config_.id) subjects.push_back(id);
  }
  team_ = subjects;
  const TomResponse& response = ensure_round(log, log.last_round() + 1);
  return tom_response_to_belief(response, config_.id, subjects, config_.dim);
}

std::optional<std::map<AgentId, double>> LlmAgent::self_alignment(
    const Belief& own_belief, const std::map<AgentId, ActionVector>& actions,
    const std::vector<AgentId>& subjects) {
  std::map<std::string, std::string> named;
  std::map<std::string, AgentId> ids;
  for (AgentId j : subjects) {
    if (j == config_.id) continue;
    std::string name = name_of(j);
    const ActionVector& a = actions.at(j);
    named[name] = (a.text && !a.text->empty()) ? *a.text : json(a.values).dump();
    ids[name] = j;
  }
  if (named.empty()) return std::map<AgentId, double>{};

  std::string belief_text;
  if (!own_belief.predictions.empty()) {
    const auto& first = own_belief.predictions.begin()->second;
    if (first.text) belief_text = *first.text;
  }

  ChatRequest request;
  request.model = config_.endpoint.model;
  request.temperature = 0.0;
  request.messages.push_back(
      {"user", render_alignment_prompt(belief_text, named)});
  ChatResponse response = chat_call(config_.endpoint, request);

  std::vector<std::string> expected;
  for (const auto& [name, id] : ids) expected.push_back(name);
  auto parsed = parse_alignment_response(response.content, expected);

  std::map<AgentId, double> by_id;
  for (const auto& [name, score] : parsed.value) by_id[ids.at(name)] = score;
  std::vector<AgentId> expected_ids;
  for (const auto& [name, id] : ids) expected_ids.push_back(id);
  std::sort(expected_ids.begin(), expected_ids.end());
  auto ingested =
      ingest_external_scores(by_id, expected_ids, config_.score_policy);
  if (!ingested.valid) {
    throw ChatError(ChatErrorKind::protocol,
                    "agent " + std::to_string(config_.id) +
                        " self-evaluation unusable: " + parsed.error,
                    response.attempts);
  }
  return ingested.scores;
}

}  // namespace teamform
