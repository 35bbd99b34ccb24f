#pragma once

// Chat request/record types, the canonical request serialization used for
// content addressing, score parsing, and the hidden structural probe tags the
// runners embed so in-process synthetic agents can classify prompts without
// natural-language sniffing. Probe tags are stripped before any remote call.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/util/base64.hpp"
#include "vigil/util/rng.hpp"

namespace vigil {

struct ChatMessage {
  std::string role;     // system | user | assistant
  std::string content;
  std::string image_png;  // optional raw PNG bytes

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string backend_id;
  std::vector<ChatMessage> messages;
  int max_tokens = 750;
  double temperature = 0.0;
  std::optional<std::uint64_t> request_seed;

  void validate() const {
    if (backend_id.empty()) throw InputError("[llm-gateway] request missing backend id");
    if (messages.empty()) throw InputError("[llm-gateway] request has no messages");
    for (const auto& m : messages)
      if (m.role != "system" && m.role != "user" && m.role != "assistant")
        throw InputError("[llm-gateway] unknown message role '" + m.role + "'");
    if (max_tokens <= 0) throw InputError("[llm-gateway] max_tokens must be positive");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
      throw InputError("[llm-gateway] temperature must be finite and >= 0");
  }
};

// Token budgets used for runs that mirror the published protocol: 10 tokens
// for direct answers, 750 when reasoning is requested.
constexpr int kDirectMaxTokens = 10;
constexpr int kReasoningMaxTokens = 750;

inline bool is_paper_faithful(const ChatRequest& req) {
  return req.max_tokens == kDirectMaxTokens || req.max_tokens == kReasoningMaxTokens;
}

// Prompt conditions shared by every experiment runner: whether the model is
// asked for a bare answer or for written-out reasoning, and whether prompts
// address the model as the decision maker itself or as an assistant helping
// a user.

enum class PromptStyle { kDirect, kCot };

inline std::string to_string(PromptStyle p) {
  return p == PromptStyle::kDirect ? "direct" : "cot";
}

inline PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "direct") return PromptStyle::kDirect;
  if (s == "cot") return PromptStyle::kCot;
  throw ConfigError("[llm-gateway] unknown prompt style '" + s + "'");
}

inline int max_tokens_for(PromptStyle p) {
  return p == PromptStyle::kDirect ? kDirectMaxTokens : kReasoningMaxTokens;
}

enum class Perspective { kFirstPerson, kUser };

inline std::string to_string(Perspective p) {
  return p == Perspective::kFirstPerson ? "first_person" : "user";
}

inline Perspective perspective_from_string(const std::string& s) {
  if (s == "first_person") return Perspective::kFirstPerson;
  if (s == "user") return Perspective::kUser;
  throw ConfigError("[llm-gateway] unknown perspective '" + s + "'");
}

struct ChatRecord {
  std::string request_hash;
  std::string completion;
  double latency_ms = 0.0;
  nlohmann::json provider_meta;
  bool cache_hit = false;
};

// Canonical serialization: object keys are emitted in sorted order by the
// JSON library, so identical requests serialize to identical bytes. Image
// bytes ride along base64-encoded and are covered by the hash.
inline nlohmann::json request_to_canonical_json(const ChatRequest& req) {
  req.validate();
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : req.messages) {
    nlohmann::json jm = {{"role", m.role}, {"content", m.content}};
    if (!m.image_png.empty()) jm["image_b64"] = base64_encode(m.image_png);
    msgs.push_back(jm);
  }
  nlohmann::json j = {{"backend", req.backend_id},
                      {"messages", msgs},
                      {"max_tokens", req.max_tokens},
                      {"temperature", req.temperature}};
  if (req.request_seed) j["seed"] = *req.request_seed;
  return j;
}

inline ChatRequest request_from_canonical_json(const nlohmann::json& j) {
  ChatRequest req;
  req.backend_id = j.at("backend").get<std::string>();
  for (const auto& jm : j.at("messages")) {
    ChatMessage m;
    m.role = jm.at("role").get<std::string>();
    m.content = jm.at("content").get<std::string>();
    if (jm.contains("image_b64")) m.image_png = base64_decode(jm.at("image_b64"));
    req.messages.push_back(std::move(m));
  }
  req.max_tokens = j.at("max_tokens").get<int>();
  req.temperature = j.at("temperature").get<double>();
  if (j.contains("seed")) req.request_seed = j.at("seed").get<std::uint64_t>();
  req.validate();
  return req;
}

inline std::string request_hash(const ChatRequest& req) {
  const std::string canon = request_to_canonical_json(req).dump();
  const std::uint64_t h = fnv1a64(canon);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// --- Score parsing ------------------------------------------------------------

namespace detail {

// Parses a non-negative integer starting at `pos` (after optional whitespace);
// returns std::nullopt if none is there.
inline std::optional<long> integer_at(const std::string& text, std::size_t pos) {
  while (pos < text.size() &&
         (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' || text[pos] == '\r'))
    ++pos;
  bool neg = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    neg = text[pos] == '-';
    ++pos;
  }
  if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
    return std::nullopt;
  long v = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    v = v * 10 + (text[pos] - '0');
    if (v > 1000000) break;  // scores are tiny; avoid overflow on digit walls
    ++pos;
  }
  return neg ? -v : v;
}

// Last standalone integer: a maximal digit run whose neighbours are neither
// alphanumeric nor a decimal point (so "3.14", "x86" and "v2" don't count),
// with an optional leading minus sign.
inline std::optional<long> last_standalone_integer(const std::string& text) {
  std::optional<long> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t end = i;  // one past the run
    bool neg = false;
    std::size_t left = begin;
    if (left > 0 && text[left - 1] == '-') {
      neg = true;
      --left;
    }
    const bool left_ok =
        left == 0 || (!std::isalnum(static_cast<unsigned char>(text[left - 1])) &&
                      text[left - 1] != '.');
    const bool right_ok =
        end >= text.size() || (!std::isalnum(static_cast<unsigned char>(text[end])) &&
                               text[end] != '.');
    if (left_ok && right_ok) {
      long v = 0;
      bool overflow = false;
      for (std::size_t k = begin; k < end; ++k) {
        v = v * 10 + (text[k] - '0');
        if (v > 1000000) {
          overflow = true;
          break;
        }
      }
      if (!overflow) found = neg ? -v : v;
    }
  }
  return found;
}

}  // namespace detail

inline constexpr const char* kAnswerMarker = "Answer (integer score only):";

// Answer-format add-ons appended to every 0-100 score elicitation. The CoT
// variant's final line is kAnswerMarker, which the score parser keys on.
inline std::string score_add_on(PromptStyle style) {
  if (style == PromptStyle::kDirect)
    return "Please only respond with an integer score, do not include anything else.";
  return std::string("Please reason about your answer before providing it. Structure "
                     "your response in the exact following format:\n\nReasoning: "
                     "[...]\n\n") +
         kAnswerMarker + " [...]";
}

// Total score parser: never throws, returns either a 0-100 value or an error
// message. Preference order: the integer after the last answer marker, then
// the last standalone integer anywhere. Out-of-range values are rejected,
// never clamped.
inline std::pair<std::optional<int>, std::string> try_parse_score(
    const std::string& text) noexcept {
  try {
    std::optional<long> value;
    std::size_t marker = std::string::npos;
    for (std::size_t pos = text.find(kAnswerMarker); pos != std::string::npos;
         pos = text.find(kAnswerMarker, pos + 1))
      marker = pos;
    if (marker != std::string::npos)
      value = detail::integer_at(text, marker + std::string(kAnswerMarker).size());
    if (!value) value = detail::last_standalone_integer(text);
    if (!value) return {std::nullopt, "no integer found in completion"};
    if (*value < 0 || *value > 100)
      return {std::nullopt, "integer " + std::to_string(*value) + " outside 0-100"};
    return {static_cast<int>(*value), ""};
  } catch (...) {
    return {std::nullopt, "unexpected failure while scanning completion"};
  }
}

inline int parse_score(const std::string& text) {
  auto [value, err] = try_parse_score(text);
  if (!value) throw ParseError("[llm-gateway] " + err);
  return *value;
}

// --- Hidden structural probe tags ----------------------------------------------
//
// Runners append one tag per elicitation, e.g.
//   <<probe kind=influence channel=doctor incentive=1000>>
// Synthetic agents classify prompts by the tag alone; the gateway strips all
// tags before a request reaches a remote backend.

struct ProbeTag {
  std::string kind;  // trust | incentive | influence | game_guess | game_advice |
                     // game_update | sponsor
  std::map<std::string, std::string> fields;
};

inline std::string make_probe_tag(const std::string& kind,
                                  const std::map<std::string, std::string>& fields = {}) {
  std::string out = "<<probe kind=" + kind;
  for (const auto& [k, v] : fields) {
    if (v.find(' ') != std::string::npos || v.find('>') != std::string::npos)
      throw InputError("[llm-gateway] probe field '" + k + "' must be a plain token");
    out += " " + k + "=" + v;
  }
  out += ">>";
  return out;
}

// Returns the last probe tag found across the request's user messages, if any.
inline std::optional<ProbeTag> find_probe_tag(const ChatRequest& req) {
  std::optional<ProbeTag> found;
  for (const auto& m : req.messages) {
    if (m.role != "user") continue;
    std::size_t pos = 0;
    while ((pos = m.content.find("<<probe ", pos)) != std::string::npos) {
      const std::size_t end = m.content.find(">>", pos);
      if (end == std::string::npos) break;
      const std::string body = m.content.substr(pos + 8, end - pos - 8);
      ProbeTag tag;
      std::size_t i = 0;
      while (i < body.size()) {
        std::size_t sp = body.find(' ', i);
        if (sp == std::string::npos) sp = body.size();
        const std::string item = body.substr(i, sp - i);
        const std::size_t eq = item.find('=');
        if (eq != std::string::npos) {
          const std::string k = item.substr(0, eq);
          const std::string v = item.substr(eq + 1);
          if (k == "kind")
            tag.kind = v;
          else
            tag.fields[k] = v;
        }
        i = sp + 1;
      }
      if (!tag.kind.empty()) found = tag;
      pos = end + 2;
    }
  }
  return found;
}

inline std::string strip_probe_tags(const std::string& content) {
  std::string out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t start = content.find("<<probe ", pos);
    if (start == std::string::npos) {
      out += content.substr(pos);
      break;
    }
    const std::size_t end = content.find(">>", start);
    if (end == std::string::npos) {
      out += content.substr(pos);
      break;
    }
    out += content.substr(pos, start - pos);
    pos = end + 2;
    if (pos < content.size() && content[pos] == '\n' &&
        (start == 0 || content[start - 1] == '\n'))
      ++pos;  // tag occupied a whole line; drop its newline too
  }
  return out;
}

inline ChatRequest strip_probe_tags(const ChatRequest& req) {
  ChatRequest clean = req;
  for (auto& m : clean.messages) m.content = strip_probe_tags(m.content);
  return clean;
}

}  // namespace vigil
