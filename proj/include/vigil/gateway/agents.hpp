#pragma once

// In-process synthetic agents used as oracles for the experiment pipelines.
// The rational agent IS the model: its influence answers are
// round(predict_influence(scenario from its own lambda and incentive
// perception) + gaussian noise), its trust answers are round(100*lambda) and
// its incentive answers come straight from its incentive map. The
// anti-rational agent mirrors influence/game answers around the scale
// midpoint (trust and incentive stay rational, so correlations flip sign but
// keep magnitude). Echo adopts the last number it is shown; stubborn never
// moves; constant(k) always says k.
//
// Agents classify prompts only by the hidden probe tag a runner embeds.
// A missing or unknown tag is a test bug and surfaces as AgentError.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "vigil/calib/calibration.hpp"
#include "vigil/core/scenario_config.hpp"
#include "vigil/core/types.hpp"
#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/util/rng.hpp"

namespace vigil {

enum class AgentKind { kRational, kAntiRational, kEcho, kStubborn, kConstant };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kRational: return "rational";
    case AgentKind::kAntiRational: return "anti_rational";
    case AgentKind::kEcho: return "echo";
    case AgentKind::kStubborn: return "stubborn";
    case AgentKind::kConstant: return "constant";
  }
  throw DomainError("[llm-gateway] unknown agent kind");
}

inline AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "rational") return AgentKind::kRational;
  if (s == "anti_rational") return AgentKind::kAntiRational;
  if (s == "echo") return AgentKind::kEcho;
  if (s == "stubborn") return AgentKind::kStubborn;
  if (s == "constant") return AgentKind::kConstant;
  throw ConfigError("[llm-gateway] unknown agent kind '" + s + "'");
}

struct SyntheticAgentConfig {
  AgentKind kind = AgentKind::kRational;
  std::map<std::string, double> lambda_table;   // character/channel -> lambda
  std::map<std::string, int> incentive_map;     // magnitude token -> 0..100
  double beta_s = 3.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  int constant_value = 50;
  // Decision frame the agent reasons over; the default matches the runners'.
  Scenario scenario_template = default_recommendation_scenario();

  void validate() const {
    for (const auto& [k, v] : lambda_table)
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("[llm-gateway] agent lambda for '" + k + "' outside [0,1]");
    for (const auto& [k, v] : incentive_map)
      if (v < 0 || v > 100)
        throw ConfigError("[llm-gateway] agent incentive for '" + k + "' outside 0-100");
    if (!(beta_s >= 0.0)) throw ConfigError("[llm-gateway] agent beta_s must be >= 0");
    if (!(noise_sd >= 0.0)) throw ConfigError("[llm-gateway] agent noise_sd must be >= 0");
    if (constant_value < 0 || constant_value > 100)
      throw ConfigError("[llm-gateway] constant agent value outside 0-100");
  }
};

class SyntheticAgentBackend : public Backend {
 public:
  SyntheticAgentBackend(std::string id, SyntheticAgentConfig config)
      : id_(std::move(id)), cfg_(std::move(config)), rng_(cfg_.seed) {
    cfg_.validate();
  }

  std::string id() const override { return id_; }

  std::string complete(const ChatRequest& request, nlohmann::json& meta) override {
    meta["agent"] = to_string(cfg_.kind);
    if (cfg_.kind == AgentKind::kConstant) return std::to_string(cfg_.constant_value);

    const auto tag = find_probe_tag(request);
    if (cfg_.kind == AgentKind::kEcho) return echo_reply(request, tag);
    if (!tag)
      throw AgentError("[llm-gateway] agent '" + id_ +
                       "' got a prompt without a probe tag");
    if (cfg_.kind == AgentKind::kStubborn) return stubborn_reply(*tag);
    return rational_reply(*tag, /*mirror=*/cfg_.kind == AgentKind::kAntiRational);
  }

 private:
  static int clamp_score(long v) {
    return static_cast<int>(std::clamp<long>(v, 0, 100));
  }

  double lambda_for(const ProbeTag& tag) const {
    const auto it = tag.fields.find("channel");
    if (it == tag.fields.end())
      throw AgentError("[llm-gateway] probe tag lacks channel for lambda lookup");
    const auto lam = cfg_.lambda_table.find(it->second);
    if (lam == cfg_.lambda_table.end())
      throw AgentError("[llm-gateway] agent has no lambda for channel '" + it->second + "'");
    return lam->second;
  }

  int incentive_for(const ProbeTag& tag) const {
    const auto it = tag.fields.find("incentive");
    if (it == tag.fields.end())
      throw AgentError("[llm-gateway] probe tag lacks incentive token");
    const auto inc = cfg_.incentive_map.find(it->second);
    if (inc == cfg_.incentive_map.end())
      throw AgentError("[llm-gateway] agent has no incentive mapping for '" + it->second +
                       "'");
    return inc->second;
  }

  static long tag_int(const ProbeTag& tag, const std::string& key) {
    const auto it = tag.fields.find(key);
    if (it == tag.fields.end())
      throw AgentError("[llm-gateway] probe tag lacks field '" + key + "'");
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      throw AgentError("[llm-gateway] probe field '" + key + "' is not an integer");
    }
  }

  std::string rational_reply(const ProbeTag& tag, bool mirror) {
    if (tag.kind == "trust") {
      const int v = clamp_score(std::lround(100.0 * lambda_for(tag)));
      return std::to_string(v);
    }
    if (tag.kind == "incentive") return std::to_string(incentive_for(tag));
    if (tag.kind == "influence") {
      Scenario sc = cfg_.scenario_template;
      sc.beta_s = cfg_.beta_s;
      sc.prior_lambda = DiscretePrior<double>::point_mass(lambda_for(tag));
      RewardFunction rs = sc.prior_rs.support.front();
      const std::string& rec = sc.utterances[sc.recommended_utterance].recommended_action;
      rs.table.at(rec) = incentive_for(tag) / 100.0;
      sc.prior_rs = DiscretePrior<RewardFunction>::point_mass(rs);
      double v = predict_influence(sc);
      if (cfg_.noise_sd > 0.0) {
        std::lock_guard<std::mutex> lock(mu_);
        v += rng_.normal(0.0, cfg_.noise_sd);
      }
      int score = clamp_score(std::lround(v));
      if (mirror) score = 100 - score;
      return std::to_string(score);
    }
    if (tag.kind == "game_guess") {
      // Accurate perception of the stimulus.
      long v = tag_int(tag, "truth");
      if (cfg_.noise_sd > 0.0) {
        std::lock_guard<std::mutex> lock(mu_);
        v = std::lround(v + rng_.normal(0.0, cfg_.noise_sd));
      }
      return std::to_string(v);
    }
    if (tag.kind == "game_advice") {
      // Honest advice: pass along the answer it just gave.
      return std::to_string(tag_int(tag, "own"));
    }
    if (tag.kind == "game_update") {
      const long own = tag_int(tag, "own");
      const long partner = tag_int(tag, "partner");
      const auto payoff = tag.fields.find("payoff");
      long v;
      if (payoff != tag.fields.end() && payoff->second == "competitive") {
        // A competitor's number carries no helpful intent; keep the estimate.
        v = own;
      } else {
        // Equally reliable observers: average, rounding half toward own.
        v = own + (partner - own) / 2;
      }
      if (mirror) v = own - (partner - own);  // move away instead
      return std::to_string(v);
    }
    throw AgentError("[llm-gateway] agent cannot classify probe kind '" + tag.kind + "'");
  }

  std::string stubborn_reply(const ProbeTag& tag) const {
    if (tag.kind == "game_guess") return std::to_string(tag_int(tag, "truth"));
    if (tag.kind == "game_advice") return std::to_string(tag_int(tag, "own"));
    if (tag.kind == "game_update") return std::to_string(tag_int(tag, "own"));
    throw AgentError("[llm-gateway] stubborn agent only answers game prompts, got '" +
                     tag.kind + "'");
  }

  std::string echo_reply(const ChatRequest& request, const std::optional<ProbeTag>& tag) {
    // Echo repeats the most salient number in front of it: the partner's
    // transmitted value, else its own previous answer, else the displayed
    // stimulus truth.
    if (tag && tag->kind == "game_update")
      return std::to_string(tag_int(*tag, "partner"));
    if (tag && tag->kind == "game_advice") return std::to_string(tag_int(*tag, "own"));
    if (tag && tag->kind == "game_guess") return std::to_string(tag_int(*tag, "truth"));
    // Parrot the last number shown in the last user message.
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
      if (it->role != "user") continue;
      const auto v = detail::last_standalone_integer(strip_probe_tags(it->content));
      if (v) return std::to_string(*v);
      break;
    }
    throw AgentError("[llm-gateway] echo agent found no number to repeat");
  }

  std::string id_;
  SyntheticAgentConfig cfg_;
  Rng rng_;
  std::mutex mu_;
};

}  // namespace vigil
