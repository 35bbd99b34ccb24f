#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vigil/core/types.hpp"
#include "vigil/errors.hpp"

namespace vigil {

// Default grids: five evenly spaced reward levels for the recommended option
// (the alternative pinned at 0.5 for R_L and 0 for R_S) and an 11-point
// lambda grid on [0,1].

inline Scenario default_recommendation_scenario() {
  Scenario sc;
  sc.actions.actions = {"accept", "decline"};
  sc.utterances = {{"recommend_accept", "accept"}, {"recommend_decline", "decline"}};
  sc.recommended_utterance = 0;

  std::vector<RewardFunction> rl_support;
  for (int k = 0; k <= 4; ++k) {
    RewardFunction rf;
    rf.table["accept"] = k / 4.0;
    rf.table["decline"] = 0.5;
    rl_support.push_back(rf);
  }
  sc.prior_rl = DiscretePrior<RewardFunction>::uniform(rl_support);

  std::vector<RewardFunction> rs_support;
  for (int k = 0; k <= 4; ++k) {
    RewardFunction rf;
    rf.table["accept"] = k / 4.0;
    rf.table["decline"] = 0.0;
    rs_support.push_back(rf);
  }
  sc.prior_rs = DiscretePrior<RewardFunction>::uniform(rs_support);

  std::vector<double> lam;
  for (int k = 0; k <= 10; ++k) lam.push_back(k / 10.0);
  sc.prior_lambda = DiscretePrior<double>::uniform(lam);

  sc.beta_s = 1.0;
  sc.listener_mode = ListenerPolicyMode::kDeterministicCompliance;
  sc.beta_l = 1.0;
  return sc;
}

namespace detail {

inline RewardFunction reward_from_json(const nlohmann::json& j) {
  RewardFunction rf;
  if (!j.is_object()) throw ConfigError("[vigilance-core] reward table must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) rf.table[it.key()] = it.value().get<double>();
  return rf;
}

inline nlohmann::json reward_to_json(const RewardFunction& rf) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : rf.table) j[k] = v;
  return j;
}

template <typename T, typename FromJson>
DiscretePrior<T> prior_from_json(const nlohmann::json& j, FromJson from) {
  DiscretePrior<T> p;
  if (!j.contains("support")) throw ConfigError("[vigilance-core] prior needs a support list");
  for (const auto& s : j.at("support")) p.support.push_back(from(s));
  if (j.contains("weights")) {
    for (const auto& w : j.at("weights")) p.weights.push_back(w.get<double>());
    double sum = 0.0;
    for (double w : p.weights) sum += w;
    if (sum <= 0.0) throw ConfigError("[vigilance-core] prior weights sum to zero");
    for (double& w : p.weights) w /= sum;
  } else {
    p.weights.assign(p.support.size(), 1.0 / static_cast<double>(p.support.size()));
  }
  return p;
}

}  // namespace detail

// Schema (documented in README): actions [...], utterances [{id, recommends}],
// prior_rl / prior_rs {support: [{action: reward, ...}], weights?}, prior_lambda
// {support: [..], weights?}, beta_s, listener_policy {mode, beta_l?},
// recommended_utterance (id).
inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  if (!j.contains("actions")) throw ConfigError("[vigilance-core] scenario needs actions");
  for (const auto& a : j.at("actions")) sc.actions.actions.push_back(a.get<std::string>());
  if (!j.contains("utterances")) throw ConfigError("[vigilance-core] scenario needs utterances");
  for (const auto& u : j.at("utterances"))
    sc.utterances.push_back({u.at("id").get<std::string>(),
                             u.at("recommends").get<std::string>()});
  sc.prior_rl = detail::prior_from_json<RewardFunction>(j.at("prior_rl"), detail::reward_from_json);
  sc.prior_rs = detail::prior_from_json<RewardFunction>(j.at("prior_rs"), detail::reward_from_json);
  sc.prior_lambda = detail::prior_from_json<double>(
      j.at("prior_lambda"), [](const nlohmann::json& v) { return v.get<double>(); });
  sc.beta_s = j.value("beta_s", 1.0);
  if (j.contains("listener_policy")) {
    const auto& lp = j.at("listener_policy");
    sc.listener_mode = listener_mode_from_string(lp.at("mode").get<std::string>());
    sc.beta_l = lp.value("beta_l", 1.0);
  }
  if (j.contains("recommended_utterance"))
    sc.recommended_utterance = sc.utterance_index(j.at("recommended_utterance").get<std::string>());
  sc.validate();
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["actions"] = sc.actions.actions;
  j["utterances"] = nlohmann::json::array();
  for (const auto& u : sc.utterances)
    j["utterances"].push_back({{"id", u.id}, {"recommends", u.recommended_action}});
  auto prior_rf = [](const DiscretePrior<RewardFunction>& p) {
    nlohmann::json pj;
    pj["support"] = nlohmann::json::array();
    for (const auto& rf : p.support) pj["support"].push_back(detail::reward_to_json(rf));
    pj["weights"] = p.weights;
    return pj;
  };
  j["prior_rl"] = prior_rf(sc.prior_rl);
  j["prior_rs"] = prior_rf(sc.prior_rs);
  j["prior_lambda"] = {{"support", sc.prior_lambda.support}, {"weights", sc.prior_lambda.weights}};
  j["beta_s"] = sc.beta_s;
  j["listener_policy"] = {{"mode", to_string(sc.listener_mode)}, {"beta_l", sc.beta_l}};
  j["recommended_utterance"] = sc.utterances[sc.recommended_utterance].id;
  return j;
}

}  // namespace vigil
