#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

constexpr double kWeightTolerance = 1e-12;

// Ordered set of action identifiers. One action may act as the
// "decline / do nothing" option but it is not treated specially here.
struct ActionSet {
  std::vector<std::string> actions;

  void validate() const {
    if (actions.empty()) throw DomainError("[vigilance-core] ActionSet must be non-empty");
    for (std::size_t i = 0; i < actions.size(); ++i)
      for (std::size_t j = i + 1; j < actions.size(); ++j)
        if (actions[i] == actions[j])
          throw DomainError("[vigilance-core] duplicate action id: " + actions[i]);
  }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i] == id) return i;
    throw LookupError("[vigilance-core] unknown action: " + id);
  }

  std::size_t size() const { return actions.size(); }
};

// Map action id -> reward in [0, 1].
struct RewardFunction {
  std::map<std::string, double> table;

  double at(const std::string& action) const {
    auto it = table.find(action);
    if (it == table.end())
      throw LookupError("[vigilance-core] reward undefined for action: " + action);
    return it->second;
  }

  void validate(const ActionSet& actions) const {
    for (const auto& a : actions.actions) {
      auto it = table.find(a);
      if (it == table.end())
        throw DomainError("[vigilance-core] reward table missing action: " + a);
      if (!std::isfinite(it->second) || it->second < 0.0 || it->second > 1.0)
        throw DomainError("[vigilance-core] reward out of [0,1] for action: " + a);
    }
  }

  bool operator==(const RewardFunction& other) const { return table == other.table; }
};

// Discrete prior over hypothesis values: RewardFunction for R_L / R_S,
// double in [0,1] for lambda.
template <typename T>
struct DiscretePrior {
  std::vector<T> support;
  std::vector<double> weights;

  void validate() const {
    if (support.empty()) throw DomainError("[vigilance-core] prior support is empty");
    if (support.size() != weights.size())
      throw DomainError("[vigilance-core] prior support/weights size mismatch");
    double sum = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0)
        throw DomainError("[vigilance-core] prior weight negative or non-finite");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTolerance)
      throw DomainError("[vigilance-core] prior weights do not sum to 1");
    for (std::size_t i = 0; i < support.size(); ++i)
      for (std::size_t j = i + 1; j < support.size(); ++j)
        if (support[i] == support[j])
          throw DomainError("[vigilance-core] duplicate prior support point");
  }

  static DiscretePrior uniform(std::vector<T> support) {
    DiscretePrior p;
    p.weights.assign(support.size(), 1.0 / static_cast<double>(support.size()));
    p.support = std::move(support);
    return p;
  }

  static DiscretePrior point_mass(T value) {
    DiscretePrior p;
    p.support.push_back(std::move(value));
    p.weights.push_back(1.0);
    return p;
  }

  static DiscretePrior normalized(std::vector<T> support, std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (sum <= 0.0) throw DomainError("[vigilance-core] cannot normalize zero-mass prior");
    for (double& w : weights) w /= sum;
    DiscretePrior p;
    p.support = std::move(support);
    p.weights = std::move(weights);
    return p;
  }

  bool is_point_mass() const { return support.size() == 1; }
  std::size_t size() const { return support.size(); }
};

// Each utterance recommends exactly one action.
struct Utterance {
  std::string id;
  std::string recommended_action;
};

enum class ListenerPolicyMode {
  kDeterministicCompliance,
  kSoftmax,
};

inline std::string to_string(ListenerPolicyMode m) {
  return m == ListenerPolicyMode::kDeterministicCompliance ? "deterministic-compliance"
                                                           : "softmax";
}

inline ListenerPolicyMode listener_mode_from_string(const std::string& s) {
  if (s == "deterministic-compliance") return ListenerPolicyMode::kDeterministicCompliance;
  if (s == "softmax") return ListenerPolicyMode::kSoftmax;
  throw ConfigError("[vigilance-core] unknown listener_policy_mode: " + s);
}

struct Scenario {
  ActionSet actions;
  std::vector<Utterance> utterances;
  DiscretePrior<RewardFunction> prior_rl;
  DiscretePrior<RewardFunction> prior_rs;
  DiscretePrior<double> prior_lambda;
  double beta_s = 1.0;
  ListenerPolicyMode listener_mode = ListenerPolicyMode::kDeterministicCompliance;
  double beta_l = 1.0;
  // Index of the utterance whose effect the experiments score.
  std::size_t recommended_utterance = 0;

  void validate() const {
    actions.validate();
    if (utterances.empty())
      throw DomainError("[vigilance-core] scenario needs at least one utterance");
    for (const auto& u : utterances) actions.index_of(u.recommended_action);
    if (!(beta_s >= 0.0) || !std::isfinite(beta_s))
      throw DomainError("[vigilance-core] beta_s must be finite and >= 0");
    prior_rl.validate();
    prior_rs.validate();
    prior_lambda.validate();
    for (const auto& rf : prior_rl.support) rf.validate(actions);
    for (const auto& rf : prior_rs.support) rf.validate(actions);
    for (double lam : prior_lambda.support)
      if (!std::isfinite(lam) || lam < 0.0 || lam > 1.0)
        throw DomainError("[vigilance-core] lambda support point outside [0,1]");
    if (recommended_utterance >= utterances.size())
      throw DomainError("[vigilance-core] recommended_utterance out of range");
  }

  std::size_t utterance_index(const std::string& id) const {
    for (std::size_t i = 0; i < utterances.size(); ++i)
      if (utterances[i].id == id) return i;
    throw LookupError("[vigilance-core] unknown utterance: " + id);
  }
};

// Posterior over the R_L prior's support after observing an utterance.
struct Posterior {
  DiscretePrior<RewardFunction> prior;
  std::vector<double> weights;
  double mean_recommended_reward = 0.0;

  void validate() const {
    if (weights.size() != prior.support.size())
      throw DomainError("[vigilance-core] posterior weight count mismatch");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("[vigilance-core] negative posterior weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTolerance)
      throw DomainError("[vigilance-core] posterior weights do not sum to 1");
  }
};

}  // namespace vigil
