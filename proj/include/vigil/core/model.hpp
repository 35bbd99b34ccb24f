#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "vigil/core/types.hpp"
#include "vigil/errors.hpp"

namespace vigil {

// Joint reward of an action: the listener's reward weighted by the speaker's
// benevolence lambda plus the speaker's own reward weighted by 1 - lambda.
inline double joint_reward(double r_l, double r_s, double lambda) {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(r_l) || !in_unit(r_s) || !in_unit(lambda))
    throw DomainError("[vigilance-core] joint_reward arguments must lie in [0,1]");
  return lambda * r_l + (1.0 - lambda) * r_s;
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;  // all -inf
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

inline std::vector<double> softmax(const std::vector<double>& scores) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : scores) mx = std::max(mx, s);
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline std::vector<double> reward_vector(const RewardFunction& rf, const ActionSet& actions) {
  std::vector<double> v(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) v[i] = rf.at(actions.actions[i]);
  return v;
}

}  // namespace detail

// Literal listener policy over actions, given an utterance.
//
// Deterministic-compliance mode puts all mass on the recommended action.
// Softmax mode conditions the listener's R_L prior on the utterance's literal
// semantics (the recommended action is in fact a best action under the
// hypothesis) and then applies a softmax with inverse temperature beta_l to
// the conditioned expected rewards. If no hypothesis satisfies the semantics,
// the unconditioned prior expectation is used.
inline std::vector<double> literal_listener_policy(const Scenario& scenario,
                                                   std::size_t utterance_idx) {
  if (utterance_idx >= scenario.utterances.size())
    throw LookupError("[vigilance-core] utterance index out of range");
  const auto& utt = scenario.utterances[utterance_idx];
  const std::size_t n = scenario.actions.size();
  const std::size_t rec = scenario.actions.index_of(utt.recommended_action);

  if (scenario.listener_mode == ListenerPolicyMode::kDeterministicCompliance) {
    std::vector<double> pi(n, 0.0);
    pi[rec] = 1.0;
    return pi;
  }

  std::vector<double> expected(n, 0.0);
  double mass = 0.0;
  for (std::size_t h = 0; h < scenario.prior_rl.size(); ++h) {
    const auto rv = detail::reward_vector(scenario.prior_rl.support[h], scenario.actions);
    double best = *std::max_element(rv.begin(), rv.end());
    if (rv[rec] + 1e-15 < best) continue;  // semantics: recommended is a best action
    const double w = scenario.prior_rl.weights[h];
    mass += w;
    for (std::size_t a = 0; a < n; ++a) expected[a] += w * rv[a];
  }
  if (mass <= 0.0) {
    // Semantics rule out every hypothesis; fall back to the plain prior mean.
    std::fill(expected.begin(), expected.end(), 0.0);
    for (std::size_t h = 0; h < scenario.prior_rl.size(); ++h) {
      const auto rv = detail::reward_vector(scenario.prior_rl.support[h], scenario.actions);
      for (std::size_t a = 0; a < n; ++a) expected[a] += scenario.prior_rl.weights[h] * rv[a];
    }
    mass = 1.0;
  }
  std::vector<double> scores(n);
  for (std::size_t a = 0; a < n; ++a) scores[a] = scenario.beta_l * expected[a] / mass;
  return detail::softmax(scores);
}

inline std::vector<double> literal_listener_policy(const Scenario& scenario,
                                                   const std::string& utterance_id) {
  return literal_listener_policy(scenario, scenario.utterance_index(utterance_id));
}

namespace detail {

// Expected joint reward of each utterance for a (r_s, r_l, lambda) triple,
// with the listener policies precomputed per utterance.
inline std::vector<double> utterance_utilities(const Scenario& scenario,
                                               const std::vector<std::vector<double>>& policies,
                                               const std::vector<double>& rs_vec,
                                               const std::vector<double>& rl_vec,
                                               double lambda) {
  std::vector<double> eu(scenario.utterances.size(), 0.0);
  const std::size_t n = scenario.actions.size();
  for (std::size_t u = 0; u < scenario.utterances.size(); ++u) {
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      acc += (lambda * rl_vec[a] + (1.0 - lambda) * rs_vec[a]) * policies[u][a];
    eu[u] = acc;
  }
  return eu;
}

inline std::vector<std::vector<double>> all_policies(const Scenario& scenario) {
  std::vector<std::vector<double>> policies(scenario.utterances.size());
  for (std::size_t u = 0; u < scenario.utterances.size(); ++u)
    policies[u] = literal_listener_policy(scenario, u);
  return policies;
}

}  // namespace detail

// Speaker distribution over the scenario's utterance set (Luce choice with
// inverse temperature beta_s over expected joint reward). Max-subtraction
// keeps the weights finite for arbitrarily large beta_s.
inline std::vector<double> speaker_utterance_distribution(const Scenario& scenario,
                                                          const RewardFunction& r_s,
                                                          const RewardFunction& r_l,
                                                          double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0 || lambda > 1.0)
    throw DomainError("[vigilance-core] lambda must lie in [0,1]");
  r_s.validate(scenario.actions);
  r_l.validate(scenario.actions);
  const auto policies = detail::all_policies(scenario);
  const auto rs_vec = detail::reward_vector(r_s, scenario.actions);
  const auto rl_vec = detail::reward_vector(r_l, scenario.actions);
  auto eu = detail::utterance_utilities(scenario, policies, rs_vec, rl_vec, lambda);
  for (double& v : eu) v *= scenario.beta_s;
  return detail::softmax(eu);
}

namespace detail {

// Normalizes log-likelihood + log-prior into a Posterior. Factored out so the
// all-zero-evidence branch is directly testable.
inline Posterior posterior_from_log_likelihoods(const DiscretePrior<RewardFunction>& prior,
                                                const std::vector<double>& log_lik,
                                                const std::string& recommended_action) {
  std::vector<double> log_post(prior.size(), -std::numeric_limits<double>::infinity());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < prior.size(); ++h) {
    if (prior.weights[h] <= 0.0) continue;
    log_post[h] = std::log(prior.weights[h]) + log_lik[h];
    mx = std::max(mx, log_post[h]);
  }
  if (!std::isfinite(mx))
    throw DegenerateEvidenceError(
        "[vigilance-core] observed utterance has zero probability under every hypothesis");
  Posterior post;
  post.prior = prior;
  post.weights.resize(prior.size());
  double sum = 0.0;
  for (std::size_t h = 0; h < prior.size(); ++h) {
    post.weights[h] = std::isfinite(log_post[h]) ? std::exp(log_post[h] - mx) : 0.0;
    sum += post.weights[h];
  }
  double mean = 0.0;
  for (std::size_t h = 0; h < prior.size(); ++h) {
    post.weights[h] /= sum;
    mean += post.weights[h] * prior.support[h].at(recommended_action);
  }
  post.mean_recommended_reward = mean;
  return post;
}

}  // namespace detail

// Vigilant posterior over R_L hypotheses after observing an utterance,
// marginalizing R_S and lambda by exact enumeration (Bayes rule over the
// discrete grids; no sampling). All accumulation is in the log domain.
inline Posterior vigilant_posterior(const Scenario& scenario, std::size_t observed_idx) {
  if (observed_idx >= scenario.utterances.size())
    throw LookupError("[vigilance-core] utterance index out of range");
  const auto policies = detail::all_policies(scenario);
  const auto& rl_prior = scenario.prior_rl;
  const auto& rs_prior = scenario.prior_rs;
  const auto& lam_prior = scenario.prior_lambda;

  std::vector<std::vector<double>> rl_vecs(rl_prior.size());
  for (std::size_t h = 0; h < rl_prior.size(); ++h)
    rl_vecs[h] = detail::reward_vector(rl_prior.support[h], scenario.actions);
  std::vector<std::vector<double>> rs_vecs(rs_prior.size());
  for (std::size_t s = 0; s < rs_prior.size(); ++s)
    rs_vecs[s] = detail::reward_vector(rs_prior.support[s], scenario.actions);

  // Dot products of each reward hypothesis with each utterance's policy.
  const std::size_t n_utt = scenario.utterances.size();
  auto dots = [&](const std::vector<std::vector<double>>& vecs) {
    std::vector<std::vector<double>> d(vecs.size(), std::vector<double>(n_utt, 0.0));
    for (std::size_t i = 0; i < vecs.size(); ++i)
      for (std::size_t u = 0; u < n_utt; ++u)
        for (std::size_t a = 0; a < scenario.actions.size(); ++a)
          d[i][u] += vecs[i][a] * policies[u][a];
    return d;
  };
  const auto rl_dots = dots(rl_vecs);
  const auto rs_dots = dots(rs_vecs);

  std::vector<double> log_lik(rl_prior.size());
  std::vector<double> scores(n_utt);
  std::vector<double> terms;
  terms.reserve(rs_prior.size() * lam_prior.size());
  for (std::size_t h = 0; h < rl_prior.size(); ++h) {
    terms.clear();
    for (std::size_t s = 0; s < rs_prior.size(); ++s) {
      if (rs_prior.weights[s] <= 0.0) continue;
      const double log_ps_weight = std::log(rs_prior.weights[s]);
      for (std::size_t l = 0; l < lam_prior.size(); ++l) {
        if (lam_prior.weights[l] <= 0.0) continue;
        const double lambda = lam_prior.support[l];
        for (std::size_t u = 0; u < n_utt; ++u)
          scores[u] = scenario.beta_s *
                      (lambda * rl_dots[h][u] + (1.0 - lambda) * rs_dots[s][u]);
        // log P_S(observed | rs, rl, lambda) via log-softmax.
        const double log_ps = scores[observed_idx] - detail::log_sum_exp(scores);
        terms.push_back(log_ps + log_ps_weight + std::log(lam_prior.weights[l]));
      }
    }
    log_lik[h] = detail::log_sum_exp(terms);
  }

  const auto& rec_action = scenario.utterances[observed_idx].recommended_action;
  return detail::posterior_from_log_likelihoods(rl_prior, log_lik, rec_action);
}

inline Posterior vigilant_posterior(const Scenario& scenario, const std::string& utterance_id) {
  return vigilant_posterior(scenario, scenario.utterance_index(utterance_id));
}

}  // namespace vigil
