#pragma once

// Calibration layer between elicited 0-100 scores and model quantities:
// trust/100 becomes a point-mass lambda prior, incentive/100 becomes the
// recommended option's R_S value, and the model's predicted influence is
// 100 x the posterior mean reward of the recommended option. A single free
// parameter (beta_s) is fitted by exhaustive grid search on Pearson r.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigil/core/model.hpp"
#include "vigil/core/types.hpp"
#include "vigil/errors.hpp"
#include "vigil/stats/stats.hpp"
#include "vigil/util/csv.hpp"

namespace vigil {

struct ElicitedTriple {
  int influence = 0;  // 0-100
  int trust = 0;      // 0-100
  int incentive = 0;  // 0-100
  std::string subject_id;
  // Closed condition flags set by the runner (prompt style, perspective,
  // scenario, speaker cell / sponsor id, ...).
  std::map<std::string, std::string> condition;

  void validate() const {
    for (int v : {influence, trust, incentive})
      if (v < 0 || v > 100)
        throw DomainError("[calibration] elicited score " + std::to_string(v) +
                          " outside 0-100");
  }
};

struct FitResult {
  double beta_s = 0.0;
  ListenerPolicyMode listener_mode = ListenerPolicyMode::kDeterministicCompliance;
  double pearson_r = 0.0;
  std::vector<double> predicted;  // model means in [0,1], aligned to observations

  struct GridPoint {
    double beta_s = 0.0;
    double r = 0.0;
    bool degenerate = false;  // predicted series constant at this beta
  };
  std::vector<GridPoint> diagnostics;
};

// Returns the template with lambda replaced by a point mass at trust/100 and
// R_S replaced by a point mass whose recommended-option value is
// incentive/100. The R_S values of the other options are taken from the
// template prior's first support point; the R_L prior is left untouched.
inline Scenario triple_to_scenario(const ElicitedTriple& triple, const Scenario& tpl) {
  triple.validate();
  tpl.validate();
  Scenario sc = tpl;
  sc.prior_lambda =
      DiscretePrior<double>::point_mass(static_cast<double>(triple.trust) / 100.0);
  RewardFunction rs = tpl.prior_rs.support.front();
  const std::string& rec = tpl.utterances[tpl.recommended_utterance].recommended_action;
  rs.table.at(rec) = static_cast<double>(triple.incentive) / 100.0;
  sc.prior_rs = DiscretePrior<RewardFunction>::point_mass(rs);
  sc.validate();
  return sc;
}

// 100 x posterior mean reward of the recommended option after hearing the
// recommendation.
inline double predict_influence(const Scenario& scenario) {
  const Posterior post = vigilant_posterior(scenario, scenario.recommended_utterance);
  return 100.0 * post.mean_recommended_reward;
}

// Log-spaced default search grid, 0.1 .. 100 in 25 points.
inline std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 25; ++i) grid.push_back(std::pow(10.0, -1.0 + 3.0 * i / 24.0));
  return grid;
}

// Exhaustive one-dimensional fit: evaluates Pearson r between predicted and
// observed influence at every grid beta and returns the argmax. Exact ties
// break toward the smallest beta (weakest rationality assumption). Grid
// points where the predictions are constant (correlation undefined) are
// flagged in the diagnostics and excluded from the argmax; if every point is
// degenerate the fit itself is degenerate.
inline FitResult fit_beta(const std::vector<ElicitedTriple>& observed, const Scenario& tpl,
                          const std::vector<double>& beta_grid) {
  if (observed.size() < 3)
    throw FitDegenerateError("[calibration] fit_beta needs at least 3 observations, got " +
                             std::to_string(observed.size()));
  if (beta_grid.empty()) throw InputError("[calibration] fit_beta given empty beta grid");
  for (double b : beta_grid)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw DomainError("[calibration] beta grid values must be finite and >= 0");

  std::vector<double> obs;
  for (const auto& t : observed) {
    t.validate();
    obs.push_back(static_cast<double>(t.influence));
  }
  if (*std::min_element(obs.begin(), obs.end()) ==
      *std::max_element(obs.begin(), obs.end()))
    throw FitDegenerateError(
        "[calibration] observed influence series is constant; correlation undefined");

  FitResult best;
  bool have_best = false;
  for (double beta : beta_grid) {
    std::vector<double> pred;
    for (const auto& t : observed) {
      Scenario sc = triple_to_scenario(t, tpl);
      sc.beta_s = beta;
      pred.push_back(predict_influence(sc) / 100.0);
    }
    const CorrelationResult c = pearson(pred, obs);
    best.diagnostics.push_back({beta, c.r, c.degenerate});
    if (c.degenerate) continue;
    const bool better =
        !have_best || c.r > best.pearson_r ||
        (c.r == best.pearson_r && beta < best.beta_s);
    if (better) {
      best.beta_s = beta;
      best.pearson_r = c.r;
      best.predicted = pred;
      have_best = true;
    }
  }
  if (!have_best)
    throw FitDegenerateError(
        "[calibration] model predictions constant at every grid point; fit undefined");
  best.listener_mode = tpl.listener_mode;
  return best;
}

// --- Delimited-table and document formats ------------------------------------
//
// Triples travel as CSV with the header
//   subject_id,influence,trust,incentive,condition
// where `condition` packs the flag map as `key=value` pairs joined by ';'
// in key order.

inline std::string condition_to_string(const std::map<std::string, std::string>& cond) {
  std::string out;
  for (const auto& [k, v] : cond) {
    if (!out.empty()) out.push_back(';');
    out += k + "=" + v;
  }
  return out;
}

inline std::map<std::string, std::string> condition_from_string(const std::string& s) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(';', pos);
    if (end == std::string::npos) end = s.size();
    const std::string item = s.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw InputError("[calibration] malformed condition item '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
    pos = end + 1;
  }
  return out;
}

inline const std::vector<std::string>& triples_csv_header() {
  static const std::vector<std::string> kHeader = {"subject_id", "influence", "trust",
                                                   "incentive", "condition"};
  return kHeader;
}

inline std::string triples_to_csv(const std::vector<ElicitedTriple>& triples) {
  std::string out = csv_row(triples_csv_header());
  for (const auto& t : triples) {
    t.validate();
    out += csv_row({t.subject_id, std::to_string(t.influence), std::to_string(t.trust),
                    std::to_string(t.incentive), condition_to_string(t.condition)});
  }
  return out;
}

inline std::vector<ElicitedTriple> triples_from_csv(const std::string& text) {
  const auto rows = csv_parse(text);
  if (rows.empty() || rows.front() != triples_csv_header())
    throw InputError("[calibration] triples table missing expected header");
  auto to_score = [](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw InputError("[calibration] non-integer score '" + s + "'");
    }
    if (used != s.size()) throw InputError("[calibration] non-integer score '" + s + "'");
    return v;
  };
  std::vector<ElicitedTriple> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != triples_csv_header().size())
      throw InputError("[calibration] triples row " + std::to_string(i) + " has " +
                       std::to_string(row.size()) + " fields");
    ElicitedTriple t;
    t.subject_id = row[0];
    t.influence = to_score(row[1]);
    t.trust = to_score(row[2]);
    t.incentive = to_score(row[3]);
    t.condition = condition_from_string(row[4]);
    t.validate();
    out.push_back(std::move(t));
  }
  return out;
}

inline nlohmann::json fit_result_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["beta_s"] = fit.beta_s;
  j["listener_mode"] = to_string(fit.listener_mode);
  j["pearson_r"] = fit.pearson_r;
  j["predicted"] = fit.predicted;
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& g : fit.diagnostics)
    j["diagnostics"].push_back(
        {{"beta_s", g.beta_s}, {"r", g.r}, {"degenerate", g.degenerate}});
  return j;
}

}  // namespace vigil
