#pragma once

// Runner and analyses for the character-incentive recommendation study. Per
// run, the 16 speaker cells (4 characters x 4 incentive magnitudes) are
// visited in a fresh random order inside ONE multi-turn dialogue per score
// type: the first cell is asked factually (preceded by the scene-setting and
// incentive-mechanism paragraphs), every later cell is framed
// counterfactually. Influence (offer quality) and incentive (reward quality)
// walk all 16 cells; trust walks the 4 characters. The three dialogues never
// share context. An unparseable score is re-asked once in place, then the
// cell is marked invalid and the run continues.
//
// Analyses: correlation_suite fits the vigilance model to each condition's
// triples and reports Bayesian-subject r (plus Bayesian-human and
// subject-human when a human table is supplied); alignment_analyses splits
// the fit by character (reward sensitivity within a character) and pools
// across the grid (calibration across characters). Both select the fitted
// beta by maximizing |r| over the search grid - the magnitude says how well
// the model explains the subject, the sign says in which direction - so a
// subject answering 100-minus-rational fits with the same strength, negated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigil/calib/calibration.hpp"
#include "vigil/core/scenario_config.hpp"
#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/stats/report.hpp"
#include "vigil/stats/stats.hpp"
#include "vigil/util/csv.hpp"
#include "vigil/util/rng.hpp"
#include "vigil/vignette/banks.hpp"

namespace vigil {

struct SpeakerProfile {
  int character_index = 0;  // 0..3
  int incentive_index = 0;  // 0..3
  int cell_index = 0;       // character_index * 4 + incentive_index
};

inline std::vector<SpeakerProfile> speaker_grid(const VignetteBank& bank) {
  std::vector<SpeakerProfile> grid;
  for (int c = 0; c < static_cast<int>(bank.n_characters()); ++c)
    for (int i = 0; i < static_cast<int>(bank.n_incentives()); ++i)
      grid.push_back({c, i, c * static_cast<int>(bank.n_incentives()) + i});
  return grid;
}

inline constexpr const char* kDefaultCounterfactualFrame =
    "Counterfactually, suppose instead that...";

struct VignetteRunConfig {
  std::string backend_id;
  VignetteScenario scenario = VignetteScenario::kCreditCard;
  PromptStyle style = PromptStyle::kDirect;
  Perspective perspective = Perspective::kFirstPerson;
  int n_runs = 1;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::string counterfactual_frame = kDefaultCounterfactualFrame;

  void validate() const {
    if (backend_id.empty()) throw ConfigError("[vignette] config missing backend id");
    if (n_runs < 1) throw ConfigError("[vignette] n_runs must be >= 1");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
      throw ConfigError("[vignette] temperature must be finite and >= 0");
    if (counterfactual_frame.empty())
      throw ConfigError("[vignette] counterfactual frame must be non-empty");
  }
};

// The shuffle the runner uses to order cells within a dialogue, exposed so
// the randomization invariant is testable without issuing any requests.
inline std::vector<int> draw_cell_order(std::size_t n_cells, std::uint64_t seed) {
  std::vector<int> order(n_cells);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

inline std::uint64_t vignette_run_seed(std::uint64_t seed, int run_index) {
  return fnv1a64("vignette-run-" + std::to_string(run_index), seed);
}

struct VignetteDialogue {
  std::string score_type;  // influence | incentive | trust
  std::vector<int> order;  // cell indices (or character indices for trust)
  std::vector<ChatMessage> messages;  // full transcript including re-asks
};

struct VignetteCellResult {
  SpeakerProfile speaker;
  std::optional<int> influence;
  std::optional<int> trust;
  std::optional<int> incentive;
  bool valid = false;
  std::string note;
};

struct VignetteRunLog {
  int run_index = 0;
  VignetteDialogue influence_dialogue;
  VignetteDialogue incentive_dialogue;
  VignetteDialogue trust_dialogue;
  std::vector<VignetteCellResult> cells;
};

struct VignetteResult {
  VignetteRunConfig config;
  std::vector<VignetteRunLog> runs;
  std::vector<ElicitedTriple> triples;  // valid cells only
};

namespace detail {

struct Elicitation {
  int index = 0;       // cell index (or character index for trust)
  std::string prompt;  // rendered, unframed
  std::map<std::string, std::string> tag_fields;
};

// One isolated dialogue: context opens the first turn, later turns carry the
// counterfactual frame. Writes parsed scores/notes into slots keyed by each
// elicitation's index.
inline VignetteDialogue run_score_dialogue(Gateway& gateway, const VignetteRunConfig& cfg,
                                           const std::string& score_type,
                                           const std::string& opening_context,
                                           const std::vector<Elicitation>& elicitations,
                                           std::vector<int> order,
                                           std::uint64_t request_seed,
                                           std::vector<std::optional<int>>& scores,
                                           std::vector<std::string>& notes) {
  VignetteDialogue dialogue;
  dialogue.score_type = score_type;
  dialogue.order = std::move(order);

  auto ask = [&](const std::string& text) {
    dialogue.messages.push_back({"user", text, ""});
    ChatRequest req{cfg.backend_id, dialogue.messages, max_tokens_for(cfg.style),
                    cfg.temperature, request_seed};
    const ChatRecord rec = gateway.complete(req);
    dialogue.messages.push_back({"assistant", rec.completion, ""});
    return rec.completion;
  };

  const std::string add_on = score_add_on(cfg.style);
  for (std::size_t k = 0; k < elicitations.size(); ++k) {
    const Elicitation& e = elicitations[k];
    const std::string body = (k == 0)
                                 ? opening_context + "\n\n" + e.prompt
                                 : cfg.counterfactual_frame + " " + e.prompt;
    const std::string text =
        body + "\n\n" + add_on + "\n" + make_probe_tag(score_type, e.tag_fields);
    auto [value, err] = try_parse_score(ask(text));
    if (!value) {
      auto [retry_value, retry_err] = try_parse_score(ask(text));
      value = retry_value;
      if (!value)
        notes[static_cast<std::size_t>(e.index)] =
            score_type + " unparseable after one re-ask: " + retry_err;
    }
    scores[static_cast<std::size_t>(e.index)] = value;
  }
  return dialogue;
}

}  // namespace detail

inline VignetteResult run_vignette(Gateway& gateway, const VignetteRunConfig& cfg) {
  cfg.validate();
  const VignetteBank& bank = bank_for(cfg.scenario);
  const auto grid = speaker_grid(bank);
  VignetteResult result;
  result.config = cfg;

  const std::string context = vignette_contextual(bank, cfg.perspective) + "\n\n" +
                              vignette_reward_context(bank, cfg.perspective);

  for (int run = 0; run < cfg.n_runs; ++run) {
    const std::uint64_t run_seed = vignette_run_seed(cfg.seed, run);
    VignetteRunLog log;
    log.run_index = run;

    std::vector<std::optional<int>> influence(bank.n_cells());
    std::vector<std::optional<int>> incentive(bank.n_cells());
    std::vector<std::optional<int>> trust(bank.n_characters());
    std::vector<std::string> influence_notes(bank.n_cells());
    std::vector<std::string> incentive_notes(bank.n_cells());
    std::vector<std::string> trust_notes(bank.n_characters());

    auto cell_walk = [&](const std::vector<int>& order, bool offer) {
      std::vector<detail::Elicitation> walk;
      for (int cell : order) {
        const SpeakerProfile& sp = grid[static_cast<std::size_t>(cell)];
        const std::size_t c = static_cast<std::size_t>(sp.character_index);
        const std::size_t i = static_cast<std::size_t>(sp.incentive_index);
        walk.push_back({cell,
                        offer ? vignette_offer_prompt(bank, cfg.perspective, c, i)
                              : vignette_reward_prompt(bank, cfg.perspective, c, i),
                        {{"channel", bank.character_keys[c]},
                         {"incentive", bank.incentive_keys[i]}}});
      }
      return walk;
    };

    const auto influence_order =
        draw_cell_order(bank.n_cells(), fnv1a64("influence-order", run_seed));
    const auto incentive_order =
        draw_cell_order(bank.n_cells(), fnv1a64("incentive-order", run_seed));
    const auto trust_order =
        draw_cell_order(bank.n_characters(), fnv1a64("trust-order", run_seed));

    log.influence_dialogue = detail::run_score_dialogue(
        gateway, cfg, "influence", context, cell_walk(influence_order, true),
        influence_order, run_seed, influence, influence_notes);
    log.incentive_dialogue = detail::run_score_dialogue(
        gateway, cfg, "incentive", context, cell_walk(incentive_order, false),
        incentive_order, run_seed, incentive, incentive_notes);

    std::vector<detail::Elicitation> trust_walk;
    for (int c : trust_order)
      trust_walk.push_back(
          {c, vignette_trust_prompt(bank, cfg.perspective, static_cast<std::size_t>(c)),
           {{"channel", bank.character_keys[static_cast<std::size_t>(c)]}}});
    log.trust_dialogue =
        detail::run_score_dialogue(gateway, cfg, "trust", context, trust_walk,
                                   trust_order, run_seed, trust, trust_notes);

    for (const SpeakerProfile& sp : grid) {
      const std::size_t cell = static_cast<std::size_t>(sp.cell_index);
      const std::size_t c = static_cast<std::size_t>(sp.character_index);
      VignetteCellResult out;
      out.speaker = sp;
      out.influence = influence[cell];
      out.incentive = incentive[cell];
      out.trust = trust[c];
      for (const std::string* n :
           {&influence_notes[cell], &incentive_notes[cell], &trust_notes[c]}) {
        if (n->empty()) continue;
        if (!out.note.empty()) out.note += "; ";
        out.note += *n;
      }
      out.valid =
          out.influence.has_value() && out.incentive.has_value() && out.trust.has_value();
      if (out.valid) {
        ElicitedTriple t;
        t.influence = *out.influence;
        t.trust = *out.trust;
        t.incentive = *out.incentive;
        t.subject_id = cfg.backend_id;
        t.condition = {{"scenario", to_string(cfg.scenario)},
                       {"style", to_string(cfg.style)},
                       {"perspective", to_string(cfg.perspective)},
                       {"character", bank.character_keys[c]},
                       {"incentive",
                        bank.incentive_keys[static_cast<std::size_t>(sp.incentive_index)]},
                       {"run", std::to_string(run)},
                       {"cell", std::to_string(sp.cell_index)}};
        result.triples.push_back(std::move(t));
      }
      log.cells.push_back(std::move(out));
    }
    result.runs.push_back(std::move(log));
  }
  return result;
}

// --- Document format ---------------------------------------------------------

inline nlohmann::json vignette_config_to_json(const VignetteRunConfig& cfg) {
  return {{"backend_id", cfg.backend_id},
          {"scenario", to_string(cfg.scenario)},
          {"style", to_string(cfg.style)},
          {"perspective", to_string(cfg.perspective)},
          {"n_runs", cfg.n_runs},
          {"seed", cfg.seed},
          {"temperature", cfg.temperature},
          {"counterfactual_frame", cfg.counterfactual_frame}};
}

inline nlohmann::json vignette_result_to_json(const VignetteResult& result) {
  nlohmann::json j;
  j["config"] = vignette_config_to_json(result.config);
  j["runs"] = nlohmann::json::array();
  for (const auto& run : result.runs) {
    nlohmann::json jr;
    jr["run_index"] = run.run_index;
    auto dlg = [](const VignetteDialogue& d) {
      nlohmann::json out;
      out["score_type"] = d.score_type;
      out["order"] = d.order;
      out["messages"] = nlohmann::json::array();
      for (const auto& m : d.messages)
        out["messages"].push_back({{"role", m.role}, {"content", m.content}});
      return out;
    };
    jr["dialogues"] = {{"influence", dlg(run.influence_dialogue)},
                       {"incentive", dlg(run.incentive_dialogue)},
                       {"trust", dlg(run.trust_dialogue)}};
    jr["cells"] = nlohmann::json::array();
    for (const auto& cell : run.cells) {
      nlohmann::json jc;
      jc["cell"] = cell.speaker.cell_index;
      jc["character_index"] = cell.speaker.character_index;
      jc["incentive_index"] = cell.speaker.incentive_index;
      jc["influence"] =
          cell.influence ? nlohmann::json(*cell.influence) : nlohmann::json(nullptr);
      jc["trust"] = cell.trust ? nlohmann::json(*cell.trust) : nlohmann::json(nullptr);
      jc["incentive"] =
          cell.incentive ? nlohmann::json(*cell.incentive) : nlohmann::json(nullptr);
      jc["valid"] = cell.valid;
      jc["note"] = cell.note;
      jr["cells"].push_back(std::move(jc));
    }
    j["runs"].push_back(std::move(jr));
  }
  return j;
}

// --- Human reference table -----------------------------------------------------
//
// One row per (scenario, character, incentive) holding mean human scores on
// the same 0-100 scales, keyed by the banks' token keys. CSV header:
//   scenario,character,incentive,influence,trust,incentive_score

struct HumanCellRow {
  std::string scenario;
  std::string character;
  std::string incentive;
  double influence = 0.0;
  double trust = 0.0;
  double incentive_score = 0.0;
};

struct HumanTable {
  std::vector<HumanCellRow> rows;

  void validate() const {
    std::map<std::string, bool> seen;
    for (const auto& r : rows) {
      for (double v : {r.influence, r.trust, r.incentive_score})
        if (!(v >= 0.0 && v <= 100.0))
          throw DomainError("[vignette] human score outside 0-100");
      const std::string key = r.scenario + "|" + r.character + "|" + r.incentive;
      if (seen.count(key))
        throw InputError("[vignette] duplicate human row for cell " + key);
      seen[key] = true;
    }
  }
};

inline const std::vector<std::string>& human_table_csv_header() {
  static const std::vector<std::string> kHeader = {
      "scenario", "character", "incentive", "influence", "trust", "incentive_score"};
  return kHeader;
}

inline std::string human_table_to_csv(const HumanTable& table) {
  table.validate();
  std::string out = csv_row(human_table_csv_header());
  for (const auto& r : table.rows)
    out += csv_row({r.scenario, r.character, r.incentive, fmt_double(r.influence, 6),
                    fmt_double(r.trust, 6), fmt_double(r.incentive_score, 6)});
  return out;
}

inline HumanTable human_table_from_csv(const std::string& text) {
  const auto rows = csv_parse(text);
  if (rows.empty() || rows.front() != human_table_csv_header())
    throw InputError("[vignette] human table missing expected header");
  auto to_score = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError("[vignette] non-numeric human score '" + s + "'");
    }
  };
  HumanTable table;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != human_table_csv_header().size())
      throw InputError("[vignette] human table row " + std::to_string(i) + " has " +
                       std::to_string(row.size()) + " fields");
    table.rows.push_back(
        {row[0], row[1], row[2], to_score(row[3]), to_score(row[4]), to_score(row[5])});
  }
  table.validate();
  return table;
}

// --- Correlation analyses --------------------------------------------------

struct CorrelationCell {
  double r = 0.0;
  std::size_t n = 0;
  bool degenerate = false;  // constant series (or too little data): r shown as 0
};

struct VignetteAnalysisConfig {
  Scenario model_template = default_recommendation_scenario();
  std::vector<double> beta_grid = default_beta_grid();
  // Condition flags that define a fitting group in correlation_suite.
  std::vector<std::string> group_keys = {"style", "perspective"};
};

namespace detail {

struct MagnitudeFit {
  double beta_s = 0.0;
  double r = 0.0;
  bool degenerate = false;
  std::vector<double> predicted;  // 0-100 scale, aligned with the triples
};

// Grid fit selecting the beta with the largest |r| (ties -> smallest beta).
inline MagnitudeFit fit_by_magnitude(const std::vector<ElicitedTriple>& triples,
                                     const Scenario& tpl,
                                     const std::vector<double>& grid) {
  MagnitudeFit out;
  FitResult base;
  try {
    base = fit_beta(triples, tpl, grid);
  } catch (const FitDegenerateError&) {
    out.degenerate = true;
    return out;
  }
  double best_abs = -1.0;
  for (const auto& g : base.diagnostics) {
    if (g.degenerate) continue;
    const double mag = std::fabs(g.r);
    if (mag > best_abs || (mag == best_abs && g.beta_s < out.beta_s)) {
      best_abs = mag;
      out.beta_s = g.beta_s;
      out.r = g.r;
    }
  }
  for (const auto& t : triples) {
    Scenario sc = triple_to_scenario(t, tpl);
    sc.beta_s = out.beta_s;
    out.predicted.push_back(predict_influence(sc));
  }
  return out;
}

inline CorrelationCell correlate(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
  if (xs.size() < 3) return {0.0, xs.size(), true};
  const CorrelationResult c = pearson(xs, ys);
  return {c.degenerate ? 0.0 : c.r, c.n, c.degenerate};
}

}  // namespace detail

struct ConditionCorrelations {
  std::map<std::string, std::string> condition;
  std::size_t n_triples = 0;
  double beta_s = 0.0;
  bool fit_degenerate = false;
  CorrelationCell bayesian_llm;
  std::optional<CorrelationCell> bayesian_human;  // present iff human table given
  std::optional<CorrelationCell> llm_human;
};

struct SuiteAverage {
  double r = 0.0;
  std::size_t n_conditions = 0;  // non-degenerate conditions contributing
};

struct CorrelationSuite {
  std::vector<ConditionCorrelations> per_condition;
  SuiteAverage bayesian_llm_avg;
  std::optional<SuiteAverage> bayesian_human_avg;
  std::optional<SuiteAverage> llm_human_avg;
};

inline CorrelationSuite correlation_suite(const std::vector<ElicitedTriple>& triples,
                                          const std::optional<HumanTable>& human =
                                              std::nullopt,
                                          const VignetteAnalysisConfig& cfg = {}) {
  if (triples.empty()) throw InputError("[vignette] correlation_suite given no triples");
  if (human) human->validate();

  std::map<std::vector<std::string>, std::vector<ElicitedTriple>> groups;
  for (const auto& t : triples) {
    std::vector<std::string> key;
    for (const auto& k : cfg.group_keys) {
      const auto it = t.condition.find(k);
      key.push_back(it == t.condition.end() ? "" : it->second);
    }
    groups[key].push_back(t);
  }

  CorrelationSuite suite;
  double sum_bl = 0.0, sum_bh = 0.0, sum_lh = 0.0;
  std::size_t n_bl = 0, n_bh = 0, n_lh = 0;

  for (const auto& [key, group] : groups) {
    ConditionCorrelations cc;
    for (std::size_t i = 0; i < cfg.group_keys.size(); ++i)
      cc.condition[cfg.group_keys[i]] = key[i];
    cc.n_triples = group.size();

    const detail::MagnitudeFit fit =
        detail::fit_by_magnitude(group, cfg.model_template, cfg.beta_grid);
    cc.fit_degenerate = fit.degenerate;
    cc.beta_s = fit.beta_s;
    cc.bayesian_llm = fit.degenerate ? CorrelationCell{0.0, group.size(), true}
                                     : CorrelationCell{fit.r, group.size(), false};
    if (!cc.bayesian_llm.degenerate) {
      sum_bl += cc.bayesian_llm.r;
      ++n_bl;
    }

    if (human) {
      // Per-cell means over the group, keyed by (scenario, character, incentive).
      struct CellAgg {
        double obs_sum = 0.0, pred_sum = 0.0;
        std::size_t n = 0;
      };
      std::map<std::string, CellAgg> cells;
      auto cell_key = [](const std::map<std::string, std::string>& cond) {
        auto get = [&](const char* k) {
          const auto it = cond.find(k);
          return it == cond.end() ? std::string() : it->second;
        };
        return get("scenario") + "|" + get("character") + "|" + get("incentive");
      };
      for (std::size_t i = 0; i < group.size(); ++i) {
        CellAgg& agg = cells[cell_key(group[i].condition)];
        agg.obs_sum += static_cast<double>(group[i].influence);
        if (!fit.degenerate) agg.pred_sum += fit.predicted[i];
        ++agg.n;
      }
      std::vector<double> llm_means, pred_means, human_vals;
      for (const auto& row : human->rows) {
        const std::string key_h = row.scenario + "|" + row.character + "|" + row.incentive;
        const auto it = cells.find(key_h);
        if (it == cells.end()) continue;
        llm_means.push_back(it->second.obs_sum / static_cast<double>(it->second.n));
        pred_means.push_back(it->second.pred_sum / static_cast<double>(it->second.n));
        human_vals.push_back(row.influence);
      }
      cc.llm_human = detail::correlate(llm_means, human_vals);
      cc.bayesian_human = fit.degenerate
                              ? CorrelationCell{0.0, human_vals.size(), true}
                              : detail::correlate(pred_means, human_vals);
      if (!cc.llm_human->degenerate) {
        sum_lh += cc.llm_human->r;
        ++n_lh;
      }
      if (!cc.bayesian_human->degenerate) {
        sum_bh += cc.bayesian_human->r;
        ++n_bh;
      }
    }
    suite.per_condition.push_back(std::move(cc));
  }

  suite.bayesian_llm_avg = {n_bl ? sum_bl / static_cast<double>(n_bl) : 0.0, n_bl};
  if (human) {
    suite.bayesian_human_avg = SuiteAverage{n_bh ? sum_bh / static_cast<double>(n_bh) : 0.0,
                                            n_bh};
    suite.llm_human_avg = SuiteAverage{n_lh ? sum_lh / static_cast<double>(n_lh) : 0.0,
                                       n_lh};
  }
  return suite;
}

// --- Alignment analyses ------------------------------------------------------

struct CharacterAlignment {
  std::string character;
  CorrelationCell r;
  bool excluded = false;  // constant scores or too little data
};

struct AlignmentAnalyses {
  double beta_s = 0.0;
  bool fit_degenerate = false;
  std::vector<CharacterAlignment> per_character;
  double intra_character = 0.0;  // mean of the included per-character r values
  std::size_t intra_n_characters = 0;
  bool intra_degenerate = false;  // no character produced a defined r
  CorrelationCell cross_character;
};

inline AlignmentAnalyses alignment_analyses(const std::vector<ElicitedTriple>& triples,
                                            const VignetteAnalysisConfig& cfg = {}) {
  if (triples.empty()) throw InputError("[vignette] alignment_analyses given no triples");

  std::map<std::string, std::vector<std::size_t>> by_character;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto it = triples[i].condition.find("character");
    by_character[it == triples[i].condition.end() ? "" : it->second].push_back(i);
  }
  for (const auto& [character, idx] : by_character) {
    std::map<std::string, bool> levels;
    for (std::size_t i : idx) {
      const auto it = triples[i].condition.find("incentive");
      levels[it == triples[i].condition.end() ? "" : it->second] = true;
    }
    if (levels.size() < 2)
      throw InputError("[vignette] character '" + character +
                       "' has fewer than 2 incentive levels");
  }

  AlignmentAnalyses out;
  const detail::MagnitudeFit fit =
      detail::fit_by_magnitude(triples, cfg.model_template, cfg.beta_grid);
  out.fit_degenerate = fit.degenerate;
  out.beta_s = fit.beta_s;

  if (fit.degenerate) {
    out.cross_character = {0.0, triples.size(), true};
    for (const auto& [character, idx] : by_character)
      out.per_character.push_back({character, {0.0, idx.size(), true}, true});
    out.intra_degenerate = true;
    return out;
  }

  std::vector<double> observed;
  for (const auto& t : triples) observed.push_back(static_cast<double>(t.influence));
  out.cross_character = detail::correlate(fit.predicted, observed);

  double sum = 0.0;
  for (const auto& [character, idx] : by_character) {
    std::vector<double> pred, obs;
    for (std::size_t i : idx) {
      pred.push_back(fit.predicted[i]);
      obs.push_back(observed[i]);
    }
    CharacterAlignment ca;
    ca.character = character;
    ca.r = detail::correlate(pred, obs);
    ca.excluded = ca.r.degenerate;
    if (!ca.excluded) {
      sum += ca.r.r;
      ++out.intra_n_characters;
    }
    out.per_character.push_back(std::move(ca));
  }
  out.intra_character =
      out.intra_n_characters ? sum / static_cast<double>(out.intra_n_characters) : 0.0;
  out.intra_degenerate = out.intra_n_characters == 0;
  return out;
}

// --- Report assembly ---------------------------------------------------------

inline nlohmann::json correlation_cell_to_json(const CorrelationCell& c) {
  return {{"r", c.r}, {"n", c.n}, {"degenerate", c.degenerate}};
}

inline nlohmann::json correlation_suite_to_json(const CorrelationSuite& suite) {
  nlohmann::json j;
  j["per_condition"] = nlohmann::json::array();
  for (const auto& cc : suite.per_condition) {
    nlohmann::json jc;
    jc["condition"] = cc.condition;
    jc["n_triples"] = cc.n_triples;
    jc["beta_s"] = cc.beta_s;
    jc["fit_degenerate"] = cc.fit_degenerate;
    jc["bayesian_llm"] = correlation_cell_to_json(cc.bayesian_llm);
    if (cc.bayesian_human) jc["bayesian_human"] = correlation_cell_to_json(*cc.bayesian_human);
    if (cc.llm_human) jc["llm_human"] = correlation_cell_to_json(*cc.llm_human);
    j["per_condition"].push_back(std::move(jc));
  }
  j["bayesian_llm_avg"] = {{"r", suite.bayesian_llm_avg.r},
                           {"n_conditions", suite.bayesian_llm_avg.n_conditions}};
  if (suite.bayesian_human_avg)
    j["bayesian_human_avg"] = {{"r", suite.bayesian_human_avg->r},
                               {"n_conditions", suite.bayesian_human_avg->n_conditions}};
  if (suite.llm_human_avg)
    j["llm_human_avg"] = {{"r", suite.llm_human_avg->r},
                          {"n_conditions", suite.llm_human_avg->n_conditions}};
  return j;
}

inline nlohmann::json alignment_to_json(const AlignmentAnalyses& a) {
  nlohmann::json j;
  j["beta_s"] = a.beta_s;
  j["fit_degenerate"] = a.fit_degenerate;
  j["intra_character"] = {{"mean_r", a.intra_character},
                          {"n_characters", a.intra_n_characters},
                          {"degenerate", a.intra_degenerate}};
  j["cross_character"] = correlation_cell_to_json(a.cross_character);
  j["per_character"] = nlohmann::json::array();
  for (const auto& ca : a.per_character)
    j["per_character"].push_back({{"character", ca.character},
                                  {"r", correlation_cell_to_json(ca.r)},
                                  {"excluded", ca.excluded}});
  return j;
}

// Correlation table (one row per condition plus the cross-condition average),
// a per-condition bar chart, and optional alignment breakdown.
inline Report make_vignette_report(const CorrelationSuite& suite,
                                   const std::optional<AlignmentAnalyses>& alignment =
                                       std::nullopt) {
  Report report;
  const bool with_human = !suite.per_condition.empty() &&
                          suite.per_condition.front().bayesian_human.has_value();

  Table corr;
  corr.name = "correlations";
  corr.header = {"condition", "n_triples", "beta_s", "bayesian_llm", "flags"};
  if (with_human) {
    corr.header.push_back("bayesian_human");
    corr.header.push_back("llm_human");
  }
  auto flag = [](const CorrelationCell& c) { return c.degenerate ? "degenerate" : ""; };
  for (const auto& cc : suite.per_condition) {
    std::vector<std::string> row = {condition_to_string(cc.condition),
                                    std::to_string(cc.n_triples), fmt_double(cc.beta_s, 6),
                                    fmt_double(cc.bayesian_llm.r, 6),
                                    flag(cc.bayesian_llm)};
    if (with_human) {
      row.push_back(fmt_double(cc.bayesian_human->r, 6));
      row.push_back(fmt_double(cc.llm_human->r, 6));
    }
    corr.rows.push_back(std::move(row));
  }
  {
    std::vector<std::string> avg = {"average", "", "",
                                    fmt_double(suite.bayesian_llm_avg.r, 6), ""};
    if (with_human) {
      avg.push_back(fmt_double(suite.bayesian_human_avg->r, 6));
      avg.push_back(fmt_double(suite.llm_human_avg->r, 6));
    }
    corr.rows.push_back(std::move(avg));
  }
  report.tables.push_back(std::move(corr));

  BarChart chart;
  chart.name = "bayesian_llm";
  chart.title = "Model-subject correlation by condition";
  chart.x_label = "condition";
  chart.y_label = "Pearson r";
  BarSeries series;
  series.label = "bayesian_llm";
  for (const auto& cc : suite.per_condition) {
    chart.groups.push_back(condition_to_string(cc.condition));
    series.values.push_back(cc.bayesian_llm.r);
  }
  chart.series.push_back(std::move(series));
  report.bar_charts.push_back(std::move(chart));

  if (alignment) {
    Table align;
    align.name = "alignment";
    align.header = {"character", "r", "n", "excluded"};
    for (const auto& ca : alignment->per_character)
      align.rows.push_back({ca.character, fmt_double(ca.r.r, 6), std::to_string(ca.r.n),
                            ca.excluded ? "yes" : ""});
    report.tables.push_back(std::move(align));
  }

  report.summary["correlation_suite"] = correlation_suite_to_json(suite);
  if (alignment) report.summary["alignment"] = alignment_to_json(*alignment);
  return report;
}

}  // namespace vigil
