#pragma once

// The two-player counting game, end to end: both players talk to the same
// chat backend in separate stateful dialogues. Player 1 answers every easy
// question and leaves advice for each; player 2 answers the hard variants,
// is then shown either player 1's actual guess ("spied") or the advice
// ("advice") — drawn uniformly per question — and may revise. The analysis
// measures how far the revision moved toward the transmitted number.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vigil/errors.hpp"
#include "vigil/game/prompts.hpp"
#include "vigil/game/stimulus.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/stats/report.hpp"
#include "vigil/stats/stats.hpp"
#include "vigil/util/format.hpp"
#include "vigil/util/rng.hpp"

namespace vigil {

struct GameTrial {
  int pair_index = 0;  // position in the session's stimulus list
  InfoType info_type = InfoType::kAdvice;
  Payoff payoff = Payoff::kCooperative;
  PromptStyle prompt_style = PromptStyle::kDirect;
  int ground_truth = 0;
  std::optional<int> p1_guess;   // player 1's actual answer (always elicited)
  std::optional<int> p1_advice;  // recorded only on advice trials
  std::optional<int> p2_initial;
  std::optional<int> p2_final;
  bool valid = false;
  std::string note;  // why the trial is invalid; empty otherwise
};

// The number player 2 was shown: the advice on advice trials, the actual
// guess on spied trials.
inline std::optional<int> transmitted_value(const GameTrial& t) {
  return t.info_type == InfoType::kAdvice ? t.p1_advice : t.p1_guess;
}

struct GameConfig {
  std::string backend_id;
  Payoff payoff = Payoff::kCooperative;
  PromptStyle prompt_style = PromptStyle::kDirect;
  int n_pairs = 20;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  StimulusStyle style{};

  void validate() const {
    if (backend_id.empty()) throw ConfigError("[circle-game] backend_id is empty");
    if (n_pairs < 1) throw ConfigError("[circle-game] n_pairs must be >= 1");
    if (!(temperature >= 0.0))
      throw ConfigError("[circle-game] temperature must be >= 0");
  }
};

struct GameRun {
  GameConfig config;
  std::vector<int> answers;  // shared easy/hard answer list, session order
  std::vector<GameTrial> trials;  // play order
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

// Last integer in free text, tolerant of a closing sentence period but not of
// decimals: "The answer is 4." yields 4, while "3.14" yields nothing.
inline std::optional<long> last_game_integer(const std::string& text) {
  std::optional<long> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t end = i;
    bool neg = false;
    std::size_t left = begin;
    if (left > 0 && text[left - 1] == '-') {
      neg = true;
      --left;
    }
    const bool left_ok =
        left == 0 || (!std::isalnum(static_cast<unsigned char>(text[left - 1])) &&
                      text[left - 1] != '.');
    bool right_ok = true;
    if (end < text.size()) {
      const char c = text[end];
      if (std::isalnum(static_cast<unsigned char>(c))) right_ok = false;
      // A '.' right after the digits is a decimal point only when more digits
      // follow; otherwise it is sentence punctuation.
      if (c == '.' && end + 1 < text.size() &&
          std::isdigit(static_cast<unsigned char>(text[end + 1])))
        right_ok = false;
    }
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

// Fallback numeric parsing for game replies: the last integer token in the
// completion (CoT replies end with the answer). Never throws.
inline std::optional<int> try_parse_game_number(const std::string& completion) noexcept {
  try {
    const auto v = detail::last_game_integer(completion);
    if (!v) return std::nullopt;
    return static_cast<int>(*v);
  } catch (...) {
    return std::nullopt;
  }
}

// Proportion of the gap toward the transmitted number that the revision
// covered. Undefined (excluded) when the transmitted number already equals
// the initial guess; deliberately not clamped, so overshoot (> 1) and
// movement away (< 0) are preserved.
inline std::optional<double> proportion_shift(int initial, int transmitted, int final) {
  if (transmitted == initial) return std::nullopt;
  return static_cast<double>(final - initial) /
         static_cast<double>(transmitted - initial);
}

// A valid trial's shift, when defined.
inline std::optional<double> trial_shift(const GameTrial& t) {
  if (!t.valid) return std::nullopt;
  const auto transmitted = transmitted_value(t);
  if (!transmitted || !t.p2_initial || !t.p2_final) return std::nullopt;
  return proportion_shift(*t.p2_initial, *transmitted, *t.p2_final);
}

// Play order and per-question condition for one session, both drawn from the
// run seed: the question order is reshuffled every run and each question is
// assigned advice/spied uniformly at random.
struct SessionPlan {
  std::vector<int> order;        // pair ids in play order
  std::vector<InfoType> info;    // condition per play position
};

inline SessionPlan draw_session_plan(int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw DomainError("[circle-game] n_pairs must be >= 1");
  Rng rng(fnv1a64("game-run", seed));
  SessionPlan plan;
  plan.order.resize(static_cast<std::size_t>(n_pairs));
  for (int p = 0; p < n_pairs; ++p) plan.order[static_cast<std::size_t>(p)] = p;
  rng.shuffle(plan.order);
  plan.info.resize(plan.order.size());
  for (auto& t : plan.info) t = rng.coin() ? InfoType::kAdvice : InfoType::kSpied;
  return plan;
}

// Runs one full session: player 1's dialogue over every question, then
// player 2's. Any gateway failure aborts the run and preserves the partial
// trial log; unparseable replies only invalidate their own trial.
inline GameRun run_game(Gateway& gateway, const GameConfig& cfg,
                        const std::vector<StimulusPair>* shared_stimuli = nullptr) {
  cfg.validate();

  std::vector<StimulusPair> local;
  const std::vector<StimulusPair>* stimuli = shared_stimuli;
  if (!stimuli) {
    local = make_session_stimuli(cfg.n_pairs, fnv1a64("session-stimuli", cfg.seed),
                                 cfg.style);
    stimuli = &local;
  }
  if (static_cast<int>(stimuli->size()) < cfg.n_pairs)
    throw InputError("[circle-game] fewer stimulus pairs than n_pairs");

  GameRun run;
  run.config = cfg;
  for (int p = 0; p < cfg.n_pairs; ++p)
    run.answers.push_back((*stimuli)[p].easy_spec.ground_truth());

  const SessionPlan plan = draw_session_plan(cfg.n_pairs, cfg.seed);
  const std::vector<int>& order = plan.order;
  const std::vector<InfoType>& info = plan.info;

  const int reply_tokens =
      cfg.prompt_style == PromptStyle::kDirect ? kDirectMaxTokens : kReasoningMaxTokens;

  // Per-pair outcomes, indexed by pair id.
  std::vector<std::optional<int>> p1_guess(order.size()), p1_advice(order.size()),
      p2_initial(order.size()), p2_final(order.size());
  std::vector<std::string> notes(order.size());
  bool aborted = false;
  std::string abort_reason;

  auto note_failure = [&](int pair, const std::string& what) {
    if (!notes[static_cast<std::size_t>(pair)].empty())
      notes[static_cast<std::size_t>(pair)] += "; ";
    notes[static_cast<std::size_t>(pair)] += what;
  };

  // One dialogue turn: send the accumulated history plus a new user message,
  // append the assistant reply, return the parsed number (if any).
  std::vector<ChatMessage> messages;
  auto turn = [&](const std::string& text, const std::string& image_png,
                  int max_tokens) -> std::optional<int> {
    messages.push_back({"user", text, image_png});
    ChatRequest req;
    req.backend_id = cfg.backend_id;
    req.messages = messages;
    req.max_tokens = max_tokens;
    req.temperature = cfg.temperature;
    req.request_seed = cfg.seed;
    const ChatRecord rec = gateway.complete(req);
    messages.push_back({"assistant", rec.completion, ""});
    return try_parse_game_number(rec.completion);
  };

  const std::string payoff_token = to_string(cfg.payoff);

  // --- Player 1 phase: every question, guess then advice. ---
  messages = {{"system",
               prompts::session_opening(1, cfg.n_pairs, cfg.payoff, cfg.style), ""}};
  try {
    for (const int pair : order) {
      const auto& stim = (*stimuli)[static_cast<std::size_t>(pair)];
      const std::string truth = std::to_string(stim.easy_spec.ground_truth());
      auto guess = turn(prompts::initial_guess(cfg.style) + "\n" +
                            make_probe_tag("game_guess", {{"truth", truth}}),
                        png_encode(stim.easy_image), kDirectMaxTokens);
      p1_guess[static_cast<std::size_t>(pair)] = guess;
      if (!guess) {
        note_failure(pair, "player 1 guess unparseable");
        continue;  // no number to advise from; the trial is already invalid
      }
      auto advice =
          turn(prompts::advice_inquiry(cfg.prompt_style) + "\n" +
                   make_probe_tag("game_advice", {{"own", std::to_string(*guess)},
                                                  {"truth", truth},
                                                  {"payoff", payoff_token}}),
               "", reply_tokens);
      p1_advice[static_cast<std::size_t>(pair)] = advice;
      if (!advice) note_failure(pair, "player 1 advice unparseable");
    }

    // --- Player 2 phase: same questions, same order, hard variants. ---
    messages = {{"system",
                 prompts::session_opening(2, cfg.n_pairs, cfg.payoff, cfg.style), ""}};
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int pair = order[k];
      const auto& stim = (*stimuli)[static_cast<std::size_t>(pair)];
      const std::string truth = std::to_string(stim.hard_spec.ground_truth());
      auto initial = turn(prompts::initial_guess(cfg.style) + "\n" +
                              make_probe_tag("game_guess", {{"truth", truth}}),
                          png_encode(stim.hard_image), kDirectMaxTokens);
      p2_initial[static_cast<std::size_t>(pair)] = initial;
      if (!initial) {
        note_failure(pair, "player 2 initial guess unparseable");
        continue;
      }
      const auto transmitted = info[k] == InfoType::kAdvice
                                   ? p1_advice[static_cast<std::size_t>(pair)]
                                   : p1_guess[static_cast<std::size_t>(pair)];
      if (!transmitted) {
        note_failure(pair, "nothing to transmit from player 1");
        continue;
      }
      const std::string info_text = info[k] == InfoType::kAdvice
                                        ? prompts::advice_info(*transmitted)
                                        : prompts::spied_info(*transmitted);
      auto final_guess =
          turn(info_text + "\n\n" + prompts::update_guess(cfg.prompt_style) + "\n" +
                   make_probe_tag("game_update",
                                  {{"own", std::to_string(*initial)},
                                   {"partner", std::to_string(*transmitted)},
                                   {"payoff", payoff_token}}),
               "", reply_tokens);
      p2_final[static_cast<std::size_t>(pair)] = final_guess;
      if (!final_guess) note_failure(pair, "player 2 update unparseable");
    }
  } catch (const Error& e) {
    aborted = true;
    abort_reason = e.what();
  }

  // Assemble trial records in play order from whatever completed.
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int pair = order[k];
    const auto& stim = (*stimuli)[static_cast<std::size_t>(pair)];
    GameTrial t;
    t.pair_index = pair;
    t.info_type = info[k];
    t.payoff = cfg.payoff;
    t.prompt_style = cfg.prompt_style;
    t.ground_truth = stim.hard_spec.ground_truth();
    t.p1_guess = p1_guess[static_cast<std::size_t>(pair)];
    if (t.info_type == InfoType::kAdvice)
      t.p1_advice = p1_advice[static_cast<std::size_t>(pair)];
    t.p2_initial = p2_initial[static_cast<std::size_t>(pair)];
    t.p2_final = p2_final[static_cast<std::size_t>(pair)];
    t.note = notes[static_cast<std::size_t>(pair)];
    // Validity is driven by the fields the analysis needs, not by notes: a
    // spied trial stays valid even if the (unused) advice reply was garbled.
    t.valid = t.p1_guess.has_value() && t.p2_initial.has_value() &&
              t.p2_final.has_value() && transmitted_value(t).has_value();
    run.trials.push_back(std::move(t));
  }
  run.aborted = aborted;
  run.abort_reason = abort_reason;
  return run;
}

// --- Analysis -------------------------------------------------------------

struct CellStats {
  double mean_shift = 0.0;
  int n_included = 0;  // valid trials with a defined shift
  int n_excluded = 0;  // valid trials excluded because transmitted == initial
};

struct ShiftSummary {
  // Only cells with at least one defined shift appear.
  std::map<std::pair<InfoType, Payoff>, CellStats> cells;
  int n_trials = 0;
  int n_valid = 0;
  double accuracy = 0.0;  // fraction of valid trials with a correct first guess
  std::optional<WelchResult> advice_vs_spied;       // x = advice, y = spied
  std::optional<WelchResult> correct_vs_incorrect;  // x = correct, y = incorrect
};

// Aggregates trials (typically pooled across runs): per-cell mean shifts,
// player 2's first-guess accuracy, and Welch tests for advice-vs-spied and
// correct-vs-incorrect shifts. Cells with no data are absent; a test whose
// groups are too small or perfectly constant is reported as absent, not 0.
inline ShiftSummary shift_summary(const std::vector<GameTrial>& trials) {
  ShiftSummary out;
  out.n_trials = static_cast<int>(trials.size());

  std::map<std::pair<InfoType, Payoff>, std::vector<double>> cell_shifts;
  std::map<std::pair<InfoType, Payoff>, int> cell_excluded;
  std::vector<double> advice, spied, correct, incorrect;
  int n_correct = 0;

  for (const auto& t : trials) {
    if (!t.valid) continue;
    ++out.n_valid;
    const bool was_correct = t.p2_initial && *t.p2_initial == t.ground_truth;
    if (was_correct) ++n_correct;
    const auto shift = trial_shift(t);
    const auto key = std::make_pair(t.info_type, t.payoff);
    if (!shift) {
      ++cell_excluded[key];
      continue;
    }
    cell_shifts[key].push_back(*shift);
    (t.info_type == InfoType::kAdvice ? advice : spied).push_back(*shift);
    (was_correct ? correct : incorrect).push_back(*shift);
  }

  out.accuracy = out.n_valid > 0 ? static_cast<double>(n_correct) / out.n_valid : 0.0;
  for (const auto& [key, shifts] : cell_shifts) {
    CellStats cell;
    cell.n_included = static_cast<int>(shifts.size());
    cell.n_excluded = cell_excluded.count(key) ? cell_excluded.at(key) : 0;
    double sum = 0.0;
    for (double s : shifts) sum += s;
    cell.mean_shift = sum / shifts.size();
    out.cells[key] = cell;
  }

  auto try_welch = [](const std::vector<double>& x,
                      const std::vector<double>& y) -> std::optional<WelchResult> {
    if (x.size() < 2 || y.size() < 2) return std::nullopt;
    try {
      return welch_test(x, y);
    } catch (const DomainError&) {
      return std::nullopt;  // both samples constant: no variance to test
    }
  };
  out.advice_vs_spied = try_welch(advice, spied);
  out.correct_vs_incorrect = try_welch(correct, incorrect);
  return out;
}

// --- Serialization ----------------------------------------------------------

inline nlohmann::json trial_to_json(const GameTrial& t) {
  nlohmann::json j;
  j["pair_index"] = t.pair_index;
  j["info_type"] = to_string(t.info_type);
  j["payoff"] = to_string(t.payoff);
  j["prompt_style"] = to_string(t.prompt_style);
  j["ground_truth"] = t.ground_truth;
  auto put = [&](const char* key, const std::optional<int>& v) {
    if (v)
      j[key] = *v;
    else
      j[key] = nullptr;
  };
  put("p1_guess", t.p1_guess);
  put("p1_advice", t.p1_advice);
  put("p2_initial", t.p2_initial);
  put("p2_final", t.p2_final);
  j["valid"] = t.valid;
  j["note"] = t.note;
  return j;
}

inline GameTrial trial_from_json(const nlohmann::json& j) {
  GameTrial t;
  t.pair_index = j.at("pair_index").get<int>();
  t.info_type = info_type_from_string(j.at("info_type").get<std::string>());
  t.payoff = payoff_from_string(j.at("payoff").get<std::string>());
  t.prompt_style = prompt_style_from_string(j.at("prompt_style").get<std::string>());
  t.ground_truth = j.at("ground_truth").get<int>();
  auto take = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<int>();
  };
  t.p1_guess = take("p1_guess");
  t.p1_advice = take("p1_advice");
  t.p2_initial = take("p2_initial");
  t.p2_final = take("p2_final");
  t.valid = j.at("valid").get<bool>();
  t.note = j.value("note", "");
  return t;
}

inline std::string trials_to_jsonl(const std::vector<GameTrial>& trials) {
  std::string out;
  for (const auto& t : trials) {
    out += trial_to_json(t).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<GameTrial> trials_from_jsonl(const std::string& text) {
  std::vector<GameTrial> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(trial_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("[circle-game] bad trial line: ") + e.what());
    }
  }
  return out;
}

inline nlohmann::json welch_to_json(const WelchResult& w) {
  return {{"t", w.t}, {"df", w.df}, {"p", w.p}, {"mean_x", w.mean_x},
          {"mean_y", w.mean_y}};
}

inline nlohmann::json shift_summary_to_json(const ShiftSummary& s) {
  nlohmann::json j;
  j["n_trials"] = s.n_trials;
  j["n_valid"] = s.n_valid;
  j["accuracy"] = s.accuracy;
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [key, cell] : s.cells) {
    const std::string name = to_string(key.first) + "." + to_string(key.second);
    cells[name] = {{"mean_shift", cell.mean_shift},
                   {"n_included", cell.n_included},
                   {"n_excluded", cell.n_excluded}};
  }
  j["cells"] = cells;
  j["advice_vs_spied"] =
      s.advice_vs_spied ? welch_to_json(*s.advice_vs_spied) : nlohmann::json();
  j["correct_vs_incorrect"] =
      s.correct_vs_incorrect ? welch_to_json(*s.correct_vs_incorrect) : nlohmann::json();
  return j;
}

// Tables plus the grouped bar chart (mean shift by payoff, one bar per info
// type) for a pooled set of trials.
inline Report make_game_report(const std::vector<GameTrial>& trials) {
  const ShiftSummary s = shift_summary(trials);
  Report rep;
  rep.summary = shift_summary_to_json(s);

  Table cells;
  cells.name = "shift_cells";
  cells.header = {"info_type", "payoff", "mean_shift", "n_included", "n_excluded"};
  for (const auto& [key, cell] : s.cells)
    cells.rows.push_back({to_string(key.first), to_string(key.second),
                          fmt_double(cell.mean_shift), std::to_string(cell.n_included),
                          std::to_string(cell.n_excluded)});
  rep.tables.push_back(cells);

  Table tests;
  tests.name = "shift_tests";
  tests.header = {"comparison", "t", "df", "p"};
  auto add_test = [&](const std::string& label, const std::optional<WelchResult>& w) {
    if (!w) return;
    tests.rows.push_back(
        {label, fmt_double(w->t), fmt_double(w->df), fmt_double(w->p)});
  };
  add_test("advice_vs_spied", s.advice_vs_spied);
  add_test("correct_vs_incorrect", s.correct_vs_incorrect);
  rep.tables.push_back(tests);

  BarChart chart;
  chart.name = "mean_shift";
  chart.title = "Mean proportion shift";
  chart.x_label = "payoff";
  chart.y_label = "mean shift";
  chart.groups = {to_string(Payoff::kCooperative), to_string(Payoff::kCompetitive)};
  for (InfoType info : {InfoType::kAdvice, InfoType::kSpied}) {
    BarSeries series;
    series.label = to_string(info);
    for (Payoff payoff : {Payoff::kCooperative, Payoff::kCompetitive}) {
      const auto it = s.cells.find({info, payoff});
      series.values.push_back(it == s.cells.end() ? 0.0 : it->second.mean_shift);
    }
    chart.series.push_back(series);
  }
  rep.bar_charts.push_back(chart);
  return rep;
}

}  // namespace vigil
