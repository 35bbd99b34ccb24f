// Tests for the vignette runner: bank fidelity, dialogue protocol, score
// elicitation, the correlation suite, alignment analyses, and reporting.
#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vigil/gateway/agents.hpp"
#include "vigil/vignette/vignette.hpp"

using namespace vigil;

namespace {

std::filesystem::path fresh_cache(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("vigil_vignette_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string golden(const std::string& name) {
  std::ifstream in(std::filesystem::path(VIGIL_TEST_GOLDEN_DIR) / name,
                   std::ios::binary);
  if (!in) throw std::runtime_error("missing golden file " + name);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

// The closed-loop agent tables. Lambdas are two-decimal so the elicited
// trust integer maps back to the exact lambda, and beta sits on the default
// fit grid; both keep integer rounding from eroding the loop correlation.
const std::vector<double> kAgentLambdas = {0.15, 0.40, 0.55, 0.70};
const std::vector<int> kAgentBenefits = {0, 33, 67, 100};
constexpr double kAgentBeta = 10.0;

SyntheticAgentConfig agent_tables(const VignetteBank& bank, AgentKind kind) {
  SyntheticAgentConfig cfg;
  cfg.kind = kind;
  cfg.beta_s = kAgentBeta;
  for (std::size_t i = 0; i < bank.n_characters(); ++i)
    cfg.lambda_table[bank.character_keys[i]] = kAgentLambdas[i];
  for (std::size_t i = 0; i < bank.n_incentives(); ++i)
    cfg.incentive_map[bank.incentive_keys[i]] = kAgentBenefits[i];
  return cfg;
}

std::unique_ptr<Gateway> make_gateway(const std::string& tag,
                                      const std::shared_ptr<Backend>& backend) {
  auto gateway = std::make_unique<Gateway>(fresh_cache(tag));
  gateway->register_backend(backend);
  return gateway;
}

VignetteRunConfig run_config(const std::string& backend_id, PromptStyle style,
                             Perspective perspective, int n_runs,
                             std::uint64_t seed) {
  VignetteRunConfig cfg;
  cfg.backend_id = backend_id;
  cfg.scenario = VignetteScenario::kCreditCard;
  cfg.style = style;
  cfg.perspective = perspective;
  cfg.n_runs = n_runs;
  cfg.seed = seed;
  return cfg;
}

// What the agent's own decision model predicts for one elicited triple.
double model_prediction(const ElicitedTriple& t) {
  Scenario tpl = default_recommendation_scenario();
  tpl.beta_s = kAgentBeta;
  return predict_influence(triple_to_scenario(t, tpl));
}

// Wraps the rational agent but returns prose (never a score) for probes
// matching the given kind and channel, and optionally incentive.
class GarblingBackend : public Backend {
 public:
  GarblingBackend(std::string id, SyntheticAgentConfig cfg, std::string kind,
                  std::string channel, std::string incentive)
      : id_(std::move(id)),
        inner_("inner", std::move(cfg)),
        kind_(std::move(kind)),
        channel_(std::move(channel)),
        incentive_(std::move(incentive)) {}

  std::string id() const override { return id_; }

  std::string complete(const ChatRequest& request, nlohmann::json& meta) override {
    const auto tag = find_probe_tag(request);
    if (tag && tag->kind == kind_) {
      const auto ch = tag->fields.find("channel");
      const auto inc = tag->fields.find("incentive");
      const bool channel_hit = ch != tag->fields.end() && ch->second == channel_;
      const bool incentive_hit =
          incentive_.empty() ||
          (inc != tag->fields.end() && inc->second == incentive_);
      if (channel_hit && incentive_hit) return "That is hard to say.";
    }
    return inner_.complete(request, meta);
  }

 private:
  std::string id_;
  SyntheticAgentBackend inner_;
  std::string kind_;
  std::string channel_;
  std::string incentive_;
};

std::vector<const ChatMessage*> user_messages(const VignetteDialogue& d) {
  std::vector<const ChatMessage*> out;
  for (const auto& m : d.messages)
    if (m.role == "user") out.push_back(&m);
  return out;
}

bool dialogue_contains(const VignetteDialogue& d, const std::string& needle) {
  for (const auto* m : user_messages(d))
    if (m->content.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

// --- Banks and templates ------------------------------------------------------

TEST(VignetteBanks, TemplateTextMatchesGoldens) {
  const std::vector<std::pair<VignetteScenario, std::string>> scenarios = {
      {VignetteScenario::kCreditCard, "credit_card"},
      {VignetteScenario::kMedicine, "medicine"},
      {VignetteScenario::kRealEstate, "real_estate"}};
  const std::vector<std::pair<Perspective, std::string>> perspectives = {
      {Perspective::kFirstPerson, "first"}, {Perspective::kUser, "user"}};

  for (const auto& [scenario, sname] : scenarios) {
    const VignetteBank& bank = bank_for(scenario);
    for (const auto& [persp, pname] : perspectives) {
      const std::string stem = "exp2_" + sname + "_" + pname + "_";
      EXPECT_EQ(vignette_contextual(bank, persp), golden(stem + "contextual.txt"))
          << stem;
      EXPECT_EQ(vignette_reward_context(bank, persp),
                golden(stem + "reward_context.txt"))
          << stem;
      EXPECT_EQ(vignette_offer_prompt(bank, persp, 0, 2), golden(stem + "offer.txt"))
          << stem;
      EXPECT_EQ(vignette_reward_prompt(bank, persp, 0, 2), golden(stem + "reward.txt"))
          << stem;
      EXPECT_EQ(vignette_trust_prompt(bank, persp, 0), golden(stem + "trust.txt"))
          << stem;
    }
  }
}

TEST(VignetteBanks, GridShapeAndSpeakerCells) {
  const VignetteBank& credit = credit_card_bank();
  EXPECT_EQ(credit.character_keys,
            (std::vector<std::string>{"romantic_partner", "close_friend", "neighbor",
                                      "stranger"}));
  EXPECT_EQ(credit.incentive_keys,
            (std::vector<std::string>{"0", "10", "100", "1000"}));
  EXPECT_EQ(credit.incentive_unit, "dollars");

  const VignetteBank& medicine = medicine_bank();
  EXPECT_EQ(medicine.incentive_keys,
            (std::vector<std::string>{"0", "100", "1000", "10000"}));
  const VignetteBank& estate = real_estate_bank();
  EXPECT_EQ(estate.incentive_keys, (std::vector<std::string>{"1", "5", "10", "20"}));
  EXPECT_EQ(estate.incentive_unit, "percent");

  const auto grid = speaker_grid(credit);
  ASSERT_EQ(grid.size(), 16u);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i) {
      const auto& sp = grid[static_cast<std::size_t>(c * 4 + i)];
      EXPECT_EQ(sp.character_index, c);
      EXPECT_EQ(sp.incentive_index, i);
      EXPECT_EQ(sp.cell_index, c * 4 + i);
    }

  EXPECT_EQ(&bank_for(VignetteScenario::kMedicine), &medicine);
  EXPECT_EQ(vignette_scenario_from_string("real_estate"), VignetteScenario::kRealEstate);
  EXPECT_EQ(to_string(VignetteScenario::kCreditCard), "credit_card");
  EXPECT_THROW(vignette_scenario_from_string("stocks"), ConfigError);
  EXPECT_THROW(vignette_offer_prompt(credit, Perspective::kFirstPerson, 4, 0),
               DomainError);
  EXPECT_THROW(vignette_trust_prompt(credit, Perspective::kUser, 7), DomainError);
}

TEST(VignettePrompts, ScoreAddOnsMatchGoldens) {
  EXPECT_EQ(score_add_on(PromptStyle::kDirect), golden("addon_direct.txt"));
  EXPECT_EQ(score_add_on(PromptStyle::kCot), golden("addon_cot.txt"));
  EXPECT_EQ(max_tokens_for(PromptStyle::kDirect), 10);
  EXPECT_EQ(max_tokens_for(PromptStyle::kCot), 750);
}

// --- Runner behavior ------------------------------------------------------------

TEST(VignetteRun, RationalAgentReproducesItsOwnTables) {
  auto backend = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));
  auto gateway = make_gateway("self_consistency", backend);
  const auto result = run_vignette(
      *gateway, run_config("rational", PromptStyle::kDirect, Perspective::kFirstPerson,
                          1, 11));

  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_EQ(result.runs[0].cells.size(), 16u);
  ASSERT_EQ(result.triples.size(), 16u);

  const VignetteBank& bank = credit_card_bank();
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : result.triples) {
    const auto& character = t.condition.at("character");
    const auto& incentive = t.condition.at("incentive");
    seen.insert({character, incentive});

    const auto c_it = std::find(bank.character_keys.begin(), bank.character_keys.end(),
                                character);
    const auto i_it = std::find(bank.incentive_keys.begin(), bank.incentive_keys.end(),
                                incentive);
    ASSERT_NE(c_it, bank.character_keys.end());
    ASSERT_NE(i_it, bank.incentive_keys.end());
    const std::size_t c = static_cast<std::size_t>(c_it - bank.character_keys.begin());
    const std::size_t i = static_cast<std::size_t>(i_it - bank.incentive_keys.begin());

    EXPECT_EQ(t.trust, static_cast<int>(std::lround(100.0 * kAgentLambdas[c])));
    EXPECT_EQ(t.incentive, kAgentBenefits[i]);
    // The runner's elicited integers round-trip through the agent's own model.
    EXPECT_NEAR(static_cast<double>(t.influence), model_prediction(t), 0.5 + 1e-9);

    EXPECT_EQ(t.subject_id, "rational");
    EXPECT_EQ(t.condition.at("scenario"), "credit_card");
    EXPECT_EQ(t.condition.at("style"), "direct");
    EXPECT_EQ(t.condition.at("perspective"), "first_person");
    EXPECT_EQ(t.condition.at("run"), "0");
  }
  EXPECT_EQ(seen.size(), 16u);  // every (character, incentive) cell exactly once
}

TEST(VignetteRun, DialogueShapesAndContextIsolation) {
  auto backend = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));
  auto gateway = make_gateway("isolation", backend);
  const auto result = run_vignette(
      *gateway, run_config("rational", PromptStyle::kDirect, Perspective::kFirstPerson,
                          1, 5));

  const auto& log = result.runs.at(0);
  EXPECT_EQ(log.influence_dialogue.messages.size(), 32u);
  EXPECT_EQ(log.incentive_dialogue.messages.size(), 32u);
  EXPECT_EQ(log.trust_dialogue.messages.size(), 8u);
  EXPECT_EQ(log.influence_dialogue.score_type, "influence");
  EXPECT_EQ(log.incentive_dialogue.score_type, "incentive");
  EXPECT_EQ(log.trust_dialogue.score_type, "trust");

  const VignetteBank& bank = credit_card_bank();
  const std::string contextual = vignette_contextual(bank, Perspective::kFirstPerson);
  const std::string reward_ctx = vignette_reward_context(bank, Perspective::kFirstPerson);
  const std::string add_on = score_add_on(PromptStyle::kDirect);

  for (const auto* dialogue :
       {&log.influence_dialogue, &log.incentive_dialogue, &log.trust_dialogue}) {
    const auto users = user_messages(*dialogue);
    ASSERT_FALSE(users.empty());
    // Scene and incentive-mechanism context open the dialogue, sent once.
    EXPECT_EQ(users[0]->content.rfind(contextual, 0), 0u);
    EXPECT_NE(users[0]->content.find(reward_ctx), std::string::npos);
    for (std::size_t k = 1; k < users.size(); ++k) {
      EXPECT_EQ(users[k]->content.rfind(kDefaultCounterfactualFrame, 0), 0u);
      EXPECT_EQ(users[k]->content.find(contextual), std::string::npos);
    }
    // Every turn carries the style add-on and a machine-readable probe tag.
    for (const auto* m : users) {
      EXPECT_NE(m->content.find(add_on), std::string::npos);
      EXPECT_NE(m->content.find("<<probe kind=" + dialogue->score_type),
                std::string::npos);
    }
    // Roles strictly alternate user/assistant.
    for (std::size_t k = 0; k < dialogue->messages.size(); ++k)
      EXPECT_EQ(dialogue->messages[k].role, k % 2 == 0 ? "user" : "assistant");
  }

  // Each score type sees only its own question, in its own context window.
  const std::string offer_q = "what do you think about the quality of the offer?";
  const std::string reward_q = "rate how beneficial you think this bonus";
  const std::string trust_q = "cares about themselves vs. your well-being";
  EXPECT_TRUE(dialogue_contains(log.influence_dialogue, offer_q));
  EXPECT_FALSE(dialogue_contains(log.influence_dialogue, reward_q));
  EXPECT_FALSE(dialogue_contains(log.influence_dialogue, trust_q));
  EXPECT_TRUE(dialogue_contains(log.incentive_dialogue, reward_q));
  EXPECT_FALSE(dialogue_contains(log.incentive_dialogue, offer_q));
  EXPECT_FALSE(dialogue_contains(log.incentive_dialogue, trust_q));
  EXPECT_TRUE(dialogue_contains(log.trust_dialogue, trust_q));
  EXPECT_FALSE(dialogue_contains(log.trust_dialogue, offer_q));
  EXPECT_FALSE(dialogue_contains(log.trust_dialogue, reward_q));
}

TEST(VignetteRun, CotStyleAsksForStructuredReasoning) {
  auto backend = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));
  auto gateway = make_gateway("cot_style", backend);
  const auto result = run_vignette(
      *gateway,
      run_config("rational", PromptStyle::kCot, Perspective::kUser, 1, 5));

  const auto users = user_messages(result.runs.at(0).influence_dialogue);
  ASSERT_FALSE(users.empty());
  const std::string cot = score_add_on(PromptStyle::kCot);
  for (const auto* m : users) EXPECT_NE(m->content.find(cot), std::string::npos);
  // Same agent, same tables: style must not change what the scores mean.
  ASSERT_EQ(result.triples.size(), 16u);
  for (const auto& t : result.triples) EXPECT_EQ(t.condition.at("style"), "cot");
}

TEST(VignetteRun, DeterministicAcrossFreshGatewaysAndCacheReplay) {
  const auto cfg = run_config("rational", PromptStyle::kDirect,
                              Perspective::kFirstPerson, 2, 7);
  auto backend_a = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));
  auto backend_b = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));

  auto gateway_a = make_gateway("det_a", backend_a);
  auto gateway_b = make_gateway("det_b", backend_b);

  const auto first = run_vignette(*gateway_a, cfg);
  const auto second = run_vignette(*gateway_b, cfg);
  EXPECT_EQ(vignette_result_to_json(first).dump(2),
            vignette_result_to_json(second).dump(2));
  EXPECT_EQ(triples_to_csv(first.triples), triples_to_csv(second.triples));

  // Replaying against the warm cache reproduces the run byte for byte.
  const auto replay = run_vignette(*gateway_a, cfg);
  EXPECT_EQ(vignette_result_to_json(first).dump(2),
            vignette_result_to_json(replay).dump(2));
}

TEST(VignetteRun, CellOrderIsSeededPermutationWithFairFirstSlot) {
  std::vector<int> first_counts(16, 0);
  std::set<std::vector<int>> distinct;
  for (int run = 0; run < 100; ++run) {
    const auto order =
        draw_cell_order(16, fnv1a64("influence-order", vignette_run_seed(1, run)));
    ASSERT_EQ(order.size(), 16u);
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 16; ++i) ASSERT_EQ(sorted[static_cast<std::size_t>(i)], i);
    ++first_counts[static_cast<std::size_t>(order[0])];
    distinct.insert(order);
  }
  // Every cell leads sometimes, none dominates: a fair shuffle keeps each
  // first-slot count near 100/16 across 100 runs.
  for (int c : first_counts) {
    EXPECT_GE(c, 2);
    EXPECT_LE(c, 12);
  }
  EXPECT_GT(distinct.size(), 90u);

  // The three dialogues shuffle independently of one another.
  const std::uint64_t rs = vignette_run_seed(1, 0);
  EXPECT_NE(draw_cell_order(16, fnv1a64("influence-order", rs)),
            draw_cell_order(16, fnv1a64("incentive-order", rs)));
}

TEST(VignetteRun, UnparseableScoreReAskedOnceThenCellInvalid) {
  auto backend = std::make_shared<GarblingBackend>(
      "mumbler", agent_tables(credit_card_bank(), AgentKind::kRational), "influence",
      "stranger", "1000");
  auto gateway = make_gateway("garbled_influence", backend);
  const auto result = run_vignette(
      *gateway,
      run_config("mumbler", PromptStyle::kDirect, Perspective::kFirstPerson, 1, 3));

  EXPECT_EQ(result.triples.size(), 15u);
  const auto& log = result.runs.at(0);
  // One failed turn adds exactly one re-ask exchange.
  EXPECT_EQ(log.influence_dialogue.messages.size(), 34u);
  EXPECT_EQ(log.incentive_dialogue.messages.size(), 32u);
  EXPECT_EQ(log.trust_dialogue.messages.size(), 8u);

  // The re-ask repeats the identical user turn.
  const auto& msgs = log.influence_dialogue.messages;
  int repeats = 0;
  for (std::size_t k = 0; k + 2 < msgs.size(); ++k)
    if (msgs[k].role == "user" && msgs[k + 2].role == "user" &&
        msgs[k].content == msgs[k + 2].content)
      ++repeats;
  EXPECT_EQ(repeats, 1);

  int invalid = 0;
  for (const auto& cell : log.cells) {
    if (cell.valid) {
      EXPECT_TRUE(cell.note.empty());
      continue;
    }
    ++invalid;
    EXPECT_FALSE(cell.influence.has_value());
    EXPECT_TRUE(cell.trust.has_value());
    EXPECT_TRUE(cell.incentive.has_value());
    EXPECT_NE(cell.note.find("influence unparseable after one re-ask"),
              std::string::npos);
    EXPECT_EQ(cell.speaker.character_index, 3);  // stranger
    EXPECT_EQ(cell.speaker.incentive_index, 3);  // $1000
  }
  EXPECT_EQ(invalid, 1);
}

TEST(VignetteRun, UnparseableTrustDropsTheCharactersFourCells) {
  auto backend = std::make_shared<GarblingBackend>(
      "mumbler", agent_tables(credit_card_bank(), AgentKind::kRational), "trust",
      "neighbor", "");
  auto gateway = make_gateway("garbled_trust", backend);
  const auto result = run_vignette(
      *gateway,
      run_config("mumbler", PromptStyle::kDirect, Perspective::kFirstPerson, 1, 3));

  EXPECT_EQ(result.triples.size(), 12u);
  const auto& log = result.runs.at(0);
  EXPECT_EQ(log.trust_dialogue.messages.size(), 10u);  // 4 turns + 1 re-ask
  int invalid = 0;
  for (const auto& cell : log.cells)
    if (!cell.valid) {
      ++invalid;
      EXPECT_EQ(cell.speaker.character_index, 2);  // neighbor
      EXPECT_NE(cell.note.find("trust unparseable after one re-ask"),
                std::string::npos);
    }
  EXPECT_EQ(invalid, 4);
}

TEST(VignetteRun, ConfigValidationRejectsBadSettings) {
  VignetteRunConfig cfg =
      run_config("x", PromptStyle::kDirect, Perspective::kFirstPerson, 1, 0);
  cfg.backend_id.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);

  cfg = run_config("x", PromptStyle::kDirect, Perspective::kFirstPerson, 0, 0);
  EXPECT_THROW(cfg.validate(), ConfigError);

  cfg = run_config("x", PromptStyle::kDirect, Perspective::kFirstPerson, 1, 0);
  cfg.temperature = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);

  cfg = run_config("x", PromptStyle::kDirect, Perspective::kFirstPerson, 1, 0);
  cfg.counterfactual_frame.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);

  EXPECT_THROW(prompt_style_from_string("verbose"), ConfigError);
  EXPECT_THROW(perspective_from_string("third_person"), ConfigError);
}

// --- Correlation suite and alignment ------------------------------------------

namespace {

std::vector<ElicitedTriple> closed_loop_triples(AgentKind kind, PromptStyle style,
                                                Perspective perspective,
                                                const std::string& tag,
                                                std::uint64_t seed, int n_runs = 2) {
  auto backend = std::make_shared<SyntheticAgentBackend>(
      "subject", agent_tables(credit_card_bank(), kind));
  auto gateway = make_gateway(tag, backend);
  return run_vignette(*gateway,
                      run_config("subject", style, perspective, n_runs, seed))
      .triples;
}

VignetteAnalysisConfig analysis_at_agent_beta() {
  VignetteAnalysisConfig cfg;
  cfg.model_template.beta_s = kAgentBeta;
  return cfg;
}

}  // namespace

TEST(VignetteAnalyses, RationalClosedLoopRecoversTheGenerator) {
  auto triples = closed_loop_triples(AgentKind::kRational, PromptStyle::kDirect,
                                     Perspective::kFirstPerson, "loop_direct", 101);
  const auto more = closed_loop_triples(AgentKind::kRational, PromptStyle::kCot,
                                        Perspective::kUser, "loop_cot", 202);
  triples.insert(triples.end(), more.begin(), more.end());
  ASSERT_EQ(triples.size(), 64u);

  const CorrelationSuite suite = correlation_suite(triples);
  ASSERT_EQ(suite.per_condition.size(), 2u);
  for (const auto& cc : suite.per_condition) {
    EXPECT_FALSE(cc.fit_degenerate);
    EXPECT_FALSE(cc.bayesian_llm.degenerate);
    EXPECT_GE(cc.bayesian_llm.r, 0.999) << condition_to_string(cc.condition);
    EXPECT_NEAR(cc.beta_s, kAgentBeta, 1e-9);
    EXPECT_EQ(cc.n_triples, 32u);
    EXPECT_FALSE(cc.bayesian_human.has_value());
    EXPECT_FALSE(cc.llm_human.has_value());
  }
  EXPECT_EQ(suite.bayesian_llm_avg.n_conditions, 2u);
  EXPECT_GE(suite.bayesian_llm_avg.r, 0.999);
  EXPECT_FALSE(suite.bayesian_human_avg.has_value());
  EXPECT_FALSE(suite.llm_human_avg.has_value());

  const AlignmentAnalyses alignment = alignment_analyses(triples);
  EXPECT_FALSE(alignment.fit_degenerate);
  EXPECT_NEAR(alignment.beta_s, kAgentBeta, 1e-9);
  EXPECT_FALSE(alignment.cross_character.degenerate);
  EXPECT_GE(alignment.cross_character.r, 0.999);
  EXPECT_EQ(alignment.intra_n_characters, 4u);
  EXPECT_FALSE(alignment.intra_degenerate);
  EXPECT_GE(alignment.intra_character, 0.999);
  for (const auto& ca : alignment.per_character) {
    EXPECT_FALSE(ca.excluded);
    EXPECT_GE(ca.r.r, 0.999) << ca.character;
  }
}

TEST(VignetteAnalyses, AntiRationalSubjectMirrorsTheCorrelation) {
  const auto triples =
      closed_loop_triples(AgentKind::kAntiRational, PromptStyle::kDirect,
                          Perspective::kFirstPerson, "loop_anti", 303, 1);
  ASSERT_EQ(triples.size(), 16u);

  const CorrelationSuite suite = correlation_suite(triples);
  ASSERT_EQ(suite.per_condition.size(), 1u);
  const auto& cc = suite.per_condition[0];
  EXPECT_FALSE(cc.fit_degenerate);
  EXPECT_FALSE(cc.bayesian_llm.degenerate);
  EXPECT_LE(cc.bayesian_llm.r, -0.99);

  const AlignmentAnalyses alignment = alignment_analyses(triples);
  EXPECT_FALSE(alignment.fit_degenerate);
  EXPECT_LE(alignment.cross_character.r, -0.99);
  EXPECT_EQ(alignment.intra_n_characters, 4u);
  EXPECT_LE(alignment.intra_character, -0.99);
}

TEST(VignetteAnalyses, ConstantSubjectIsFlaggedDegenerateNotZero) {
  auto backend = std::make_shared<ConstantBackend>("flat", "50");
  auto gateway = make_gateway("loop_const", backend);
  const auto triples =
      run_vignette(*gateway, run_config("flat", PromptStyle::kDirect,
                                       Perspective::kFirstPerson, 1, 404))
          .triples;
  ASSERT_EQ(triples.size(), 16u);

  const CorrelationSuite suite = correlation_suite(triples);
  ASSERT_EQ(suite.per_condition.size(), 1u);
  const auto& cc = suite.per_condition[0];
  EXPECT_TRUE(cc.fit_degenerate);
  EXPECT_TRUE(cc.bayesian_llm.degenerate);
  EXPECT_EQ(cc.bayesian_llm.r, 0.0);
  EXPECT_EQ(suite.bayesian_llm_avg.n_conditions, 0u);

  const AlignmentAnalyses alignment = alignment_analyses(triples);
  EXPECT_TRUE(alignment.fit_degenerate);
  EXPECT_TRUE(alignment.intra_degenerate);
  EXPECT_TRUE(alignment.cross_character.degenerate);
  for (const auto& ca : alignment.per_character) EXPECT_TRUE(ca.excluded);
}

TEST(VignetteAnalyses, IncentiveBlindSubjectSplitsIntraFromCross) {
  SyntheticAgentConfig cfg = agent_tables(credit_card_bank(), AgentKind::kRational);
  for (auto& [token, benefit] : cfg.incentive_map) benefit = 50;
  auto backend = std::make_shared<SyntheticAgentBackend>("tracker", cfg);
  auto gateway = make_gateway("loop_tracker", backend);
  const auto triples =
      run_vignette(*gateway, run_config("tracker", PromptStyle::kDirect,
                                       Perspective::kFirstPerson, 1, 505))
          .triples;
  ASSERT_EQ(triples.size(), 16u);

  // Within a character nothing varies, so per-character correlations are
  // undefined; across characters the trust gradient still lines up.
  const AlignmentAnalyses alignment = alignment_analyses(triples);
  EXPECT_FALSE(alignment.fit_degenerate);
  EXPECT_TRUE(alignment.intra_degenerate);
  EXPECT_EQ(alignment.intra_n_characters, 0u);
  for (const auto& ca : alignment.per_character) EXPECT_TRUE(ca.excluded);
  EXPECT_FALSE(alignment.cross_character.degenerate);
  EXPECT_GT(alignment.cross_character.r, 0.5);
}

TEST(VignetteAnalyses, AlignmentRequiresTwoIncentiveLevelsPerCharacter) {
  auto triples = closed_loop_triples(AgentKind::kRational, PromptStyle::kDirect,
                                     Perspective::kFirstPerson, "loop_levels", 606, 1);
  // Keep only one incentive level for one character.
  std::vector<ElicitedTriple> pruned;
  for (const auto& t : triples)
    if (t.condition.at("character") != "stranger" || t.condition.at("incentive") == "10")
      pruned.push_back(t);
  ASSERT_EQ(pruned.size(), 13u);
  EXPECT_THROW(alignment_analyses(pruned), InputError);
  EXPECT_THROW(alignment_analyses({}), InputError);
  EXPECT_THROW(correlation_suite({}), InputError);
}

TEST(VignetteAnalyses, HumanComparisonJoinsOnCellMeans) {
  const auto triples =
      closed_loop_triples(AgentKind::kRational, PromptStyle::kDirect,
                          Perspective::kFirstPerson, "loop_human", 707, 1);
  ASSERT_EQ(triples.size(), 16u);

  // Human table whose influence equals the generator's own predictions: both
  // human-facing correlations should then sit at the closed-loop ceiling.
  HumanTable human;
  for (const auto& t : triples) {
    HumanCellRow row;
    row.scenario = t.condition.at("scenario");
    row.character = t.condition.at("character");
    row.incentive = t.condition.at("incentive");
    row.influence = model_prediction(t);
    row.trust = static_cast<double>(t.trust);
    row.incentive_score = static_cast<double>(t.incentive);
    human.rows.push_back(row);
  }

  const CorrelationSuite suite = correlation_suite(triples, human,
                                                   analysis_at_agent_beta());
  ASSERT_EQ(suite.per_condition.size(), 1u);
  const auto& cc = suite.per_condition[0];
  ASSERT_TRUE(cc.bayesian_human.has_value());
  ASSERT_TRUE(cc.llm_human.has_value());
  EXPECT_FALSE(cc.bayesian_human->degenerate);
  EXPECT_FALSE(cc.llm_human->degenerate);
  EXPECT_EQ(cc.bayesian_human->n, 16u);
  EXPECT_GE(cc.bayesian_human->r, 0.999);
  EXPECT_GE(cc.llm_human->r, 0.999);
  ASSERT_TRUE(suite.bayesian_human_avg.has_value());
  ASSERT_TRUE(suite.llm_human_avg.has_value());
  EXPECT_GE(suite.bayesian_human_avg->r, 0.999);
  EXPECT_GE(suite.llm_human_avg->r, 0.999);

  // Too few matched cells: flagged, never invented.
  HumanTable sparse;
  sparse.rows = {human.rows[0], human.rows[1]};
  const CorrelationSuite thin = correlation_suite(triples, sparse,
                                                  analysis_at_agent_beta());
  ASSERT_TRUE(thin.per_condition[0].llm_human.has_value());
  EXPECT_TRUE(thin.per_condition[0].llm_human->degenerate);
  EXPECT_EQ(thin.per_condition[0].llm_human->n, 2u);
  EXPECT_EQ(thin.llm_human_avg->n_conditions, 0u);
}

// --- Serialization and reporting ------------------------------------------------

TEST(VignetteSerialization, HumanTableCsvRoundTrip) {
  HumanTable table;
  table.rows = {{"credit_card", "stranger", "1000", 72.25, 10.0, 95.5},
                {"medicine", "doctor_mother", "0", 41.0, 88.0, 3.125}};
  const std::string csv = human_table_to_csv(table);
  const HumanTable parsed = human_table_from_csv(csv);
  ASSERT_EQ(parsed.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(parsed.rows[i].scenario, table.rows[i].scenario);
    EXPECT_EQ(parsed.rows[i].character, table.rows[i].character);
    EXPECT_EQ(parsed.rows[i].incentive, table.rows[i].incentive);
    EXPECT_NEAR(parsed.rows[i].influence, table.rows[i].influence, 1e-6);
    EXPECT_NEAR(parsed.rows[i].trust, table.rows[i].trust, 1e-6);
    EXPECT_NEAR(parsed.rows[i].incentive_score, table.rows[i].incentive_score, 1e-6);
  }
  EXPECT_EQ(human_table_to_csv(parsed), csv);

  HumanTable dup = table;
  dup.rows.push_back(table.rows[0]);
  EXPECT_THROW(dup.validate(), InputError);
  HumanTable bad = table;
  bad.rows[0].influence = 101.0;
  EXPECT_THROW(bad.validate(), DomainError);
  EXPECT_THROW(human_table_from_csv("a,b\n1,2\n"), InputError);
}

TEST(VignetteSerialization, ResultJsonAndTriplesCsvRoundTrip) {
  auto backend = std::make_shared<SyntheticAgentBackend>(
      "rational", agent_tables(credit_card_bank(), AgentKind::kRational));
  auto gateway = make_gateway("serialize", backend);
  const auto result = run_vignette(
      *gateway, run_config("rational", PromptStyle::kDirect, Perspective::kFirstPerson,
                          1, 909));

  const nlohmann::json j = vignette_result_to_json(result);
  EXPECT_EQ(j.at("config").at("scenario"), "credit_card");
  EXPECT_EQ(j.at("config").at("backend_id"), "rational");
  ASSERT_EQ(j.at("runs").size(), 1u);
  const auto& run = j.at("runs").at(0);
  EXPECT_EQ(run.at("dialogues").at("influence").at("messages").size(), 32u);
  EXPECT_EQ(run.at("cells").size(), 16u);
  for (const auto& cell : run.at("cells")) EXPECT_TRUE(cell.at("valid").get<bool>());

  const auto parsed = triples_from_csv(triples_to_csv(result.triples));
  ASSERT_EQ(parsed.size(), result.triples.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].influence, result.triples[i].influence);
    EXPECT_EQ(parsed[i].trust, result.triples[i].trust);
    EXPECT_EQ(parsed[i].incentive, result.triples[i].incentive);
    EXPECT_EQ(parsed[i].subject_id, result.triples[i].subject_id);
    EXPECT_EQ(parsed[i].condition, result.triples[i].condition);
  }
}

TEST(VignetteReport, TablesChartsAndSummaryFiles) {
  const auto triples =
      closed_loop_triples(AgentKind::kRational, PromptStyle::kDirect,
                          Perspective::kFirstPerson, "report", 808, 1);
  const CorrelationSuite suite = correlation_suite(triples);
  const AlignmentAnalyses alignment = alignment_analyses(triples);
  const Report report = make_vignette_report(suite, alignment);

  ASSERT_EQ(report.tables.size(), 2u);
  const Table& corr = report.tables[0];
  EXPECT_EQ(corr.name, "correlations");
  ASSERT_EQ(corr.rows.size(), suite.per_condition.size() + 1);
  EXPECT_EQ(corr.rows.back().front(), "average");
  EXPECT_EQ(report.tables[1].name, "alignment");
  ASSERT_EQ(report.bar_charts.size(), 1u);
  EXPECT_EQ(report.bar_charts[0].groups.size(), suite.per_condition.size());
  EXPECT_TRUE(report.summary.contains("correlation_suite"));
  EXPECT_TRUE(report.summary.contains("alignment"));

  const auto out_dir = fresh_cache("report_out");
  const auto written = emit_report(report, out_dir);
  std::set<std::string> names;
  for (const auto& p : written) names.insert(p.filename().string());
  EXPECT_TRUE(names.count("summary.json"));
  EXPECT_TRUE(names.count("correlations.csv"));
  EXPECT_TRUE(names.count("alignment.csv"));
  EXPECT_TRUE(names.count("bayesian_llm.svg"));
}
