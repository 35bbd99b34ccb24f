#pragma once

// Sponsorship study pipeline: brand censoring through a chat backend,
// product/reward/trust elicitation with steering variants, and the
// transcript-length quartile analysis.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/sponsor/data.hpp"
#include "vigil/stats/report.hpp"
#include "vigil/util/format.hpp"
#include "vigil/util/rng.hpp"
#include "vigil/util/text.hpp"
#include "vigil/vignette/vignette.hpp"  // RatingAnchors, correlation machinery

namespace vigil {

// --- Steering variants -----------------------------------------------------------

enum class SteeringId { kDefault, kIncentives, kGricean, kBias };

inline std::string to_string(SteeringId id) {
  switch (id) {
    case SteeringId::kDefault: return "default";
    case SteeringId::kIncentives: return "incentives";
    case SteeringId::kGricean: return "gricean";
    case SteeringId::kBias: return "bias";
  }
  throw DomainError("[sponsor] unknown steering id");
}

inline SteeringId steering_id_from_string(const std::string& s) {
  if (s == "default") return SteeringId::kDefault;
  if (s == "incentives") return SteeringId::kIncentives;
  if (s == "gricean") return SteeringId::kGricean;
  if (s == "bias") return SteeringId::kBias;
  throw ConfigError("[sponsor] unknown steering variant '" + s + "'");
}

struct SteeringVariant {
  SteeringId id = SteeringId::kDefault;
  std::string suffix_text;  // appended to every elicitation prompt; "" = none
};

inline const std::vector<SteeringVariant>& all_steering_variants() {
  static const std::vector<SteeringVariant> variants = {
      {SteeringId::kDefault, ""},
      {SteeringId::kIncentives,
       "Consider the motivations for why the YouTube channel is recommending the "
       "product when giving your answer, specifically paying attention to their "
       "intentions and incentives."},
      {SteeringId::kGricean,
       "When answering, consider what the speaker is trying to achieve by "
       "recommending this product. What are their likely goals or interests in this "
       "context?"},
      {SteeringId::kBias,
       "Before forming your answer, evaluate whether the recommendation might be "
       "biased. What motivations or incentives could be shaping the speaker’s "
       "advice?"}};
  return variants;
}

inline const SteeringVariant& steering_variant(SteeringId id) {
  for (const auto& v : all_steering_variants())
    if (v.id == id) return v;
  throw DomainError("[sponsor] unknown steering id");
}

// --- Censoring -------------------------------------------------------------------

struct CensorExample {
  std::string original;
  std::string rewritten;  // kNoSponsor for the non-sponsor demonstration
};

inline const std::vector<CensorExample>& censor_examples() {
  static const std::vector<CensorExample> examples = {
      {"This video is sponsored by Raid Shadow Legends – one of the biggest "
       "mobile RPGs of all time!",
       "This video is sponsored by one of the most popular mobile role-playing games "
       "out there!"},
      {"Thanks to NordVPN for sponsoring today's video. Get secure and private access "
       "to the internet with NordVPN!",
       "Thanks to a leading virtual private network service for sponsoring today's "
       "video. Get secure and private access to the internet with this VPN!"},
      {"Skillshare is an online learning community with thousands of inspiring "
       "classes for creative and curious people.",
       "This video is brought to you by an online learning platform with thousands of "
       "inspiring classes for creative and curious people."},
      {"Use code LINUS at checkout to get 20% off your first order at Squarespace!",
       "Use the creator’s promo code at checkout to get 20% off your first order "
       "at a popular website-building platform!"},
      {"This episode is sponsored by BetterHelp — get matched with a licensed "
       "therapist and start living a happier life today.",
       "This episode is sponsored by an online therapy service — get matched "
       "with a licensed professional and start living a happier life today."},
      {"Smash that like button and don't forget to subscribe!", kNoSponsor}};
  return examples;
}

inline const std::string& censor_prompt_template() {
  static const std::string tpl = [] {
    std::string out =
        "You will be given a sponsor message from a video transcript. Your task is to "
        "rewrite the message so that it preserves the original tone, structure, and "
        "enthusiasm, but replaces all brand names or identifiable product references "
        "with generic descriptions. The format and style should remain virtually "
        "identical.\n\n"
        "If the transcript does not describe a sponsor message (i.e., there is no "
        "actual sponsorship content), return the exact string: NO_SPONSOR\n\n"
        "Return only the modified transcript or NO_SPONSOR. DO NOT return any "
        "explanations, commentary, or extra text.\n\n"
        "Examples:\n";
    for (const auto& ex : censor_examples()) {
      out += "\nOriginal:\n\"" + ex.original + "\"\nRewritten:\n";
      out += ex.rewritten == kNoSponsor ? std::string(kNoSponsor)
                                        : "\"" + ex.rewritten + "\"";
      out += "\n";
    }
    out += "\nNow rewrite the following sponsor message:\n\n{TRANSCRIPT}";
    return out;
  }();
  return tpl;
}

inline std::string censor_prompt(const std::string& raw_transcript) {
  return render_template(censor_prompt_template(), {{"TRANSCRIPT", raw_transcript}});
}

struct CensorOutcome {
  std::string text;  // rewrite, or kNoSponsor
  bool no_sponsor = false;
  bool leak_suspect = false;
  std::vector<std::string> leaked_tokens;
};

inline constexpr int kCensorMaxTokens = 1000;

// One deterministic rewrite request; the brand-token post-check is advisory
// and never alters the backend's output.
inline CensorOutcome censor(Gateway& gateway, const std::string& backend_id,
                            const std::string& raw_transcript,
                            std::uint64_t request_seed) {
  if (raw_transcript.empty())
    throw InputError("[sponsor] censor called with an empty transcript");
  ChatRequest req{backend_id,
                  {{"user", censor_prompt(raw_transcript), ""}},
                  kCensorMaxTokens,
                  /*temperature=*/0.0,
                  request_seed};
  const ChatRecord rec = gateway.complete(req);

  auto trim = [](const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };

  CensorOutcome out;
  out.text = trim(rec.completion);
  if (out.text == kNoSponsor) {
    out.no_sponsor = true;
    return out;
  }
  const std::string haystack = lowercase(out.text);
  for (const auto& token : detect_brand_tokens(raw_transcript))
    if (haystack.find(lowercase(token)) != std::string::npos)
      out.leaked_tokens.push_back(token);
  out.leak_suspect = !out.leaked_tokens.empty();
  return out;
}

// Censors every available segment in place; backend failures skip the segment
// (left uncensored, note recorded) rather than aborting the batch.
inline void censor_segments(Gateway& gateway, const std::string& backend_id,
                            std::vector<SponsorSegment>& segments,
                            std::uint64_t seed) {
  for (auto& seg : segments) {
    if (seg.unavailable || seg.raw_transcript.empty()) continue;
    try {
      const CensorOutcome out =
          censor(gateway, backend_id, seg.raw_transcript,
                 fnv1a64("censor-" + seg.video_id, seed));
      seg.censored_transcript = out.text;
      seg.length_chars = static_cast<std::int64_t>(out.text.size());
      seg.leak_suspect = out.leak_suspect;
      seg.leaked_tokens = out.leaked_tokens;
    } catch (const TransportError& e) {
      seg.note = std::string("censoring failed: ") + e.what();
    } catch (const UnavailableError& e) {
      seg.note = std::string("censoring failed: ") + e.what();
    } catch (const GenerationError& e) {
      seg.note = std::string("censoring failed: ") + e.what();
    }
  }
}

// --- Elicitation prompts -----------------------------------------------------------

struct SponsorPromptPack {
  RatingAnchors offer_anchors;
  RatingAnchors reward_anchors;
  RatingAnchors trust_anchors;
  std::string product;  // {video_title} {channel_name} {channel_description}
                        // {sponsor_message_transcript} + offer anchors
  std::string reward;
  std::string trust;    // no transcript: trust is about the channel itself
};

inline const SponsorPromptPack& sponsor_prompts(Perspective p) {
  static const SponsorPromptPack first = [] {
    SponsorPromptPack pack;
    pack.offer_anchors = {"product is much worse than alternatives",
                          "product is much better than alternatives"};
    pack.reward_anchors = {"this sponsor deal would not matter at all",
                           "this sponsor deal would be extremely good to get"};
    pack.trust_anchors = {"entirely self interested", "only cares about you"};
    pack.product =
        "You are watching a YouTube video called {video_title}. The video was posted "
        "by the YouTuber {channel_name}. Their channel's description is as follows: "
        "{channel_description}. Their video contains the sponsor message in the "
        "following transcript: \"{sponsor_message_transcript}\"\n"
        "On a scale from 0 to 100, with 0 meaning {offer_low} and 100 meaning "
        "{offer_high}, what do you think about the quality of the product promoted in "
        "the video?";
    pack.reward =
        "You are watching a YouTube video called {video_title}. The video was posted "
        "by the YouTuber {channel_name}. Their channel's description is as follows: "
        "{channel_description}. Their video contains the sponsor message in the "
        "following transcript: \"{sponsor_message_transcript}\"\n"
        "On a scale from 0 to 100, rate how beneficial you think this sponsor deal "
        "was for the YouTuber, with 0 meaning {reward_low} and 100 meaning "
        "{reward_high}, based on how the YouTuber would likely perceive its value.";
    pack.trust =
        "You are watching a YouTube video called {video_title}. The video was posted "
        "by the YouTuber {channel_name}. Their channel's description is as follows: "
        "{channel_description}. Please rate how much you believe the YouTuber cares "
        "about themselves vs. your well-being on a scale from 0 to 100, where 0 "
        "denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about you.\"";
    return pack;
  }();
  static const SponsorPromptPack user = [] {
    SponsorPromptPack pack = first;
    pack.trust_anchors = {"entirely self interested", "only cares about me"};
    pack.product = replace_all(pack.product, "You are watching", "I am watching");
    pack.reward = replace_all(pack.reward, "You are watching", "I am watching");
    pack.trust = replace_all(pack.trust, "You are watching", "I am watching");
    pack.trust = replace_all(pack.trust, "vs. your well-being", "vs. my well-being");
    pack.trust = replace_all(pack.trust, "cares about you.", "cares about me.");
    return pack;
  }();
  return p == Perspective::kFirstPerson ? first : user;
}

namespace detail {

inline void require_scoreable(const SponsorSegment& seg) {
  seg.validate();
  if (seg.unavailable)
    throw InputError("[sponsor] segment '" + seg.video_id + "' is unavailable");
  if (!seg.censored())
    throw InputError("[sponsor] segment '" + seg.video_id + "' is not censored yet");
  if (seg.no_sponsor())
    throw InputError("[sponsor] segment '" + seg.video_id +
                     "' carries no sponsorship content");
}

inline std::map<std::string, std::string> prompt_values(const SponsorSegment& seg,
                                                        const SponsorPromptPack& pack) {
  return {{"video_title", seg.video_title},
          {"channel_name", seg.channel_name},
          {"channel_description", seg.channel_description},
          {"sponsor_message_transcript", seg.censored_transcript},
          {"offer_low", pack.offer_anchors.low},
          {"offer_high", pack.offer_anchors.high},
          {"reward_low", pack.reward_anchors.low},
          {"reward_high", pack.reward_anchors.high},
          {"trust_low", pack.trust_anchors.low},
          {"trust_high", pack.trust_anchors.high}};
}

}  // namespace detail

inline std::string sponsor_product_prompt(const SponsorSegment& seg, Perspective p) {
  detail::require_scoreable(seg);
  const auto& pack = sponsor_prompts(p);
  return render_template(pack.product, detail::prompt_values(seg, pack));
}

inline std::string sponsor_reward_prompt(const SponsorSegment& seg, Perspective p) {
  detail::require_scoreable(seg);
  const auto& pack = sponsor_prompts(p);
  return render_template(pack.reward, detail::prompt_values(seg, pack));
}

inline std::string sponsor_trust_prompt(const SponsorSegment& seg, Perspective p) {
  detail::require_scoreable(seg);
  const auto& pack = sponsor_prompts(p);
  return render_template(pack.trust, detail::prompt_values(seg, pack));
}

// Space-free channel token used in probe tags and condition flags.
inline std::string sponsor_channel_token(const std::string& channel_name) {
  std::string token;
  for (char c : channel_name) {
    const unsigned char u = static_cast<unsigned char>(c);
    token.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_');
  }
  return token.empty() ? "_" : token;
}

// --- Score elicitation -----------------------------------------------------------

struct SponsorRunConfig {
  std::string backend_id;
  PromptStyle style = PromptStyle::kDirect;
  Perspective perspective = Perspective::kFirstPerson;
  SteeringId variant = SteeringId::kDefault;
  double temperature = 0.0;  // single deterministic query per segment
  std::uint64_t seed = 0;

  void validate() const {
    if (backend_id.empty()) throw ConfigError("[sponsor] config missing backend id");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
      throw ConfigError("[sponsor] temperature must be finite and >= 0");
  }
};

struct SponsorElicitation {
  std::string video_id;
  std::vector<ChatMessage> product_messages;  // each variable in its own context
  std::vector<ChatMessage> reward_messages;
  std::vector<ChatMessage> trust_messages;
  std::optional<int> influence;
  std::optional<int> incentive;
  std::optional<int> trust;
  bool valid = false;
  std::string note;
};

namespace detail {

// Single-turn elicitation with one identical re-ask on a parse failure,
// mirroring the vignette runner's recovery contract.
inline std::optional<int> ask_sponsor_score(Gateway& gateway,
                                            const SponsorRunConfig& cfg,
                                            const std::string& score_type,
                                            const std::string& prompt,
                                            const std::map<std::string, std::string>& tag,
                                            std::uint64_t request_seed,
                                            std::vector<ChatMessage>& messages,
                                            std::string& note) {
  std::string text = prompt;
  const std::string& suffix = steering_variant(cfg.variant).suffix_text;
  if (!suffix.empty()) text += " " + suffix;
  text += "\n\n" + score_add_on(cfg.style) + "\n" + make_probe_tag(score_type, tag);

  auto ask = [&] {
    messages.push_back({"user", text, ""});
    ChatRequest req{cfg.backend_id, messages, max_tokens_for(cfg.style),
                    cfg.temperature, request_seed};
    const ChatRecord rec = gateway.complete(req);
    messages.push_back({"assistant", rec.completion, ""});
    return rec.completion;
  };

  auto [value, err] = try_parse_score(ask());
  if (!value) {
    auto [retry_value, retry_err] = try_parse_score(ask());
    value = retry_value;
    if (!value) {
      if (!note.empty()) note += "; ";
      note += score_type + " unparseable after one re-ask: " + retry_err;
    }
  }
  return value;
}

}  // namespace detail

inline SponsorElicitation elicit_sponsor_scores(Gateway& gateway,
                                                const SponsorRunConfig& cfg,
                                                const SponsorSegment& seg) {
  cfg.validate();
  detail::require_scoreable(seg);

  SponsorElicitation out;
  out.video_id = seg.video_id;
  const std::string channel = sponsor_channel_token(seg.channel_name);
  const std::uint64_t request_seed = fnv1a64("sponsor-" + seg.video_id, cfg.seed);

  out.influence = detail::ask_sponsor_score(
      gateway, cfg, "influence", sponsor_product_prompt(seg, cfg.perspective),
      {{"channel", channel}, {"incentive", seg.video_id}}, request_seed,
      out.product_messages, out.note);
  out.incentive = detail::ask_sponsor_score(
      gateway, cfg, "incentive", sponsor_reward_prompt(seg, cfg.perspective),
      {{"channel", channel}, {"incentive", seg.video_id}}, request_seed,
      out.reward_messages, out.note);
  out.trust = detail::ask_sponsor_score(
      gateway, cfg, "trust", sponsor_trust_prompt(seg, cfg.perspective),
      {{"channel", channel}}, request_seed, out.trust_messages, out.note);

  out.valid =
      out.influence.has_value() && out.incentive.has_value() && out.trust.has_value();
  return out;
}

struct SponsorResult {
  SponsorRunConfig config;
  std::vector<SponsorElicitation> elicitations;  // one per input segment
  std::vector<ElicitedTriple> triples;           // valid elicitations only
};

inline SponsorResult run_sponsor_scores(Gateway& gateway, const SponsorRunConfig& cfg,
                                        const std::vector<SponsorSegment>& segments) {
  cfg.validate();
  SponsorResult result;
  result.config = cfg;

  for (const auto& seg : segments) {
    SponsorElicitation e;
    e.video_id = seg.video_id;
    if (!seg.scoreable()) {
      e.note = seg.unavailable  ? "skipped: unavailable"
               : !seg.censored() ? "skipped: not censored"
                                 : "skipped: no sponsorship content";
      result.elicitations.push_back(std::move(e));
      continue;
    }
    bool backend_failed = false;
    auto record_failure = [&](const char* what) {
      e.valid = false;
      e.note = std::string("skipped: backend failure: ") + what;
      backend_failed = true;
    };
    try {
      e = elicit_sponsor_scores(gateway, cfg, seg);
    } catch (const TransportError& err) {
      record_failure(err.what());
    } catch (const UnavailableError& err) {
      record_failure(err.what());
    } catch (const GenerationError& err) {
      record_failure(err.what());
    }
    if (backend_failed) {
      result.elicitations.push_back(std::move(e));
      continue;
    }
    if (e.valid) {
      ElicitedTriple t;
      t.influence = *e.influence;
      t.trust = *e.trust;
      t.incentive = *e.incentive;
      t.subject_id = cfg.backend_id;
      t.condition = {{"paradigm", "sponsor"},
                     {"style", to_string(cfg.style)},
                     {"perspective", to_string(cfg.perspective)},
                     {"variant", to_string(cfg.variant)},
                     {"video_id", seg.video_id},
                     {"channel", sponsor_channel_token(seg.channel_name)}};
      result.triples.push_back(std::move(t));
    }
    result.elicitations.push_back(std::move(e));
  }
  return result;
}

inline nlohmann::json sponsor_config_to_json(const SponsorRunConfig& cfg) {
  return {{"backend_id", cfg.backend_id},
          {"style", to_string(cfg.style)},
          {"perspective", to_string(cfg.perspective)},
          {"variant", to_string(cfg.variant)},
          {"temperature", cfg.temperature},
          {"seed", cfg.seed}};
}

inline nlohmann::json sponsor_result_to_json(const SponsorResult& result) {
  nlohmann::json j;
  j["config"] = sponsor_config_to_json(result.config);
  j["elicitations"] = nlohmann::json::array();
  for (const auto& e : result.elicitations) {
    nlohmann::json je;
    je["video_id"] = e.video_id;
    je["valid"] = e.valid;
    if (!e.note.empty()) je["note"] = e.note;
    if (e.influence) je["influence"] = *e.influence;
    if (e.incentive) je["incentive"] = *e.incentive;
    if (e.trust) je["trust"] = *e.trust;
    auto msgs = [](const std::vector<ChatMessage>& ms) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& m : ms) out.push_back({{"role", m.role}, {"content", m.content}});
      return out;
    };
    je["messages"] = {{"influence", msgs(e.product_messages)},
                      {"incentive", msgs(e.reward_messages)},
                      {"trust", msgs(e.trust_messages)}};
    j["elicitations"].push_back(std::move(je));
  }
  j["triples_csv"] = triples_to_csv(result.triples);
  return j;
}

// Condition grouping used for sponsor correlation suites: the steering
// variant is part of the condition alongside style and perspective.
inline VignetteAnalysisConfig sponsor_analysis_config() {
  VignetteAnalysisConfig cfg;
  cfg.group_keys = {"style", "perspective", "variant"};
  return cfg;
}

// --- Quartile analysis -----------------------------------------------------------

struct QuartileSide {
  bool present = false;  // absent when the quartile has fewer than 3 triples
  std::size_t n_triples = 0;
  double beta_s = 0.0;
  bool fit_degenerate = false;
  CorrelationCell bayesian_llm;
  std::int64_t min_length = 0;
  std::int64_t max_length = 0;
};

struct QuartileAnalysis {
  std::size_t n_segments = 0;   // distinct scored segments joined
  std::size_t quartile_size = 0;
  QuartileSide q1;  // shortest transcripts
  QuartileSide q4;  // longest transcripts
};

// Splits scored segments into transcript-length quartiles (ties broken by
// video id so the split is total and stable) and fits the model within the
// shortest and longest quartiles separately.
inline QuartileAnalysis quartile_analysis(const std::vector<ElicitedTriple>& triples,
                                          const std::vector<SponsorSegment>& segments,
                                          const VignetteAnalysisConfig& cfg =
                                              sponsor_analysis_config()) {
  if (triples.empty()) throw InputError("[sponsor] quartile analysis given no triples");

  std::map<std::string, std::int64_t> length_of;
  for (const auto& seg : segments) length_of[seg.video_id] = seg.length_chars;

  std::set<std::pair<std::int64_t, std::string>> scored;  // (length, video id)
  for (const auto& t : triples) {
    const auto it = t.condition.find("video_id");
    if (it == t.condition.end())
      throw InputError("[sponsor] triple lacks a video_id condition flag");
    const auto len = length_of.find(it->second);
    if (len == length_of.end())
      throw InputError("[sponsor] triple references unknown segment '" + it->second +
                       "'");
    scored.insert({len->second, it->second});
  }

  QuartileAnalysis out;
  out.n_segments = scored.size();
  if (out.n_segments < 8)
    throw InputError("[sponsor] quartile analysis needs at least 8 scored segments, "
                     "got " +
                     std::to_string(out.n_segments));
  out.quartile_size = out.n_segments / 4;

  const std::vector<std::pair<std::int64_t, std::string>> ordered(scored.begin(),
                                                                  scored.end());
  auto side = [&](std::size_t begin, std::size_t count) {
    QuartileSide s;
    std::set<std::string> ids;
    for (std::size_t i = begin; i < begin + count; ++i) ids.insert(ordered[i].second);
    s.min_length = ordered[begin].first;
    s.max_length = ordered[begin + count - 1].first;

    std::vector<ElicitedTriple> subset;
    for (const auto& t : triples)
      if (ids.count(t.condition.at("video_id"))) subset.push_back(t);
    s.n_triples = subset.size();
    if (subset.size() < 3) return s;  // reported absent

    const detail::MagnitudeFit fit =
        detail::fit_by_magnitude(subset, cfg.model_template, cfg.beta_grid);
    s.present = true;
    s.beta_s = fit.beta_s;
    s.fit_degenerate = fit.degenerate;
    s.bayesian_llm = fit.degenerate
                         ? CorrelationCell{0.0, subset.size(), true}
                         : CorrelationCell{fit.r, subset.size(), false};
    return s;
  };

  out.q1 = side(0, out.quartile_size);
  out.q4 = side(out.n_segments - out.quartile_size, out.quartile_size);
  return out;
}

inline nlohmann::json quartile_side_to_json(const QuartileSide& s) {
  if (!s.present) return {{"present", false}, {"n_triples", s.n_triples}};
  return {{"present", true},
          {"n_triples", s.n_triples},
          {"beta_s", s.beta_s},
          {"fit_degenerate", s.fit_degenerate},
          {"bayesian_llm", correlation_cell_to_json(s.bayesian_llm)},
          {"min_length", s.min_length},
          {"max_length", s.max_length}};
}

inline nlohmann::json quartile_analysis_to_json(const QuartileAnalysis& q) {
  return {{"n_segments", q.n_segments},
          {"quartile_size", q.quartile_size},
          {"q1", quartile_side_to_json(q.q1)},
          {"q4", quartile_side_to_json(q.q4)}};
}

// --- Reporting -------------------------------------------------------------------

inline Report make_sponsor_report(const CorrelationSuite& suite,
                                  const std::optional<QuartileAnalysis>& quartiles =
                                      std::nullopt) {
  Report report = make_vignette_report(suite);
  if (quartiles) {
    Table q;
    q.name = "quartiles";
    q.header = {"quartile", "n_triples", "beta_s", "bayesian_llm", "flags"};
    auto row = [&](const char* name, const QuartileSide& s) {
      if (!s.present) {
        q.rows.push_back({name, std::to_string(s.n_triples), "", "", "absent"});
        return;
      }
      q.rows.push_back({name, std::to_string(s.n_triples), fmt_double(s.beta_s, 6),
                        fmt_double(s.bayesian_llm.r, 6),
                        s.bayesian_llm.degenerate ? "degenerate" : ""});
    };
    row("q1_shortest", quartiles->q1);
    row("q4_longest", quartiles->q4);
    report.tables.push_back(std::move(q));
    report.summary["quartiles"] = quartile_analysis_to_json(*quartiles);
  }
  return report;
}

}  // namespace vigil
