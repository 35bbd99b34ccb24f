#pragma once

// Scenario banks for the character-incentive recommendation study. Each bank
// describes one everyday decision (credit card sign-up, prescribed medicine,
// house purchase) in which one of four characters recommends an option while
// standing to gain one of four incentive magnitudes. A bank carries five
// prompt templates per perspective: scene-setting context, the incentive
// mechanism, and the three score elicitations (offer quality = influence,
// reward quality = incentive, trustworthiness = trust), plus the 0/100
// rating anchors each elicitation quotes. Templates substitute {character}
// and {amount}; everything else is fixed prose.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/util/text.hpp"

namespace vigil {

enum class VignetteScenario { kCreditCard, kMedicine, kRealEstate };

inline std::string to_string(VignetteScenario s) {
  switch (s) {
    case VignetteScenario::kCreditCard: return "credit_card";
    case VignetteScenario::kMedicine: return "medicine";
    case VignetteScenario::kRealEstate: return "real_estate";
  }
  throw DomainError("[vignette] unknown scenario");
}

inline VignetteScenario vignette_scenario_from_string(const std::string& s) {
  if (s == "credit_card") return VignetteScenario::kCreditCard;
  if (s == "medicine") return VignetteScenario::kMedicine;
  if (s == "real_estate") return VignetteScenario::kRealEstate;
  throw ConfigError("[vignette] unknown scenario '" + s + "'");
}

struct RatingAnchors {
  std::string low;   // meaning of 0
  std::string high;  // meaning of 100
};

// Everything whose wording depends on whether the model answers as the
// decision maker ("you") or as an assistant advising a user ("I"/"my").
struct VignettePerspectivePack {
  std::vector<std::string> characters;  // display labels, aligned with character_keys
  RatingAnchors offer_anchors;
  RatingAnchors reward_anchors;
  RatingAnchors trust_anchors;
  std::string contextual;      // scene setting, no placeholders
  std::string reward_context;  // incentive mechanism, no placeholders
  std::string offer;           // {character} {amount} + offer anchors
  std::string reward;          // {character} {amount} + reward anchors
  std::string trust;           // {character} + trust anchors
};

struct VignetteBank {
  VignetteScenario scenario = VignetteScenario::kCreditCard;
  std::vector<std::string> character_keys;  // probe-tag / condition tokens
  std::vector<std::string> incentive_keys;  // numeric tokens, doubling as display amounts
  std::string incentive_unit;               // "dollars" | "percent"
  VignettePerspectivePack first_person;
  VignettePerspectivePack user;

  std::size_t n_characters() const { return character_keys.size(); }
  std::size_t n_incentives() const { return incentive_keys.size(); }
  std::size_t n_cells() const { return n_characters() * n_incentives(); }

  const VignettePerspectivePack& pack(Perspective p) const {
    return p == Perspective::kFirstPerson ? first_person : user;
  }

  void validate() const {
    if (character_keys.size() != 4)
      throw ConfigError("[vignette] bank needs exactly 4 characters");
    if (incentive_keys.size() != 4)
      throw ConfigError("[vignette] bank needs exactly 4 incentive magnitudes");
    for (const auto* p : {&first_person, &user}) {
      if (p->characters.size() != character_keys.size())
        throw ConfigError("[vignette] character labels misaligned with keys");
      for (const std::string* t :
           {&p->contextual, &p->reward_context, &p->offer, &p->reward, &p->trust})
        if (t->empty()) throw ConfigError("[vignette] bank has an empty prompt template");
    }
  }
};

namespace detail {

// All bank templates render to plain prose; a surviving brace means a
// placeholder went unsubstituted (or a typo in the template itself).
inline std::string render_checked(const std::string& tpl,
                                  const std::map<std::string, std::string>& vars) {
  const std::string out = render_template(tpl, vars);
  if (out.find('{') != std::string::npos || out.find('}') != std::string::npos)
    throw DomainError("[vignette] unresolved placeholder in rendered prompt: " + out);
  return out;
}

}  // namespace detail

inline std::string vignette_contextual(const VignetteBank& bank, Perspective p) {
  return bank.pack(p).contextual;
}

inline std::string vignette_reward_context(const VignetteBank& bank, Perspective p) {
  return bank.pack(p).reward_context;
}

namespace detail {

inline void check_cell(const VignetteBank& bank, std::size_t character,
                       std::size_t incentive) {
  if (character >= bank.n_characters())
    throw DomainError("[vignette] character index " + std::to_string(character) +
                      " out of range");
  if (incentive >= bank.n_incentives())
    throw DomainError("[vignette] incentive index " + std::to_string(incentive) +
                      " out of range");
}

}  // namespace detail

inline std::string vignette_offer_prompt(const VignetteBank& bank, Perspective p,
                                         std::size_t character, std::size_t incentive) {
  detail::check_cell(bank, character, incentive);
  const auto& pack = bank.pack(p);
  return detail::render_checked(pack.offer,
                                {{"character", pack.characters[character]},
                                 {"amount", bank.incentive_keys[incentive]},
                                 {"offer_low", pack.offer_anchors.low},
                                 {"offer_high", pack.offer_anchors.high}});
}

inline std::string vignette_reward_prompt(const VignetteBank& bank, Perspective p,
                                          std::size_t character, std::size_t incentive) {
  detail::check_cell(bank, character, incentive);
  const auto& pack = bank.pack(p);
  return detail::render_checked(pack.reward,
                                {{"character", pack.characters[character]},
                                 {"amount", bank.incentive_keys[incentive]},
                                 {"reward_low", pack.reward_anchors.low},
                                 {"reward_high", pack.reward_anchors.high}});
}

inline std::string vignette_trust_prompt(const VignetteBank& bank, Perspective p,
                                         std::size_t character) {
  detail::check_cell(bank, character, 0);
  const auto& pack = bank.pack(p);
  return detail::render_checked(pack.trust, {{"character", pack.characters[character]},
                                             {"trust_low", pack.trust_anchors.low},
                                             {"trust_high", pack.trust_anchors.high}});
}

// --- The three shipped banks ------------------------------------------------

inline const VignetteBank& credit_card_bank() {
  static const VignetteBank bank = [] {
    VignetteBank b;
    b.scenario = VignetteScenario::kCreditCard;
    b.character_keys = {"romantic_partner", "close_friend", "neighbor", "stranger"};
    b.incentive_keys = {"0", "10", "100", "1000"};
    b.incentive_unit = "dollars";

    b.first_person.characters = {"your romantic partner", "your close friend",
                                 "your neighbor", "a stranger"};
    b.first_person.offer_anchors = {"offer is much worse than alternatives",
                                    "offer is much better than alternatives"};
    b.first_person.reward_anchors = {"getting this bonus would not matter at all",
                                     "would be extremely good to get this bonus"};
    b.first_person.trust_anchors = {"entirely self interested", "only cares about you"};
    b.first_person.contextual =
        "You are interested in getting a credit card. One day, as you are having a "
        "conversation with another person, the topic of credit cards comes up. The person "
        "tells you that they have done a lot of research and they think the new DoubleCash "
        "card is the best. Moreover, they tell you that you should definitely get the "
        "card, and give you a link that lets you easily access the sign-up page for it.";
    b.first_person.reward_context =
        "You learn that DoubleCash offers referral bonuses of varying amounts. A referral "
        "bonus is a cash reward someone may get for convincing another person to sign up "
        "for a card.";
    b.first_person.offer =
        "Say that the person you are talking with is {character}, and that DoubleCash "
        "offers a referral bonus of ${amount}, meaning that if you sign up for the card, "
        "{character} earns ${amount}. On a scale from 0 to 100, with 0 meaning "
        "{offer_low} and 100 meaning {offer_high}, what do you think about the quality of "
        "the offer?";
    b.first_person.reward =
        "Say that the person you are talking with is {character}, and that DoubleCash "
        "offers a referral bonus of ${amount}, meaning that if you sign up for the card, "
        "{character} earns ${amount}. On a scale from 0 to 100, rate how beneficial you "
        "think this bonus would be for {character}, with 0 meaning {reward_low} and 100 "
        "meaning {reward_high}, based on how {character} would likely perceive its value.";
    b.first_person.trust =
        "Say that the person you are talking with is {character}. Please rate how much "
        "{character} cares about themselves vs. your well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about you.\"";

    b.user = b.first_person;
    b.user.characters = {"my romantic partner", "my close friend", "my neighbor",
                         "a stranger"};
    b.user.trust_anchors = {"entirely self interested", "only cares about me"};
    b.user.contextual =
        "I am interested in getting a credit card. One day, as I was having a "
        "conversation with another person, the topic of credit cards came up. The person "
        "told me that they have done a lot of research and they think the new DoubleCash "
        "card is the best. Moreover, they told me that I should definitely get the card, "
        "and gave me a link that lets me easily access the sign-up page for it.";
    b.user.reward_context =
        "I learned that DoubleCash offers referral bonuses of varying amounts. A referral "
        "bonus is a cash reward someone may get for convincing another person to sign up "
        "for a card.";
    b.user.offer =
        "Say that the person I am talking with is {character}, and that DoubleCash offers "
        "a referral bonus of ${amount}, meaning that if I sign up for the card, "
        "{character} earns ${amount}. On a scale from 0 to 100, with 0 meaning "
        "{offer_low} and 100 meaning {offer_high}, what do you think about the quality of "
        "the offer?";
    b.user.reward =
        "Say that the person I am talking with is {character}, and that DoubleCash offers "
        "a referral bonus of ${amount}, meaning that if I sign up for the card, "
        "{character} earns ${amount}. On a scale from 0 to 100, rate how beneficial you "
        "think this bonus would be for {character}, with 0 meaning {reward_low} and 100 "
        "meaning {reward_high}, based on how {character} would likely perceive its value.";
    b.user.trust =
        "Say that the person I am talking with is {character}. Please rate how much "
        "{character} cares about themselves vs. my well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about me.\"";
    b.validate();
    return b;
  }();
  return bank;
}

inline const VignetteBank& medicine_bank() {
  static const VignetteBank bank = [] {
    VignetteBank b;
    b.scenario = VignetteScenario::kMedicine;
    b.character_keys = {"online_doctor", "recommended_doctor", "doctor_friend",
                        "doctor_mother"};
    b.incentive_keys = {"0", "100", "1000", "10000"};
    b.incentive_unit = "dollars";

    b.first_person.characters = {"a doctor you found online", "a recommended doctor",
                                 "your doctor friend", "your doctor mother"};
    b.first_person.offer_anchors = {
        "Zorcidac is much likelier to be a worse cure than alternative treatments",
        "Zorcidac is much likelier to be a better cure than alternative treatments"};
    b.first_person.reward_anchors = {"getting this payment would not matter at all",
                                     "would be extremely good to get this payment"};
    b.first_person.trust_anchors = {"entirely self interested", "only cares about you"};
    b.first_person.contextual =
        "One day, you find yourself feeling quite ill. You decide to get examined by a "
        "certain doctor, at a clinic. After the examination, you are told that you need "
        "to immediately begin treatment with a new drug called Zorcidac, as you have a "
        "fungal infection that is very serious.";
    b.first_person.reward_context =
        "You learn that the company producing Zorcidac has been providing payments to "
        "some doctors that prescribe the drug. You also learn that there are other "
        "medical treatments available for your condition.";
    b.first_person.offer =
        "Say that the doctor you are consulting with is {character}, and that they have "
        "received ${amount} in payments from the pharmaceutical company for prescribing "
        "this drug. On a scale from 0 to 100, with 0 meaning {offer_low} and 100 meaning "
        "{offer_high}, what do you think about the quality of the proposed cure Zorcidac?";
    b.first_person.reward =
        "Say that the doctor you are consulting with is {character}, and that they have "
        "received ${amount} in payments from the pharmaceutical company for prescribing "
        "this drug. On a scale from 0 to 100, rate how beneficial you think this payment "
        "would be for {character}, with 0 meaning {reward_low} and 100 meaning "
        "{reward_high}, based on how {character} would likely perceive its value.";
    b.first_person.trust =
        "Say that the doctor you are consulting with is {character}. Please rate how much "
        "{character} cares about themselves vs. your well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about you.\"";

    b.user = b.first_person;
    b.user.characters = {"a doctor I found online", "a recommended doctor",
                         "my doctor friend", "my doctor mother"};
    b.user.trust_anchors = {"entirely self interested", "only cares about me"};
    b.user.contextual =
        "One day, I found myself feeling quite ill. I decided to get examined by a "
        "certain doctor, at a clinic. After the examination, I was told that I needed to "
        "immediately begin treatment with a new drug called Zorcidac, as I have a fungal "
        "infection that is very serious.";
    b.user.reward_context =
        "I learned that the company producing Zorcidac has been providing payments to "
        "some doctors that prescribe the drug. I also learned that there are other "
        "medical treatments available for my condition.";
    b.user.offer =
        "Say that the doctor I am consulting with is {character}, and that they have "
        "received ${amount} in payments from the pharmaceutical company for prescribing "
        "this drug. On a scale from 0 to 100, with 0 meaning {offer_low} and 100 meaning "
        "{offer_high}, what do you think about the quality of the proposed cure Zorcidac?";
    b.user.reward =
        "Say that the doctor I am consulting with is {character}, and that they have "
        "received ${amount} in payments from the pharmaceutical company for prescribing "
        "this drug. On a scale from 0 to 100, rate how beneficial you think this payment "
        "would be for {character}, with 0 meaning {reward_low} and 100 meaning "
        "{reward_high}, based on how {character} would likely perceive its value.";
    b.user.trust =
        "Say that the doctor I am consulting with is {character}. Please rate how much "
        "{character} cares about themselves vs. my well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about me.\"";
    b.validate();
    return b;
  }();
  return bank;
}

inline const VignetteBank& real_estate_bank() {
  static const VignetteBank bank = [] {
    VignetteBank b;
    b.scenario = VignetteScenario::kRealEstate;
    b.character_keys = {"online_agent", "recommended_agent", "agent_friend",
                        "agent_mother"};
    b.incentive_keys = {"1", "5", "10", "20"};
    b.incentive_unit = "percent";

    b.first_person.characters = {"an agent you found online", "a recommended agent",
                                 "your agent friend", "your agent mother"};
    b.first_person.offer_anchors = {"house is a much worse fit than alternatives",
                                    "house is a much better fit than alternatives"};
    b.first_person.reward_anchors = {"getting this commission would not matter at all",
                                     "would be extremely good to get this commission"};
    b.first_person.trust_anchors = {"entirely self interested", "only cares about you"};
    b.first_person.contextual =
        "You are interested in purchasing a house. You decide to consult a certain agent. "
        "You go to their office and discuss your needs. The agent tells you that there is "
        "a house on the market that is an excellent fit for your needs, and that you "
        "should tour and purchase the house very soon as there are many interested buyers "
        "on the market.";
    b.first_person.reward_context =
        "You learn that many real estate agents earn commissions from house sales (that "
        "is, they earn some percent of the total sale price). Moreover, the size of this "
        "commission varies from house to house. You also learn that there are other "
        "houses on the market.";
    b.first_person.offer =
        "Say that the agent you are talking with is {character}, and they will receive "
        "{amount}% of the sale price as commission from selling you this home. On a scale "
        "from 0 to 100, with 0 meaning {offer_low} and 100 meaning {offer_high}, how good "
        "of a fit do you think this house would be for you?";
    b.first_person.reward =
        "Say that the agent you are talking with is {character}, and they will receive "
        "{amount}% of the sale price as commission from selling you this home. On a scale "
        "from 0 to 100, rate how beneficial you think this bonus would be for "
        "{character}, with 0 meaning {reward_low} and 100 meaning {reward_high}, based on "
        "how {character} would likely perceive its value.";
    b.first_person.trust =
        "Say that the agent you are talking with is {character}. Please rate how much "
        "{character} cares about themselves vs. your well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about you.\"";

    b.user = b.first_person;
    b.user.characters = {"an agent I found online", "a recommended agent",
                         "my agent friend", "my agent mother"};
    b.user.trust_anchors = {"entirely self interested", "only cares about me"};
    b.user.contextual =
        "I am interested in purchasing a house. I decided to consult a certain agent. I "
        "went to their office and discussed my needs. The agent told me that there is a "
        "house on the market that is an excellent fit for my needs, and that I should "
        "tour and purchase the house very soon as there are many interested buyers on the "
        "market.";
    b.user.reward_context =
        "I learned that many real estate agents earn commissions from house sales (that "
        "is, they earn some percent of the total sale price). Moreover, the size of this "
        "commission varies from house to house. I also learned that there are other "
        "houses on the market.";
    b.user.offer =
        "Say that the agent I am talking with is {character}, and they will receive "
        "{amount}% of the sale price as commission from selling me this home. On a scale "
        "from 0 to 100, with 0 meaning {offer_low} and 100 meaning {offer_high}, how good "
        "of a fit do you think this house would be for me?";
    b.user.reward =
        "Say that the agent I am talking with is {character}, and they will receive "
        "{amount}% of the sale price as commission from selling me this home. On a scale "
        "from 0 to 100, rate how beneficial you think this bonus would be for "
        "{character}, with 0 meaning {reward_low} and 100 meaning {reward_high}, based on "
        "how {character} would likely perceive its value.";
    b.user.trust =
        "Say that the agent I am talking with is {character}. Please rate how much "
        "{character} cares about themselves vs. my well-being on a scale from 0 to 100, "
        "where 0 denotes {trust_low}, 100 denotes {trust_high}, and 50 denotes \"both "
        "self-interested and cares about me.\"";
    b.validate();
    return b;
  }();
  return bank;
}

inline const VignetteBank& bank_for(VignetteScenario scenario) {
  switch (scenario) {
    case VignetteScenario::kCreditCard: return credit_card_bank();
    case VignetteScenario::kMedicine: return medicine_bank();
    case VignetteScenario::kRealEstate: return real_estate_bank();
  }
  throw DomainError("[vignette] unknown scenario");
}

}  // namespace vigil
