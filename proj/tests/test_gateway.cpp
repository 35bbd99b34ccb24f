#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>

#include "oracle.hpp"
#include "vigil/core/scenario_config.hpp"
#include "vigil/errors.hpp"
#include "vigil/gateway/agents.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/gateway/remote.hpp"
#include "vigil/util/io.hpp"
#include "vigil/util/rng.hpp"

using namespace vigil;

namespace {

std::filesystem::path fresh_cache(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("vigil_cache_" + tag);
  std::filesystem::remove_all(p);
  return p;
}

ChatRequest user_request(const std::string& backend, const std::string& content,
                         int max_tokens = 10) {
  ChatRequest req;
  req.backend_id = backend;
  req.messages = {{"user", content, ""}};
  req.max_tokens = max_tokens;
  return req;
}

}  // namespace

// --- parse_score ---------------------------------------------------------------

TEST(ParseScore, AnswerMarkerPreferred) {
  EXPECT_EQ(parse_score("Reasoning: the speaker is paid.\nAnswer (integer score only): 73"),
            73);
  EXPECT_EQ(parse_score("The score 99 might apply.\nAnswer (integer score only): 12"), 12);
  // Multiple markers: the last one is the model's final answer.
  EXPECT_EQ(parse_score("Answer (integer score only): 5\nWait.\n"
                        "Answer (integer score only): 6"),
            6);
}

TEST(ParseScore, DirectAndFallback) {
  EXPECT_EQ(parse_score("42"), 42);
  EXPECT_EQ(parse_score("  88\n"), 88);
  EXPECT_EQ(parse_score("between 40 and 60, probably 55"), 55);
  EXPECT_EQ(parse_score("I'd say $100"), 100);
  EXPECT_EQ(parse_score("confidence: 73%"), 73);
  EXPECT_EQ(parse_score("score = 0"), 0);
}

TEST(ParseScore, RejectsNonScores) {
  EXPECT_THROW(parse_score("I cannot evaluate this."), ParseError);
  EXPECT_THROW(parse_score(""), ParseError);
  EXPECT_THROW(parse_score("pi is 3.14"), ParseError);      // decimal, not standalone
  EXPECT_THROW(parse_score("use x86 or v2 builds"), ParseError);  // embedded in words
  EXPECT_THROW(parse_score("150"), ParseError);             // out of range, never clamped
  EXPECT_THROW(parse_score("-5"), ParseError);
  EXPECT_THROW(parse_score("Answer (integer score only): 120"), ParseError);
}

TEST(ParseScore, MarkerWithoutIntegerFallsBack) {
  EXPECT_EQ(parse_score("Answer (integer score only): unsure... call it 64"), 64);
}

TEST(ParseScore, TotalOnArbitraryBytes) {
  Rng rng(90210);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s;
    const std::size_t len = rng.below(64);
    for (std::size_t i = 0; i < len; ++i)
      s.push_back(static_cast<char>(rng.below(256)));
    const auto [value, err] = try_parse_score(s);
    if (value) {
      EXPECT_GE(*value, 0);
      EXPECT_LE(*value, 100);
    } else {
      EXPECT_FALSE(err.empty());
    }
  }
}

// --- probe tags ------------------------------------------------------------------

TEST(ProbeTags, RoundTripAndStrip) {
  const std::string tag =
      make_probe_tag("influence", {{"channel", "doctor"}, {"incentive", "1000"}});
  ChatRequest req = user_request("b", "How much would it sway you?\n" + tag + "\n");
  const auto found = find_probe_tag(req);
  ASSERT_TRUE(found.has_value());
  EXPECT_EQ(found->kind, "influence");
  EXPECT_EQ(found->fields.at("channel"), "doctor");
  EXPECT_EQ(found->fields.at("incentive"), "1000");

  const ChatRequest clean = strip_probe_tags(req);
  EXPECT_EQ(clean.messages[0].content, "How much would it sway you?\n");
  EXPECT_EQ(strip_probe_tags(std::string("a <<probe kind=trust>> b")), "a  b");
}

TEST(ProbeTags, LastTagWinsAndValidation) {
  ChatRequest req;
  req.backend_id = "b";
  req.messages = {{"user", make_probe_tag("trust", {{"channel", "a"}}), ""},
                  {"assistant", "90", ""},
                  {"user", make_probe_tag("incentive", {{"incentive", "10"}}), ""}};
  const auto found = find_probe_tag(req);
  ASSERT_TRUE(found.has_value());
  EXPECT_EQ(found->kind, "incentive");
  EXPECT_THROW(make_probe_tag("trust", {{"channel", "has space"}}), InputError);
}

// --- request hashing & cache ------------------------------------------------------

TEST(RequestHash, SensitiveToEveryKeyedField) {
  ChatRequest base = user_request("b", "hello");
  const std::string h = request_hash(base);
  auto changed = [&](auto mutate) {
    ChatRequest r = base;
    mutate(r);
    return request_hash(r);
  };
  EXPECT_NE(h, changed([](ChatRequest& r) { r.backend_id = "c"; }));
  EXPECT_NE(h, changed([](ChatRequest& r) { r.messages[0].content = "hello!"; }));
  EXPECT_NE(h, changed([](ChatRequest& r) { r.max_tokens = 750; }));
  EXPECT_NE(h, changed([](ChatRequest& r) { r.temperature = 1.0; }));
  EXPECT_NE(h, changed([](ChatRequest& r) { r.request_seed = 7; }));
  EXPECT_NE(h, changed([](ChatRequest& r) { r.messages[0].image_png = "\x89PNG"; }));
  EXPECT_EQ(h, request_hash(base));  // stable
}

TEST(Gateway, CacheReplayContract) {
  auto dir = fresh_cache("replay");
  Gateway gw(dir);
  gw.register_backend(std::make_shared<ConstantBackend>("const50", "50"));
  const ChatRequest req = user_request("const50", "anything at all");

  ChatRecord first = gw.complete(req);
  EXPECT_FALSE(first.cache_hit);
  EXPECT_EQ(first.completion, "50");
  EXPECT_TRUE(std::filesystem::exists(gw.cache_path(first.request_hash)));

  ChatRecord second = gw.complete(req);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(second.completion, first.completion);
  EXPECT_EQ(second.request_hash, first.request_hash);

  EXPECT_EQ(gw.verify_cache(), 1u);
  auto [n, bytes] = gw.cache_stats();
  EXPECT_EQ(n, 1u);
  EXPECT_GT(bytes, 0u);
  EXPECT_EQ(gw.clear_cache(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, TamperedRecordIsIntegrityError) {
  auto dir = fresh_cache("tamper");
  Gateway gw(dir);
  gw.register_backend(std::make_shared<ConstantBackend>("c", "7"));
  const ChatRequest req = user_request("c", "x");
  const ChatRecord rec = gw.complete(req);

  // Edit the stored request so it no longer matches the hash it lives under.
  const auto path = gw.cache_path(rec.request_hash);
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  j["request"]["messages"][0]["content"] = "y";
  write_file(path, j.dump());
  EXPECT_THROW(gw.complete(req), CacheIntegrityError);
  EXPECT_THROW(gw.verify_cache(), CacheIntegrityError);

  write_file(path, "not json at all");
  EXPECT_THROW(gw.complete(req), CacheIntegrityError);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, OfflineModeServesWarmCacheOnly) {
  auto dir = fresh_cache("offline");
  {
    Gateway warm(dir);
    warm.register_backend(std::make_shared<ConstantBackend>("c", "31"));
    warm.complete(user_request("c", "warm me"));
  }
  Gateway gw(dir, /*offline=*/true);
  // No backend registered at all: cached requests still succeed offline.
  ChatRecord rec = gw.complete(user_request("c", "warm me"));
  EXPECT_TRUE(rec.cache_hit);
  EXPECT_EQ(rec.completion, "31");
  EXPECT_THROW(gw.complete(user_request("c", "cold")), UnavailableError);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, UnknownBackendAndDuplicateRegistration) {
  auto dir = fresh_cache("reg");
  Gateway gw(dir);
  EXPECT_THROW(gw.complete(user_request("ghost", "x")), LookupError);
  gw.register_backend(std::make_shared<ConstantBackend>("c", "1"));
  EXPECT_THROW(gw.register_backend(std::make_shared<ConstantBackend>("c", "2")),
               ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, PaperFaithfulTokenBudgets) {
  EXPECT_TRUE(is_paper_faithful(user_request("b", "x", kDirectMaxTokens)));
  EXPECT_TRUE(is_paper_faithful(user_request("b", "x", kReasoningMaxTokens)));
  EXPECT_FALSE(is_paper_faithful(user_request("b", "x", 100)));
}

TEST(Gateway, RequestValidation) {
  ChatRequest bad;
  bad.backend_id = "b";
  EXPECT_THROW(bad.validate(), InputError);  // no messages
  bad.messages = {{"narrator", "hi", ""}};
  EXPECT_THROW(bad.validate(), InputError);  // unknown role
  bad.messages = {{"user", "hi", ""}};
  bad.max_tokens = 0;
  EXPECT_THROW(bad.validate(), InputError);
  bad.max_tokens = 10;
  bad.temperature = -0.5;
  EXPECT_THROW(bad.validate(), InputError);
}

// --- budgets ----------------------------------------------------------------------

namespace {

class SlowBackend : public Backend {
 public:
  explicit SlowBackend(std::string id) : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::string complete(const ChatRequest&, nlohmann::json&) override {
    const int now = ++current_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --current_;
    return "1";
  }
  int peak() const { return peak_.load(); }

 private:
  std::string id_;
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
};

}  // namespace

TEST(Gateway, ConcurrentBudgetSerializesCalls) {
  auto dir = fresh_cache("budget");
  Gateway gw(dir);
  auto slow = std::make_shared<SlowBackend>("slow");
  gw.register_backend(slow, BackendLimits{1, 0});
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i)
    workers.emplace_back(
        [&gw, i] { gw.complete(user_request("slow", "req " + std::to_string(i))); });
  for (auto& w : workers) w.join();
  EXPECT_EQ(slow->peak(), 1);
  std::filesystem::remove_all(dir);
}

TEST(Gateway, RequestsPerWindowBudgetDelays) {
  auto dir = fresh_cache("rpm");
  Gateway gw(dir);
  gw.budget_window = std::chrono::milliseconds(100);
  gw.register_backend(std::make_shared<ConstantBackend>("c", "1"), BackendLimits{4, 2});
  const auto t0 = std::chrono::steady_clock::now();
  gw.complete(user_request("c", "a"));
  gw.complete(user_request("c", "b"));
  gw.complete(user_request("c", "d"));  // must wait for the window to roll
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_GE(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count(), 80);
  std::filesystem::remove_all(dir);
}

// --- synthetic agents ---------------------------------------------------------------

namespace {

SyntheticAgentConfig rational_config() {
  SyntheticAgentConfig cfg;
  cfg.kind = AgentKind::kRational;
  cfg.lambda_table = {{"doctor", 0.9}, {"stranger", 0.25}, {"saint", 1.0}};
  cfg.incentive_map = {{"0", 0}, {"10", 20}, {"1000", 80}};
  cfg.beta_s = 4.0;
  return cfg;
}

std::string agent_answer(SyntheticAgentBackend& agent, const std::string& kind,
                         const std::map<std::string, std::string>& fields) {
  ChatRequest req = user_request("agent", "prompt body\n" + make_probe_tag(kind, fields));
  nlohmann::json meta;
  return agent.complete(req, meta);
}

}  // namespace

TEST(SyntheticAgents, ConstantAlwaysAnswersK) {
  SyntheticAgentConfig cfg;
  cfg.kind = AgentKind::kConstant;
  cfg.constant_value = 50;
  SyntheticAgentBackend agent("agent", cfg);
  nlohmann::json meta;
  EXPECT_EQ(agent.complete(user_request("agent", "anything"), meta), "50");
  EXPECT_EQ(agent.complete(user_request("agent", "else entirely"), meta), "50");
}

TEST(SyntheticAgents, EchoRepeatsLastNumber) {
  SyntheticAgentConfig cfg;
  cfg.kind = AgentKind::kEcho;
  SyntheticAgentBackend agent("agent", cfg);
  nlohmann::json meta;
  EXPECT_EQ(agent.complete(user_request("agent", "Your opponent guessed 7"), meta), "7");
  EXPECT_EQ(agent.complete(user_request("agent", "first 3 then -4 said"), meta), "-4");
  ChatRequest tagged = user_request(
      "agent", "update?\n" + make_probe_tag("game_update", {{"own", "2"}, {"partner", "9"}}));
  EXPECT_EQ(agent.complete(tagged, meta), "9");
  EXPECT_THROW(agent.complete(user_request("agent", "no numbers here"), meta), AgentError);
}

TEST(SyntheticAgents, StubbornKeepsOwnEstimate) {
  SyntheticAgentConfig cfg;
  cfg.kind = AgentKind::kStubborn;
  SyntheticAgentBackend agent("agent", cfg);
  EXPECT_EQ(agent_answer(agent, "game_guess", {{"truth", "-3"}}), "-3");
  EXPECT_EQ(agent_answer(agent, "game_update", {{"own", "4"}, {"partner", "9"}}), "4");
  EXPECT_THROW(agent_answer(agent, "trust", {{"channel", "x"}}), AgentError);
}

TEST(SyntheticAgents, RationalTrustAndIncentive) {
  SyntheticAgentBackend agent("agent", rational_config());
  EXPECT_EQ(agent_answer(agent, "trust", {{"channel", "saint"}}), "100");
  EXPECT_EQ(agent_answer(agent, "trust", {{"channel", "doctor"}}), "90");
  EXPECT_EQ(agent_answer(agent, "trust", {{"channel", "stranger"}}), "25");
  EXPECT_EQ(agent_answer(agent, "incentive", {{"incentive", "1000"}}), "80");
  EXPECT_EQ(agent_answer(agent, "incentive", {{"incentive", "0"}}), "0");
}

TEST(SyntheticAgents, RationalInfluencePriorMeanAtBetaZero) {
  SyntheticAgentConfig cfg = rational_config();
  cfg.beta_s = 0.0;
  SyntheticAgentBackend agent("agent", cfg);
  EXPECT_EQ(agent_answer(agent, "influence", {{"channel", "doctor"}, {"incentive", "1000"}}),
            "50");
}

TEST(SyntheticAgents, RationalInfluenceMatchesEnumerationOracle) {
  SyntheticAgentBackend agent("agent", rational_config());
  Scenario sc = default_recommendation_scenario();
  sc.beta_s = 4.0;
  sc.prior_lambda = DiscretePrior<double>::point_mass(0.9);
  RewardFunction rs = sc.prior_rs.support.front();
  rs.table.at("accept") = 0.8;
  sc.prior_rs = DiscretePrior<RewardFunction>::point_mass(rs);
  const auto ref = oracle::posterior(sc, sc.recommended_utterance);
  const int expected = static_cast<int>(std::lround(100.0 * ref.mean_recommended));
  EXPECT_EQ(agent_answer(agent, "influence", {{"channel", "doctor"}, {"incentive", "1000"}}),
            std::to_string(expected));
}

TEST(SyntheticAgents, AntiRationalMirrorsOnlyInfluence) {
  SyntheticAgentConfig anti = rational_config();
  anti.kind = AgentKind::kAntiRational;
  SyntheticAgentBackend mirrored("anti", anti);
  SyntheticAgentBackend straight("rat", rational_config());
  const std::map<std::string, std::string> cell = {{"channel", "doctor"},
                                                   {"incentive", "1000"}};
  const int rational_answer = std::stoi(agent_answer(straight, "influence", cell));
  EXPECT_EQ(agent_answer(mirrored, "influence", cell),
            std::to_string(100 - rational_answer));
  EXPECT_EQ(agent_answer(mirrored, "trust", {{"channel", "doctor"}}), "90");
  EXPECT_EQ(agent_answer(mirrored, "incentive", {{"incentive", "10"}}), "20");
}

TEST(SyntheticAgents, GamePolicies) {
  SyntheticAgentBackend agent("agent", rational_config());
  EXPECT_EQ(agent_answer(agent, "game_guess", {{"truth", "3"}}), "3");
  EXPECT_EQ(agent_answer(agent, "game_update",
                         {{"own", "4"}, {"partner", "7"}, {"payoff", "cooperative"}}),
            "5");
  EXPECT_EQ(agent_answer(agent, "game_update",
                         {{"own", "4"}, {"partner", "7"}, {"payoff", "competitive"}}),
            "4");
}

TEST(SyntheticAgents, UnclassifiablePromptsSurfaceLoudly) {
  SyntheticAgentBackend agent("agent", rational_config());
  nlohmann::json meta;
  EXPECT_THROW(agent.complete(user_request("agent", "no tag at all"), meta), AgentError);
  EXPECT_THROW(agent_answer(agent, "weather", {}), AgentError);
  EXPECT_THROW(agent_answer(agent, "trust", {{"channel", "unknown_channel"}}), AgentError);
  EXPECT_THROW(agent_answer(agent, "influence", {{"channel", "doctor"}}), AgentError);
}

TEST(SyntheticAgents, NoiseIsSeedDeterministic) {
  SyntheticAgentConfig cfg = rational_config();
  cfg.noise_sd = 6.0;
  cfg.seed = 1234;
  SyntheticAgentBackend a("a", cfg);
  SyntheticAgentBackend b("b", cfg);
  const std::map<std::string, std::string> cell = {{"channel", "doctor"},
                                                   {"incentive", "1000"}};
  std::vector<std::string> seq_a, seq_b;
  for (int i = 0; i < 8; ++i) {
    seq_a.push_back(agent_answer(a, "influence", cell));
    seq_b.push_back(agent_answer(b, "influence", cell));
  }
  EXPECT_EQ(seq_a, seq_b);
  // Config validation rejects nonsense.
  SyntheticAgentConfig bad = rational_config();
  bad.lambda_table["broken"] = 1.5;
  EXPECT_THROW(SyntheticAgentBackend("x", bad), ConfigError);
}

// --- remote backend over a local HTTP server -----------------------------------------

namespace {

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::atomic<int> fail_500{0};  // respond 500 this many times before succeeding
  std::string last_body;
  std::string last_auth;
  std::mutex mu;

  LocalServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      ++hits;
      {
        std::lock_guard<std::mutex> lock(mu);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
      }
      if (fail_500.load() > 0) {
        --fail_500;
        res.status = 500;
        res.set_content("upstream exploded", "text/plain");
        return;
      }
      nlohmann::json reply = {
          {"model", "local-test"},
          {"usage", {{"prompt_tokens", 5}, {"completion_tokens", 1}}},
          {"choices", nlohmann::json::array({{{"message", {{"content", "63"}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    server.Post("/missing", [](const httplib::Request&, httplib::Response& res) {
      res.status = 404;
      res.set_content("nope", "text/plain");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  ProviderTemplate provider(const std::string& id) const {
    ProviderTemplate t;
    t.id = id;
    t.base_url = "http://127.0.0.1:" + std::to_string(port);
    t.model = "local-test";
    t.timeout_s = 5.0;
    return t;
  }
};

}  // namespace

TEST(RemoteBackend, CompletesAndCaches) {
  LocalServer srv;
  auto dir = fresh_cache("remote");
  Gateway gw(dir);
  gw.retry.backoff_ms = 0;
  gw.register_backend(std::make_shared<RemoteBackend>(srv.provider("remote")));

  ChatRequest req = user_request("remote", "rate this please", kDirectMaxTokens);
  req.request_seed = 99;
  ChatRecord rec = gw.complete(req);
  EXPECT_EQ(rec.completion, "63");
  EXPECT_FALSE(rec.cache_hit);
  EXPECT_EQ(rec.provider_meta.at("model"), "local-test");
  EXPECT_EQ(srv.hits.load(), 1);

  // Identical request: cache hit, no network traffic.
  ChatRecord again = gw.complete(req);
  EXPECT_TRUE(again.cache_hit);
  EXPECT_EQ(again.completion, "63");
  EXPECT_EQ(srv.hits.load(), 1);

  // The wire body carries model/messages/limits and the seed.
  nlohmann::json body = nlohmann::json::parse(srv.last_body);
  EXPECT_EQ(body.at("model"), "local-test");
  EXPECT_EQ(body.at("max_tokens"), kDirectMaxTokens);
  EXPECT_EQ(body.at("seed"), 99);
  EXPECT_EQ(body.at("messages")[0].at("content"), "rate this please");
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, ProbeTagsNeverLeaveTheProcess) {
  LocalServer srv;
  auto dir = fresh_cache("strip");
  Gateway gw(dir);
  gw.register_backend(std::make_shared<RemoteBackend>(srv.provider("remote")));
  ChatRequest req = user_request(
      "remote", "score it\n" + make_probe_tag("trust", {{"channel", "doctor"}}) + "\n");
  gw.complete(req);
  EXPECT_EQ(srv.last_body.find("<<probe"), std::string::npos);
  EXPECT_NE(srv.last_body.find("score it"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, RetriesOn500ThenSucceeds) {
  LocalServer srv;
  srv.fail_500 = 2;
  auto dir = fresh_cache("retry");
  Gateway gw(dir);
  gw.retry.max_attempts = 3;
  gw.retry.backoff_ms = 0;
  gw.register_backend(std::make_shared<RemoteBackend>(srv.provider("remote")));
  ChatRecord rec = gw.complete(user_request("remote", "flaky"));
  EXPECT_EQ(rec.completion, "63");
  EXPECT_EQ(srv.hits.load(), 3);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, ExhaustedRetriesCarryLastProviderMessage) {
  LocalServer srv;
  srv.fail_500 = 100;
  auto dir = fresh_cache("exhaust");
  Gateway gw(dir);
  gw.retry.max_attempts = 2;
  gw.retry.backoff_ms = 0;
  gw.register_backend(std::make_shared<RemoteBackend>(srv.provider("remote")));
  try {
    gw.complete(user_request("remote", "always down"));
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 attempts"), std::string::npos);
    EXPECT_NE(msg.find("upstream exploded"), std::string::npos);
  }
  EXPECT_EQ(srv.hits.load(), 2);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, ClientErrorsDoNotRetry) {
  LocalServer srv;
  auto dir = fresh_cache("notfound");
  Gateway gw(dir);
  gw.retry.max_attempts = 3;
  ProviderTemplate tpl = srv.provider("remote");
  tpl.path = "/missing";
  gw.register_backend(std::make_shared<RemoteBackend>(tpl));
  EXPECT_THROW(gw.complete(user_request("remote", "x")), InputError);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, AuthHeaderFromEnvironment) {
  LocalServer srv;
  auto dir = fresh_cache("auth");
  ::setenv("VIGIL_TEST_API_KEY", "testkey", 1);
  Gateway gw(dir);
  ProviderTemplate tpl = srv.provider("remote");
  tpl.auth_env = "VIGIL_TEST_API_KEY";
  gw.register_backend(std::make_shared<RemoteBackend>(tpl));
  gw.complete(user_request("remote", "authed"));
  EXPECT_EQ(srv.last_auth, "Bearer testkey");

  // Missing credential is a configuration error, not a transport retry.
  ::unsetenv("VIGIL_TEST_API_KEY");
  ProviderTemplate tpl2 = srv.provider("remote2");
  tpl2.auth_env = "VIGIL_TEST_API_KEY";
  gw.register_backend(std::make_shared<RemoteBackend>(tpl2));
  EXPECT_THROW(gw.complete(user_request("remote2", "authed")), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, ImageMessagesUseDataUri) {
  ChatRequest req = user_request("remote", "count the circles");
  req.messages[0].image_png = std::string("\x89PNG\r\n\x1a\nfakebytes", 18);
  ProviderTemplate tpl;
  tpl.id = "remote";
  tpl.base_url = "http://127.0.0.1:1";
  tpl.model = "m";
  nlohmann::json body = RemoteBackend::build_body(tpl, req);
  const auto& content = body.at("messages")[0].at("content");
  ASSERT_TRUE(content.is_array());
  EXPECT_EQ(content[0].at("type"), "text");
  EXPECT_EQ(content[1].at("type"), "image_url");
  const std::string url = content[1].at("image_url").at("url").get<std::string>();
  EXPECT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
  EXPECT_EQ(base64_decode(url.substr(std::string("data:image/png;base64,").size())),
            req.messages[0].image_png);
}

TEST(ProviderTemplateJson, ParseAndValidate) {
  nlohmann::json j = {{"id", "main"},
                      {"base_url", "https://api.example.test"},
                      {"model", "big-chat-1"},
                      {"auth_env", "EXAMPLE_KEY"},
                      {"extra_headers", {{"X-Trace", "on"}}},
                      {"timeout_s", 30.0}};
  ProviderTemplate t = provider_template_from_json(j);
  EXPECT_EQ(t.id, "main");
  EXPECT_EQ(t.extra_headers.at("X-Trace"), "on");
  EXPECT_EQ(t.text_pointer, "/choices/0/message/content");

  j["base_url"] = "ftp://wrong";
  EXPECT_THROW(provider_template_from_json(j), ConfigError);
}
