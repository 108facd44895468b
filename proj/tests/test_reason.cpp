#include <gtest/gtest.h>

#include <atomic>
#include <functional>

#include "mapmind/remote.hpp"
#include "support.hpp"

using namespace mapmind;
using namespace testsupport;

namespace {

TaskItem sample_task(int correct = 2) {
  TaskItem t;
  t.id = "test-PJ-1";
  t.category = Category::PJ;
  t.question = "Which of the following places is closest to P1 (Museum)?";
  t.options = {"P2 (Park)", "P3 (Bank)", "P4 (Zoo)", "P5 (Pier)"};
  t.correct = correct;
  t.meta.pois = {1, 2, 3, 4, 5};
  return t;
}

MemoryBundle sample_bundle() {
  DialogueMemory d;
  d.messages.push_back({Speaker::narrator, "You begin at POI P1 (Museum), at (3,4)."});
  return serialize_bundle(std::nullopt, d);
}

// Replies produced by a caller-supplied function; records every request.
class FnEndpoint : public Endpoint {
 public:
  explicit FnEndpoint(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  Completion complete(const ChatRequest& req) override {
    requests.push_back(req);
    return Completion{fn_(req)};
  }
  const EndpointSpec& spec() const override { return spec_; }
  std::vector<ChatRequest> requests;

 private:
  std::function<std::string(const ChatRequest&)> fn_;
  EndpointSpec spec_;
};

EndpointSpec scripted(EndpointKind kind, std::uint64_t seed = 0) {
  EndpointSpec s;
  s.name = "scripted";
  s.kind = kind;
  s.seed = seed;
  return s;
}

// A local chat server on an ephemeral port.
struct LocalServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/v1/chat/completions", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    thread.join();
  }
  EndpointSpec spec(int attempts = 3) const {
    EndpointSpec s;
    s.name = "local";
    s.kind = EndpointKind::remote_chat;
    s.model = "test-model";
    s.base_url = "http://127.0.0.1:" + std::to_string(port);
    s.max_attempts = attempts;
    s.backoff_ms = 1;
    s.timeout_s = 5;
    return s;
  }
};

CallContext keyed(std::string key) {
  CallContext c;
  c.key = std::move(key);
  return c;
}

ChatRequest request(std::vector<ChatMessage> messages, double temperature = 0.0) {
  ChatRequest r;
  r.messages = std::move(messages);
  r.temperature = temperature;
  return r;
}

std::string ok_body(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

}  // namespace

TEST(ExtractChoice, TaggedAnswers) {
  EXPECT_EQ(extract_choice("Answer: B"), 1);
  EXPECT_EQ(extract_choice("so the answer: (c)"), 2);
  EXPECT_EQ(extract_choice("**Answer:** D"), 3);
  EXPECT_EQ(extract_choice("Answer: A\nOn reflection, Answer: C"), 2);
  EXPECT_EQ(extract_choice("Answer: B, not A"), 1);
}

TEST(ExtractChoice, BareLetterFallback) {
  EXPECT_EQ(extract_choice("I pick B."), 1);
  EXPECT_EQ(extract_choice("Between B and D, D"), 3);
  EXPECT_EQ(extract_choice("no idea, maybe a or b"), std::nullopt);
  EXPECT_EQ(extract_choice("Answer: E"), std::nullopt);
  EXPECT_EQ(extract_choice("BAD CAB"), std::nullopt);
  EXPECT_EQ(extract_choice(""), std::nullopt);
}

TEST(MajorityVote, TiesGoToEarliestSample) {
  EXPECT_EQ(majority_vote({1, 0, 0, 1}), 1);
  EXPECT_EQ(majority_vote({3, 0, 0}), 0);
  EXPECT_EQ(majority_vote({std::nullopt, 2, std::nullopt}), 2);
  EXPECT_EQ(majority_vote({std::nullopt, std::nullopt}), std::nullopt);
  EXPECT_EQ(majority_vote({}), std::nullopt);
}

TEST(Schemes, ParseNames) {
  EXPECT_EQ(parse_scheme("DT").kind, SchemeKind::DT);
  EXPECT_EQ(parse_scheme("SC-CoT").kind, SchemeKind::SC_CoT);
  EXPECT_EQ(parse_scheme("SC_CoT").kind, SchemeKind::SC_CoT);
  EXPECT_EQ(parse_scheme("ToT").name(), "ToT");
  EXPECT_THROW(parse_scheme("GoT"), error);
}

TEST(Prompt, SuffixOnlyForChainSchemes) {
  const auto b = sample_bundle();
  const auto t = sample_task();
  for (auto k : {SchemeKind::DT, SchemeKind::CoT, SchemeKind::SC_CoT, SchemeKind::ToT}) {
    const auto msgs = build_task_prompt(b, t, Scheme{k});
    ASSERT_EQ(msgs.size(), 2u);
    EXPECT_EQ(msgs[0].role, Role::system);
    EXPECT_EQ(msgs[1].text.rfind("Your memory of the exploration:\n" + b.serialized + "\nQuestion:\n", 0), 0u);
    const bool suffix = msgs[1].text.ends_with("Let's think step by step.");
    EXPECT_EQ(suffix, k == SchemeKind::CoT || k == SchemeKind::SC_CoT) << scheme_name(k);
    EXPECT_EQ(msgs, build_task_prompt(b, t, Scheme{k}));
  }
  EXPECT_NE(build_task_prompt(b, t, Scheme{}).at(1).text.find("D. P5 (Pier)\n"), std::string::npos);
}

TEST(Prompt, DegenerateTaskIsRejected) {
  auto t = sample_task();
  t.meta.degenerate = true;
  EXPECT_THROW(build_task_prompt(sample_bundle(), t, Scheme{}), error);
  OracleEndpoint ep(scripted(EndpointKind::scripted_oracle));
  EXPECT_THROW(run_scheme(ep, sample_bundle(), t, Scheme{SchemeKind::ToT}), error);
}

TEST(Oracle, AnswersCorrectlyUnderEveryScheme) {
  OracleEndpoint ep(scripted(EndpointKind::scripted_oracle));
  for (int correct = 0; correct < 4; ++correct)
    for (auto k : {SchemeKind::DT, SchemeKind::CoT, SchemeKind::SC_CoT, SchemeKind::ToT}) {
      const auto out = run_scheme(ep, sample_bundle(), sample_task(correct), Scheme{k}, {"cell/item", correct});
      EXPECT_EQ(out.answer, correct);
    }
  EXPECT_EQ(run_single(ep, {}, 0, {"k", std::nullopt}).answer, std::nullopt);
}

TEST(Random, DependsOnlyOnKeyAndIsUniform) {
  RandomEndpoint ep(scripted(EndpointKind::scripted_random, 9));
  const auto msgs = build_task_prompt(sample_bundle(), sample_task(), Scheme{});
  EXPECT_EQ(run_single(ep, msgs, 0, keyed("a")).answer, run_single(ep, msgs, 0, keyed("a")).answer);
  std::array<int, 4> hits{};
  for (int i = 0; i < 4000; ++i) ++hits[static_cast<std::size_t>(*run_single(ep, msgs, 0, keyed(std::to_string(i))).answer)];
  for (int h : hits) EXPECT_NEAR(h, 1000, 100);
  RandomEndpoint other(scripted(EndpointKind::scripted_random, 10));
  int same = 0;
  for (int i = 0; i < 200; ++i)
    same += run_single(ep, msgs, 0, keyed(std::to_string(i))).answer == run_single(other, msgs, 0, keyed(std::to_string(i))).answer;
  EXPECT_LT(same, 100);
}

TEST(SelfConsistency, SamplesKTimesWithDistinctKeys) {
  FnEndpoint ep([](const ChatRequest& r) { return r.key.ends_with("/s0") ? "Answer: A" : "Answer: C"; });
  const auto out = run_self_consistency(ep, {}, 5, 0.7, keyed("item"));
  ASSERT_EQ(ep.requests.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(ep.requests[static_cast<std::size_t>(i)].key, "item/s" + std::to_string(i));
    EXPECT_DOUBLE_EQ(ep.requests[static_cast<std::size_t>(i)].temperature, 0.7);
    EXPECT_EQ(out.calls[static_cast<std::size_t>(i)].sample, i);
  }
  EXPECT_EQ(out.answer, 2);
  EXPECT_THROW(run_self_consistency(ep, {}, 0, 0.7), error);
}

TEST(TreeOfThoughts, TwoCallsPlanThenCandidates) {
  OracleEndpoint oracle(scripted(EndpointKind::scripted_oracle));
  const auto out = run_tot(oracle, sample_bundle(), sample_task(1), 3, 3, 0.0, {"k", 1});
  ASSERT_EQ(out.calls.size(), 2u);
  EXPECT_EQ(out.calls[0].stage, Stage::plan);
  EXPECT_EQ(out.calls[1].stage, Stage::candidates);
  EXPECT_EQ(out.plans.size(), 3u);
  EXPECT_EQ(out.candidates.size(), 3u);
  EXPECT_EQ(out.chosen_plan, 1);
  EXPECT_FALSE(out.plan_fallback);
  EXPECT_EQ(out.answer, 1);
}

TEST(TreeOfThoughts, SelectedPlanIsPassedToSecondStage) {
  FnEndpoint ep([](const ChatRequest& r) -> std::string {
    if (r.stage == Stage::plan) return "Plan 1: look north\nPlan 2: count roads\nSelected plan: 2";
    return "Candidate 1: A\nCandidate 2: B\nAnswer: B";
  });
  const auto out = run_tot(ep, sample_bundle(), sample_task(), 2, 2, 0.0);
  EXPECT_EQ(out.chosen_plan, 2);
  EXPECT_NE(ep.requests[1].messages[1].text.find("Follow this reasoning plan: count roads\n"), std::string::npos);
  EXPECT_EQ(out.answer, 1);
}

TEST(TreeOfThoughts, UnparseablePlanFallsBackToFirst) {
  FnEndpoint ep([](const ChatRequest& r) -> std::string {
    return r.stage == Stage::plan ? "Plan 1: think\nPlan 2: guess\nSelected plan: 7" : "Answer: D";
  });
  const auto out = run_tot(ep, sample_bundle(), sample_task(), 2, 2, 0.0);
  EXPECT_TRUE(out.plan_fallback);
  EXPECT_EQ(out.chosen_plan, 1);
  EXPECT_EQ(out.answer, 3);
}

TEST(CallLog, JsonFields) {
  CallRecord r{Stage::candidates, 2, "Answer: B", 1, 12.5, 3, std::nullopt};
  const auto j = call_record_to_json(r);
  EXPECT_EQ(j.at("stage"), "candidates");
  EXPECT_EQ(j.at("sample"), 2);
  EXPECT_EQ(j.at("choice"), "B");
  EXPECT_EQ(j.at("latency_ms"), 12.5);
  EXPECT_EQ(j.at("attempts"), 3);
  EXPECT_FALSE(j.contains("failure"));
  r.choice.reset();
  r.failure = "endpoint-error: http 500";
  const auto k = call_record_to_json(r);
  EXPECT_TRUE(k.at("choice").is_null());
  EXPECT_EQ(k.at("failure"), "endpoint-error: http 500");
}

TEST(EndpointSpec, Checks) {
  EndpointSpec s = scripted(EndpointKind::scripted_oracle);
  s.temperature = 3;
  EXPECT_THROW(s.check(), error);
  s.temperature = 0;
  s.max_attempts = 0;
  EXPECT_THROW(s.check(), error);
  EndpointSpec r = scripted(EndpointKind::remote_chat);
  EXPECT_THROW(r.check(), error);
  EXPECT_EQ(parse_endpoint_kind("scripted-random"), EndpointKind::scripted_random);
  EXPECT_THROW(parse_endpoint_kind("psychic"), error);
}

TEST(Remote, UrlHandling) {
  EXPECT_EQ(split_base_url("https://api.example.com/v1/").origin, "https://api.example.com");
  EXPECT_EQ(split_base_url("https://api.example.com/v1/").path, "/v1");
  EXPECT_EQ(split_base_url("http://localhost:8080").path, "");
  EXPECT_THROW(split_base_url("localhost:8080"), error);
  EXPECT_EQ(completions_path(""), "/v1/chat/completions");
  EXPECT_EQ(completions_path("/v1"), "/v1/chat/completions");
  EXPECT_EQ(completions_path("/proxy"), "/proxy/v1/chat/completions");
}

TEST(Remote, WireFormat) {
  const ChatRequest req = request({{Role::system, "sys"}, {Role::user, "hi"}}, 0.3);
  const auto body = nlohmann::json::parse(chat_request_body("m1", req));
  EXPECT_EQ(body.at("model"), "m1");
  EXPECT_EQ(body.at("messages").size(), 2u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "system");
  EXPECT_EQ(body.at("messages")[1].at("content"), "hi");
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.3);
  EXPECT_EQ(body.at("n"), 1);
  EXPECT_EQ(chat_reply_text(ok_body("Answer: A")), "Answer: A");
  EXPECT_THROW(chat_reply_text("{}"), error);
}

TEST(Remote, SendsBearerTokenAndParsesReply) {
  std::string auth, model;
  LocalServer srv([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    model = nlohmann::json::parse(req.body).at("model");
    res.set_content(ok_body("Answer: C"), "application/json");
  });
  RemoteChatEndpoint ep(srv.spec(), "secret-key");
  const auto out = run_single(ep, {{Role::user, "q"}}, 0.0);
  EXPECT_EQ(auth, "Bearer secret-key");
  EXPECT_EQ(model, "test-model");
  EXPECT_EQ(out.answer, 2);
  EXPECT_EQ(out.calls[0].attempts, 1);
  EXPECT_GT(out.calls[0].latency_ms, 0.0);
}

TEST(Remote, RetriesServerErrorsAndRateLimits) {
  std::atomic<int> hits = 0;
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    const int n = ++hits;
    if (n == 1) res.status = 500;
    else if (n == 2) res.status = 429;
    else res.set_content(ok_body("Answer: B"), "application/json");
  });
  RemoteChatEndpoint ep(srv.spec(3), "k");
  const auto c = ep.complete(request({{Role::user, "q"}}));
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(c.attempts, 3);
  EXPECT_FALSE(c.failure.has_value());
  EXPECT_EQ(c.text, "Answer: B");
}

TEST(Remote, GivesUpAfterMaxAttempts) {
  std::atomic<int> hits = 0;
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  RemoteChatEndpoint ep(srv.spec(2), "k");
  const auto out = run_single(ep, {{Role::user, "q"}}, 0.0);
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(out.calls[0].failure, "endpoint-error: http 503");
  EXPECT_EQ(out.answer, std::nullopt);
}

TEST(Remote, ClientErrorsAreNotRetried) {
  std::atomic<int> hits = 0;
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  RemoteChatEndpoint ep(srv.spec(4), "k");
  EXPECT_EQ(ep.complete(ChatRequest{}).failure, "endpoint-error: http 401");
  EXPECT_EQ(hits.load(), 1);
}

TEST(Remote, InFlightLimitHolds) {
  std::atomic<int> now = 0, peak = 0;
  LocalServer srv([&](const httplib::Request&, httplib::Response& res) {
    const int n = ++now;
    int p = peak.load();
    while (n > p && !peak.compare_exchange_weak(p, n)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(40));
    --now;
    res.set_content(ok_body("Answer: A"), "application/json");
  });
  auto spec = srv.spec();
  spec.max_in_flight = 2;
  RemoteChatEndpoint ep(spec, "k");
  std::vector<std::jthread> callers;
  for (int i = 0; i < 6; ++i) callers.emplace_back([&] { ep.complete(ChatRequest{}); });
  callers.clear();
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(Remote, MissingCredentials) {
  ::unsetenv(api_key_env);
  EndpointSpec s;
  s.name = "r";
  s.kind = EndpointKind::remote_chat;
  s.base_url = "http://127.0.0.1:9";
  try {
    make_endpoint(s);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), "missing-credentials");
  }
}

TEST(TokenBucket, PacesRequests) {
  TokenBucket bucket(20.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) bucket.acquire();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(secs, 0.24);
  TokenBucket open(0, 1);
  for (int i = 0; i < 1000; ++i) open.acquire();
}
