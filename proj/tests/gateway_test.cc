//
// Copyright 2026 The Perturbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "perturbench/gateway.h"

#include <atomic>
#include <filesystem>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "gtest/gtest.h"
#include "httplib.h"
#include "perturbench/error.h"
#include "perturbench/interpreter.h"
#include "perturbench/json_io.h"
#include "perturbench/rng.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

using std::chrono::milliseconds;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

constexpr char kGroundhogPassage[] =
    "Groundhog Day relies on a groundhog seeing their shadow.Antarctica has an "
    "irregular sun pattern and some days have no sun rise or 24 hour "
    "sunlight.Antarctica has temperatures can range from -10C to "
    "-60C.Groundhogs live in forests or woodlands with plenty of sunlight.";

DataPrimitive Groundhog() {
  DataPrimitive p;
  p.id = "strategyqa-1";
  p.dataset = "strategyqa";
  p.prompt = std::string(GetPromptVariant(4).text);
  p.passage = kGroundhogPassage;
  p.question = "Is Antarctica a good location for Groundhog Day?";
  p.answer = "false";
  p.answer_type = AnswerType::kTF;
  p.options = OptionSet{{"True", "False", "Unable to determine"}, 1};
  return p;
}

std::vector<DataPrimitive> NoahGroup() {
  const std::string passage =
      "In a class of 25 students , 8 received a grade of A.";
  std::vector<DataPrimitive> g(3);
  const char* questions[] = {"How many students are there?",
                             "How many students get A points?",
                             "What percentage of students get A's?"};
  const OptionSet options[] = {
      {{"25 educatee students", "25 students", "8", "24 students"}, 1},
      {{"25 students", "7", "8", "nameless 8 unknown"}, 2},
      {{"true", "false", "Unable to determine"}, 1}};
  for (int i = 0; i < 3; ++i) {
    g[i].id = "noahqa-1-q" + std::to_string(i);
    g[i].prompt = "";
    g[i].passage = passage;
    g[i].question = questions[i];
    g[i].options = options[i];
    g[i].group_id = "noahqa-1";
  }
  return g;
}

TEST(PromptTest, BundledVariantsAreExact) {
  ASSERT_EQ(PromptVariants().size(), 5u);
  EXPECT_EQ(GetPromptVariant(0).text, "");
  EXPECT_EQ(GetPromptVariant(1).text,
            "Complete the description with an appropriate ending: ");
  EXPECT_EQ(GetPromptVariant(2).text,
            "You must choose the best answer from the following choices marked "
            "(A), (B), (C), (D) or (E).");
  EXPECT_EQ(GetPromptVariant(3).text,
            "To answer the following question according to the following "
            "information.");
  EXPECT_EQ(GetPromptVariant(4).text,
            "Next, I will ask you a series of questions given a description, "
            "and you will have to choose one of several candidate options that "
            "you think is correct.");
  EXPECT_EQ(CodeOf([] { GetPromptVariant(5); }), ErrorCode::kInvalidArgument);
}

TEST(AssembleTest, StrategyQaTwoQuerySequence) {
  const DataPrimitive p = Groundhog();
  const QuerySequence s = Assemble({&p, 1}, p.prompt, "clean");
  const auto messages = s.UserMessages();
  ASSERT_EQ(messages.size(), 2u);
  EXPECT_EQ(messages[0], std::string(GetPromptVariant(4).text) + " " +
                             kGroundhogPassage);
  EXPECT_EQ(messages[1],
            "The first question is Is Antarctica a good location for Groundhog "
            "Day?, choose an answer from the following options: (A) True (B) "
            "False (C) Unable to determine.");
  EXPECT_EQ(s.sequence_id, "clean/strategyqa-1");
  EXPECT_EQ(s.items[0].gold_index, 1u);
}

TEST(AssembleTest, NoahQaGroupHasFourMessages) {
  const auto g = NoahGroup();
  const QuerySequence s = Assemble(g, "", "clean");
  const auto messages = s.UserMessages();
  ASSERT_EQ(messages.size(), 4u);
  EXPECT_EQ(messages[0], "In a class of 25 students , 8 received a grade of A.");
  EXPECT_TRUE(StartsWith(messages[1], "The first question is How many"));
  EXPECT_TRUE(StartsWith(messages[2], "The next question is How many students get"));
  EXPECT_TRUE(StartsWith(messages[3], "The next question is What percentage"));
  EXPECT_EQ(s.sequence_id, "clean/noahqa-1");
}

TEST(AssembleTest, BlankPromptAndNullPassage) {
  DataPrimitive p = Groundhog();
  EXPECT_EQ(Assemble({&p, 1}, "", "c").preamble, kGroundhogPassage);
  p.passage.reset();
  const QuerySequence s = Assemble({&p, 1}, "", "c");
  EXPECT_TRUE(s.preamble.empty());
  EXPECT_EQ(s.UserMessages().size(), 1u);
  EXPECT_EQ(s.target_text, p.question);
  EXPECT_EQ(Assemble({&p, 1}, "Answer this.", "c").preamble, "Answer this.");
}

TEST(AssembleTest, MixedPassagesRejected) {
  auto g = NoahGroup();
  g[2].passage = "Something else.";
  EXPECT_EQ(CodeOf([&] { Assemble(g, "", "c"); }),
            ErrorCode::kGroupInconsistent);
  auto h = NoahGroup();
  h[1].options.reset();
  EXPECT_EQ(CodeOf([&] { Assemble(h, "", "c"); }),
            ErrorCode::kInvalidArgument);
}

TEST(AssembleTest, BuildSequencesGroupsInFirstAppearanceOrder) {
  auto g = NoahGroup();
  const DataPrimitive single = Groundhog();
  std::vector<DataPrimitive> mixed = {g[0], single, g[1], g[2]};
  const auto seqs = BuildSequences(mixed, "clean", std::string(""),
                                   {{"noahqa-1-q1", 0.5}});
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(seqs[0].questions.size(), 3u);
  EXPECT_EQ(seqs[0].items[1].perturbed_fraction, 0.5);
  EXPECT_EQ(seqs[0].items[0].perturbed_fraction, 0.0);
  EXPECT_EQ(seqs[1].items[0].primitive_id, "strategyqa-1");
  EXPECT_EQ(seqs[1].preamble, kGroundhogPassage);
}

TEST(ModelRefTest, Parse) {
  const ModelRef m = ParseModelRef("mock:threshold-flip:0.3");
  EXPECT_EQ(m.kind, ModelRef::Kind::kMock);
  EXPECT_EQ(m.name, "threshold-flip:0.3");
  EXPECT_EQ(m.Id(), "mock:threshold-flip:0.3");
  EXPECT_EQ(ParseModelRef("http:gpt-3.5-turbo").kind, ModelRef::Kind::kHttp);
  EXPECT_EQ(CodeOf([] { ParseModelRef("gpt"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ParseModelRef("mock:"); }), ErrorCode::kInvalidArgument);
}

TEST(MockRegistryTest, RegisterResolveAndCollisions) {
  MockRegistry registry;
  MockSpec spec;
  spec.kind = MockSpec::Kind::kConstant;
  spec.index = 2;
  const ModelRef ref = registry.Register("always-c", spec);
  EXPECT_EQ(ref.Id(), "mock:always-c");
  EXPECT_EQ(registry.Resolve("always-c").index, 2u);
  EXPECT_EQ(CodeOf([&] { registry.Register("always-c", spec); }),
            ErrorCode::kNameTaken);
  EXPECT_EQ(CodeOf([&] { registry.Register("constant-A", spec); }),
            ErrorCode::kNameTaken);
  EXPECT_EQ(CodeOf([&] { registry.Resolve("nope"); }), ErrorCode::kUnknownModel);
  EXPECT_EQ(CodeOf([&] { registry.Resolve("threshold-flip:2"); }),
            ErrorCode::kUnknownModel);
  EXPECT_EQ(registry.Resolve("constant-B").index, 1u);
  EXPECT_DOUBLE_EQ(registry.Resolve("threshold-flip:0.35").threshold, 0.35);
}

QuerySequence Single(double fraction) {
  const DataPrimitive p = Groundhog();
  const double f[] = {fraction};
  return Assemble({&p, 1}, p.prompt, "c", f);
}

std::size_t Choice(const std::string& mock, const QuerySequence& s) {
  const MockSpec spec = MockRegistry::Global().Resolve(mock);
  const auto a = Extract(MockReply(spec, s, 0), s.items[0].n_options);
  EXPECT_TRUE(a.answered());
  return a.choice.value_or(99);
}

TEST(MockTest, ConstantAndThresholdFlip) {
  EXPECT_EQ(Choice("constant-A", Single(0)), 0u);
  EXPECT_EQ(Choice("constant:2", Single(0)), 2u);
  EXPECT_EQ(Choice("threshold-flip:0.3", Single(0.0)), 1u);
  EXPECT_EQ(Choice("threshold-flip:0.3", Single(0.4)), 2u);
  EXPECT_EQ(Choice("threshold-flip:0.3", Single(0.3)), 2u);
}

TEST(MockTest, DigestChooserDependsOnTargetOnly) {
  QuerySequence a = Single(0);
  QuerySequence b = Single(0.9);
  EXPECT_EQ(Choice("digest-chooser", a), Choice("digest-chooser", b));
  a.target_text += "x";
  const MockSpec spec = MockRegistry::Global().Resolve("digest-chooser");
  bool answered = false;
  EXPECT_EQ(MockChoice(spec, a, 0, &answered),
            rng::HashString(a.target_text) % 3);
}

TEST(MockTest, ContentMatcherIgnoresOrder) {
  DataPrimitive p = Groundhog();
  p.passage = "The capital of France is Paris and it is large.";
  p.options = OptionSet{{"Rome", "Paris", "Berlin", "large city"}, 1};
  const MockSpec spec = MockRegistry::Global().Resolve("content-matcher");
  const std::vector<std::vector<std::size_t>> perms = {
      {0, 1, 2, 3}, {3, 2, 1, 0}, {1, 0, 3, 2}, {2, 3, 0, 1}};
  for (const auto& perm : perms) {
    DataPrimitive q = p;
    q.options = RemapAnswer(*p.options, perm);
    const QuerySequence s = Assemble({&q, 1}, "", "c");
    bool answered = false;
    const std::size_t c = MockChoice(spec, s, 0, &answered);
    ASSERT_TRUE(answered);
    EXPECT_EQ(q.options->entries[c], "Paris");
  }
  p.options = OptionSet{{"Rome", "Berlin", "Madrid"}, 0};
  const QuerySequence none = Assemble({&p, 1}, "", "c");
  EXPECT_FALSE(Extract(MockReply(spec, none, 0), 3).answered());
}

TEST(GatewayTest, MockRunAndCacheHits) {
  const auto g = NoahGroup();
  const QuerySequence s = Assemble(g, "", "clean");
  Gateway gw(ParseModelRef("mock:constant-A"), GatewayOptions{});
  const Transcript t = gw.Run(s);
  ASSERT_EQ(t.responses.size(), 3u);
  ASSERT_EQ(t.answers.size(), 3u);
  for (const ModelAnswer& a : t.answers) EXPECT_EQ(a.choice, 0u);
  EXPECT_EQ(t.primitive_ids[2], "noahqa-1-q2");
  EXPECT_EQ(gw.stats().requests, 3u);
  const Transcript again = gw.Run(s);
  EXPECT_EQ(gw.stats().requests, 3u);
  EXPECT_EQ(gw.stats().cache_hits, 3u);
  EXPECT_EQ(again.responses, t.responses);
}

TEST(GatewayTest, PersistentCacheSurvivesRestart) {
  const auto dir = std::filesystem::temp_directory_path() / "pb_gateway_cache";
  std::filesystem::remove_all(dir);
  GatewayOptions options;
  options.cache_path = dir / "cache.jsonl";
  const QuerySequence s = Assemble(NoahGroup(), "", "clean");
  std::vector<std::string> first;
  {
    Gateway gw(ParseModelRef("mock:digest-chooser"), options);
    first = gw.Run(s).responses;
  }
  Gateway gw(ParseModelRef("mock:digest-chooser"), options);
  EXPECT_EQ(gw.Run(s).responses, first);
  EXPECT_EQ(gw.stats().requests, 0u);
  EXPECT_EQ(gw.stats().cache_hits, 3u);
}

TEST(CacheTest, TornLastLineIsIgnored) {
  const auto path = std::filesystem::temp_directory_path() / "pb_torn.jsonl";
  WriteTextFile(path,
                "{\"key\":\"k1\",\"text\":\"hello\",\"prompt_tokens\":1,"
                "\"completion_tokens\":2}\n{\"key\":\"k2\",\"te");
  ResponseCache cache(path);
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_EQ(cache.Get("k1")->text, "hello");
  EXPECT_FALSE(cache.Get("k2").has_value());
}

TEST(CacheTest, Sha256KnownAnswer) {
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const ModelRef m = ParseModelRef("http:x");
  const std::vector<ChatMessage> a = {{"user", "hi"}};
  const std::vector<ChatMessage> b = {{"user", "hi "}};
  EXPECT_NE(CacheKey(m, a, nullptr), CacheKey(m, b, nullptr));
  EXPECT_EQ(CacheKey(m, a, nullptr), CacheKey(m, a, nullptr));
  ModelRef hot = m;
  hot.temperature = 0.7;
  EXPECT_NE(CacheKey(m, a, nullptr), CacheKey(hot, a, nullptr));
}

// Scripted transport: replies from a queue of statuses, records bodies.
class FakeTransport : public Transport {
 public:
  std::vector<int> statuses;  // consumed front to back; 0 = connection error
  std::vector<std::string> bodies;
  std::vector<std::string> tokens;
  std::mutex mu;
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  milliseconds latency{0};

  HttpResponse Post(const std::string& body, const std::string& token) override {
    const int now = ++in_flight;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    if (latency.count()) std::this_thread::sleep_for(latency);
    int status = 200;
    std::size_t turn = 0;
    {
      std::lock_guard<std::mutex> lock(mu);
      bodies.push_back(body);
      tokens.push_back(token);
      if (!statuses.empty()) {
        status = statuses.front();
        statuses.erase(statuses.begin());
      }
      turn = bodies.size();
    }
    --in_flight;
    if (status == 0) throw Error(ErrorCode::kTransportError, "refused");
    const Json reply = {
        {"choices",
         {{{"message",
            {{"role", "assistant"},
             {"content", "The answer is (B) reply " + std::to_string(turn)}}}}}},
        {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 4}}}};
    return {status, status == 200 ? reply.dump() : "{\"error\":\"busy\"}"};
  }
};

GatewayOptions FakeOptions(std::shared_ptr<FakeTransport> fake,
                           std::vector<milliseconds>* sleeps) {
  GatewayOptions o;
  o.transport = fake;
  o.sleeper = [sleeps](milliseconds d) {
    if (sleeps) sleeps->push_back(d);
  };
  return o;
}

TEST(GatewayTest, HttpWireFormatAndContextResend) {
  ::setenv(kApiKeyEnv, "sk-test", 1);
  auto fake = std::make_shared<FakeTransport>();
  ModelRef model = ParseModelRef("http:gpt-3.5-turbo");
  Gateway gw(model, FakeOptions(fake, nullptr));
  const Transcript t = gw.Run(Assemble(NoahGroup(), "", "clean"));
  ASSERT_EQ(fake->bodies.size(), 3u);
  EXPECT_EQ(fake->tokens[0], "sk-test");
  const Json first = Json::parse(fake->bodies[0]);
  EXPECT_EQ(first["model"], "gpt-3.5-turbo");
  EXPECT_EQ(first["temperature"], 0.0);
  EXPECT_EQ(first["max_tokens"], 256);
  ASSERT_EQ(first["messages"].size(), 2u);
  EXPECT_EQ(first["messages"][0]["role"], "user");
  EXPECT_EQ(first["messages"][1]["role"], "user");
  const Json second = Json::parse(fake->bodies[1]);
  ASSERT_EQ(second["messages"].size(), 4u);
  EXPECT_EQ(second["messages"][2]["role"], "assistant");
  EXPECT_EQ(second["messages"][2]["content"], "The answer is (B) reply 1");
  EXPECT_EQ(Json::parse(fake->bodies[2])["messages"].size(), 6u);
  EXPECT_EQ(t.answers[0].choice, 1u);
  EXPECT_EQ(t.prompt_tokens, 30);
  EXPECT_EQ(t.completion_tokens, 12);
  gw.Run(Assemble(NoahGroup(), "", "clean"));
  EXPECT_EQ(fake->bodies.size(), 3u);
}

TEST(GatewayTest, RetriesWithExponentialBackoff) {
  auto fake = std::make_shared<FakeTransport>();
  fake->statuses = {503, 429, 0, 200};
  std::vector<milliseconds> sleeps;
  GatewayOptions o = FakeOptions(fake, &sleeps);
  Gateway gw(ParseModelRef("http:m"), o);
  const DataPrimitive p = Groundhog();
  const Transcript t = gw.Run(Assemble({&p, 1}, "", "c"));
  EXPECT_EQ(t.responses.size(), 1u);
  EXPECT_EQ(gw.stats().retries, 3u);
  EXPECT_EQ(sleeps, (std::vector<milliseconds>{milliseconds(500),
                                               milliseconds(1000),
                                               milliseconds(2000)}));
}

TEST(GatewayTest, ExhaustedRetriesAndClientErrors) {
  const DataPrimitive p = Groundhog();
  const QuerySequence s = Assemble({&p, 1}, "", "c");
  {
    auto fake = std::make_shared<FakeTransport>();
    fake->statuses = std::vector<int>(10, 500);
    Gateway gw(ParseModelRef("http:m"), FakeOptions(fake, nullptr));
    EXPECT_EQ(CodeOf([&] { gw.Run(s); }), ErrorCode::kEndpointError);
    EXPECT_EQ(fake->bodies.size(), 5u);
  }
  {
    auto fake = std::make_shared<FakeTransport>();
    fake->statuses = std::vector<int>(10, 0);
    Gateway gw(ParseModelRef("http:m"), FakeOptions(fake, nullptr));
    EXPECT_EQ(CodeOf([&] { gw.Run(s); }), ErrorCode::kTransportError);
  }
  {
    auto fake = std::make_shared<FakeTransport>();
    fake->statuses = {401};
    Gateway gw(ParseModelRef("http:m"), FakeOptions(fake, nullptr));
    EXPECT_EQ(CodeOf([&] { gw.Run(s); }), ErrorCode::kEndpointError);
    EXPECT_EQ(fake->bodies.size(), 1u);
  }
}

TEST(GatewayTest, RetryDelayIsCapped) {
  RetryPolicy r;
  r.max_delay = milliseconds(3000);
  EXPECT_EQ(r.DelayBefore(1), milliseconds(500));
  EXPECT_EQ(r.DelayBefore(3), milliseconds(2000));
  EXPECT_EQ(r.DelayBefore(4), milliseconds(3000));
  EXPECT_EQ(r.DelayBefore(9), milliseconds(3000));
}

TEST(GatewayTest, ConcurrencyBoundHoldsAndOrderIsKept) {
  auto fake = std::make_shared<FakeTransport>();
  fake->latency = milliseconds(3);
  GatewayOptions o = FakeOptions(fake, nullptr);
  o.concurrency = 3;
  std::atomic<std::size_t> probe_max{0};
  o.probe = [&](std::size_t n) {
    std::size_t seen = probe_max.load();
    while (n > seen && !probe_max.compare_exchange_weak(seen, n)) {
    }
  };
  Gateway gw(ParseModelRef("http:m"), o);
  std::vector<QuerySequence> seqs;
  for (int i = 0; i < 24; ++i) {
    DataPrimitive p = Groundhog();
    p.id = "s" + std::to_string(i);
    seqs.push_back(Assemble({&p, 1}, "", "c"));
  }
  const auto out = gw.RunAll(seqs);
  ASSERT_EQ(out.size(), 24u);
  for (int i = 0; i < 24; ++i) {
    EXPECT_EQ(out[i].primitive_ids[0], "s" + std::to_string(i));
  }
  EXPECT_LE(fake->max_in_flight.load(), 3);
  EXPECT_LE(probe_max.load(), 3u);
  EXPECT_GE(probe_max.load(), 1u);
}

TEST(GatewayTest, FailureInPoolPropagates) {
  auto fake = std::make_shared<FakeTransport>();
  fake->statuses = std::vector<int>(100, 400);
  GatewayOptions o = FakeOptions(fake, nullptr);
  o.concurrency = 2;
  Gateway gw(ParseModelRef("http:m"), o);
  std::vector<QuerySequence> seqs(4, Single(0));
  EXPECT_EQ(CodeOf([&] { gw.RunAll(seqs); }), ErrorCode::kEndpointError);
}

TEST(GatewayTest, HttpModelNeedsEndpointAndKey) {
  ::unsetenv(kApiKeyEnv);
  ModelRef m = ParseModelRef("http:m");
  m.endpoint = "http://127.0.0.1:9";
  EXPECT_EQ(CodeOf([&] { Gateway gw(m, GatewayOptions{}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { Gateway gw(ParseModelRef("mock:zzz"), GatewayOptions{}); }),
            ErrorCode::kUnknownModel);
}

TEST(RateLimiterTest, SpacesRequests) {
  using Clock = RateLimiter::Clock;
  Clock::time_point now{};
  std::vector<milliseconds> waits;
  RateLimiter limiter(
      120, [&](milliseconds d) { waits.push_back(d); now += d; },
      [&] { return now; });
  for (int i = 0; i < 4; ++i) limiter.Acquire();
  EXPECT_EQ(waits, (std::vector<milliseconds>{milliseconds(500),
                                              milliseconds(500),
                                              milliseconds(500)}));
  now += std::chrono::seconds(10);
  limiter.Acquire();
  EXPECT_EQ(waits.size(), 3u);
  RateLimiter off(0, [&](milliseconds) { FAIL(); });
  off.Acquire();
  off.Acquire();
}

TEST(WireTest, MalformedReplyIsEndpointError) {
  EXPECT_EQ(CodeOf([] { ParseChatReply("{\"choices\": []}"); }),
            ErrorCode::kEndpointError);
  EXPECT_EQ(CodeOf([] { ParseChatReply("not json"); }),
            ErrorCode::kEndpointError);
  EXPECT_EQ(ParseChatReply("{\"choices\":[{\"message\":{\"content\":\"(A)\"}}]}")
                .text,
            "(A)");
}

TEST(TranscriptTest, JsonRoundTrip) {
  Gateway gw(ParseModelRef("mock:constant-B"), GatewayOptions{});
  const Transcript t = gw.Run(Assemble(NoahGroup(), "", "clean"));
  const Transcript back = TranscriptFromJson(TranscriptToJson(t));
  EXPECT_EQ(TranscriptToJson(back), TranscriptToJson(t));
  EXPECT_EQ(back.answers[1].choice, 1u);
  EXPECT_EQ(back.answers[1].raw_text, t.responses[1]);
}

TEST(HttpTransportTest, LoopbackChatCompletion) {
  httplib::Server server;
  std::string seen_auth;
  std::string seen_body;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_auth = req.get_header_value("Authorization");
                seen_body = req.body;
                res.set_content(
                    R"({"choices":[{"message":{"role":"assistant","content":"The answer is (C)."}}],"usage":{"prompt_tokens":7,"completion_tokens":5}})",
                    "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv(kApiKeyEnv, "sk-loop", 1);
  ModelRef model = ParseModelRef("http:local-model");
  model.endpoint = "http://127.0.0.1:" + std::to_string(port);
  GatewayOptions o;
  o.sleeper = [](milliseconds) {};
  Gateway gw(model, o);
  const DataPrimitive p = Groundhog();
  const Transcript t = gw.Run(Assemble({&p, 1}, p.prompt, "c"));
  server.stop();
  listener.join();

  EXPECT_EQ(seen_auth, "Bearer sk-loop");
  EXPECT_EQ(Json::parse(seen_body)["model"], "local-model");
  ASSERT_EQ(t.answers.size(), 1u);
  EXPECT_EQ(t.answers[0].choice, 2u);
  EXPECT_EQ(t.prompt_tokens, 7);
}

TEST(HttpTransportTest, RefusedConnectionIsTransportError) {
  auto transport = MakeHttpTransport("http://127.0.0.1:1", std::chrono::seconds(2));
  EXPECT_EQ(CodeOf([&] { transport->Post("{}", ""); }),
            ErrorCode::kTransportError);
  EXPECT_EQ(CodeOf([] { MakeHttpTransport("nohost", std::chrono::seconds(1)); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace perturbench
