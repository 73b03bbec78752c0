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

#ifndef PERTURBENCH_GATEWAY_H_
#define PERTURBENCH_GATEWAY_H_

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "perturbench/json_io.h"
#include "perturbench/types.h"

namespace perturbench {

// ---- prompts and query assembly ----

struct PromptVariant {
  int id = 0;
  std::string_view text;
};

inline constexpr int kDefaultPromptId = 4;
const std::array<PromptVariant, 5>& PromptVariants();
// Throws InvalidArgument outside 0-4.
const PromptVariant& GetPromptVariant(int id);

// What a mock needs to know about one question besides the message text.
struct QuestionContext {
  std::string primitive_id;
  std::size_t n_options = 0;
  std::size_t gold_index = 0;
  std::vector<std::string> option_texts;
  // Share of the target text's words that were perturbed (0 when clean).
  double perturbed_fraction = 0.0;
};

struct QuerySequence {
  std::string sequence_id;
  std::string condition;
  // Prompt + passage; empty when both are blank and then not sent.
  std::string preamble;
  // The text attacks act on: the passage, or the question when there is none.
  std::string target_text;
  std::vector<std::string> questions;
  std::vector<QuestionContext> items;

  std::vector<std::string> UserMessages() const;
};

// "The first question is ..., choose an answer from the following options:
// (A) .. (B) ..", with "next" for follow-ups.
std::string QuestionMessage(std::string_view question, const OptionSet& options,
                            bool first);
std::string Preamble(std::string_view prompt,
                     const std::optional<std::string>& passage);

// Throws GroupInconsistent when passages or group ids differ and
// InvalidArgument when a primitive lacks options. perturbed_fractions, when
// given, has one entry per primitive.
QuerySequence Assemble(std::span<const DataPrimitive> group,
                       std::string_view prompt, std::string_view condition,
                       std::span<const double> perturbed_fractions = {});

// Groups primitives by group id (first appearance order; ungrouped items
// alone) and assembles one sequence per group. A prompt override replaces
// each primitive's own prompt.
std::vector<QuerySequence> BuildSequences(
    const std::vector<DataPrimitive>& primitives, std::string_view condition,
    const std::optional<std::string>& prompt_override = std::nullopt,
    const std::map<std::string, double>& perturbed_fractions = {});

// ---- models ----

struct ChatMessage {
  std::string role;  // "user" | "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatReply {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ModelRef {
  enum class Kind { kHttp, kMock };
  Kind kind = Kind::kMock;
  // Mock name (e.g. "threshold-flip:0.3") or remote model id.
  std::string name;
  std::string endpoint;
  double temperature = 0.0;
  int max_tokens = 256;

  // "mock:<name>" or "http:<model-id>".
  std::string Id() const;
};

// Parses "mock:<name>" and "http:<model-id>". Throws InvalidArgument.
ModelRef ParseModelRef(std::string_view spec);

struct MockSpec {
  enum class Kind { kConstant, kContentMatcher, kThresholdFlip, kDigestChooser };
  Kind kind = Kind::kConstant;
  std::size_t index = 0;   // constant
  double threshold = 0.0;  // threshold-flip
};

// Built-in names: "constant-A".."constant-F", "constant:<k>",
// "content-matcher", "threshold-flip:<t>", "digest-chooser".
class MockRegistry {
 public:
  static MockRegistry& Global();

  // Throws NameTaken when the name is registered or a built-in form.
  ModelRef Register(const std::string& name, const MockSpec& spec);
  // Throws UnknownModel.
  MockSpec Resolve(const std::string& name) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, MockSpec> custom_;
};

// Deterministic reply of a mock for one question.
std::string MockReply(const MockSpec& spec, const QuerySequence& sequence,
                      std::size_t question);
std::size_t MockChoice(const MockSpec& spec, const QuerySequence& sequence,
                       std::size_t question, bool* answered);

// ---- transport ----

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws Error(kTransportError) on connection failures.
  virtual HttpResponse Post(const std::string& body,
                            const std::string& bearer_token) = 0;
};

// POSTs JSON to an http(s) URL. Implemented with cpp-httplib.
std::shared_ptr<Transport> MakeHttpTransport(const std::string& url,
                                             std::chrono::seconds timeout);

std::string ChatRequestBody(const ModelRef& model,
                            const std::vector<ChatMessage>& messages);
// Throws EndpointError when the body is not a chat-completions reply.
ChatReply ParseChatReply(const std::string& body);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  double multiplier = 2.0;

  std::chrono::milliseconds DelayBefore(int attempt) const;  // attempt >= 1
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper RealSleeper();

// Requests-per-minute ceiling: consecutive acquisitions are spaced at least
// 60/rpm seconds apart. rpm <= 0 disables the limit.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  RateLimiter(double rpm, Sleeper sleeper,
              std::function<Clock::time_point()> now = Clock::now);
  void Acquire();

 private:
  std::chrono::nanoseconds interval_{0};
  Sleeper sleeper_;
  std::function<Clock::time_point()> now_;
  std::mutex mu_;
  std::optional<Clock::time_point> next_;
};

// ---- cache ----

std::string Sha256Hex(std::string_view data);

struct CachedReply {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

// Content-addressed JSON-lines store. Concurrent reads, serialized appends.
class ResponseCache {
 public:
  // Empty path keeps the cache in memory only.
  explicit ResponseCache(std::filesystem::path path = {});

  std::optional<CachedReply> Get(const std::string& key) const;
  void Put(const std::string& key, const CachedReply& reply);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CachedReply> entries_;
};

std::string CacheKey(const ModelRef& model,
                     const std::vector<ChatMessage>& messages,
                     const QuestionContext* mock_context);

// ---- transcripts and the gateway ----

struct Transcript {
  std::string sequence_id;
  std::string condition;
  std::string model;
  std::vector<std::string> primitive_ids;
  std::vector<std::size_t> n_options;
  std::vector<std::string> messages;  // user turns, preamble first if any
  std::vector<std::string> responses;
  std::vector<ModelAnswer> answers;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::vector<std::string> timestamps;  // one UTC time per response
};

Json TranscriptToJson(const Transcript& t);
Transcript TranscriptFromJson(const Json& j);

struct GatewayOptions {
  std::size_t concurrency = 4;
  double rpm = 0.0;
  RetryPolicy retry;
  std::filesystem::path cache_path;
  std::chrono::seconds timeout{60};
  Sleeper sleeper = RealSleeper();
  // Called with the number of requests in flight after each change.
  std::function<void(std::size_t)> probe;
  // Overrides the HTTP transport (tests).
  std::shared_ptr<Transport> transport;
};

struct GatewayStats {
  std::size_t requests = 0;     // transport or mock invocations
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

class Gateway {
 public:
  // Http models need PERTURBENCH_API_KEY in the environment unless a
  // transport is injected; throws InvalidArgument otherwise.
  Gateway(ModelRef model, GatewayOptions options);

  // Turn by turn with all prior turns resent. Throws TransportError or
  // EndpointError after retries are exhausted.
  Transcript Run(const QuerySequence& sequence);
  // Bounded worker pool; results in input order. The first failure is
  // rethrown after in-flight sequences finish.
  std::vector<Transcript> RunAll(const std::vector<QuerySequence>& sequences);

  GatewayStats stats() const;
  const ModelRef& model() const { return model_; }

 private:
  ChatReply Complete(const std::vector<ChatMessage>& messages,
                     const QuerySequence& sequence, std::size_t question);
  ChatReply SendWithRetry(const std::string& body,
                          const std::string& sequence_id);

  ModelRef model_;
  GatewayOptions options_;
  std::optional<MockSpec> mock_;
  std::shared_ptr<Transport> transport_;
  std::string token_;
  ResponseCache cache_;
  RateLimiter limiter_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

inline constexpr char kApiKeyEnv[] = "PERTURBENCH_API_KEY";

}  // namespace perturbench

#endif  // PERTURBENCH_GATEWAY_H_
