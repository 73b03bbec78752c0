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

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>

#include "perturbench/error.h"
#include "perturbench/interpreter.h"
#include "perturbench/rng.h"
#include "perturbench/text.h"

namespace perturbench {

// ---- prompts and query assembly ----

const std::array<PromptVariant, 5>& PromptVariants() {
  static const std::array<PromptVariant, 5> variants = {{
      {0, ""},
      {1, "Complete the description with an appropriate ending: "},
      {2,
       "You must choose the best answer from the following choices marked "
       "(A), (B), (C), (D) or (E)."},
      {3,
       "To answer the following question according to the following "
       "information."},
      {4,
       "Next, I will ask you a series of questions given a description, and "
       "you will have to choose one of several candidate options that you "
       "think is correct."},
  }};
  return variants;
}

const PromptVariant& GetPromptVariant(int id) {
  if (id < 0 || id >= static_cast<int>(PromptVariants().size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "prompt variant " + std::to_string(id) + " outside 0-4");
  }
  return PromptVariants()[static_cast<std::size_t>(id)];
}

std::vector<std::string> QuerySequence::UserMessages() const {
  std::vector<std::string> out;
  if (!preamble.empty()) out.push_back(preamble);
  out.insert(out.end(), questions.begin(), questions.end());
  return out;
}

std::string QuestionMessage(std::string_view question, const OptionSet& options,
                            bool first) {
  return std::string(first ? "The first question is " : "The next question is ") +
         std::string(question) +
         ", choose an answer from the following options: " + options.Render() +
         ".";
}

std::string Preamble(std::string_view prompt,
                     const std::optional<std::string>& passage) {
  const std::string p = Trim(prompt);
  if (!passage || passage->empty()) return p;
  if (p.empty()) return *passage;
  return p + " " + *passage;
}

QuerySequence Assemble(std::span<const DataPrimitive> group,
                       std::string_view prompt, std::string_view condition,
                       std::span<const double> perturbed_fractions) {
  if (group.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty group");
  }
  if (!perturbed_fractions.empty() &&
      perturbed_fractions.size() != group.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "one perturbed fraction per primitive expected");
  }
  const DataPrimitive& head = group.front();
  QuerySequence s;
  s.condition = std::string(condition);
  s.sequence_id = s.condition + "/" + (head.group_id ? *head.group_id : head.id);
  s.preamble = Preamble(prompt, head.passage);
  s.target_text = head.target_text();
  for (std::size_t i = 0; i < group.size(); ++i) {
    const DataPrimitive& p = group[i];
    if (p.passage != head.passage || p.group_id != head.group_id) {
      throw Error(ErrorCode::kGroupInconsistent,
                  p.id + " does not share passage/group with " + head.id);
    }
    if (!p.options) {
      throw Error(ErrorCode::kInvalidArgument, p.id + " has no options");
    }
    s.questions.push_back(QuestionMessage(p.question, *p.options, i == 0));
    QuestionContext ctx;
    ctx.primitive_id = p.id;
    ctx.n_options = p.options->entries.size();
    ctx.gold_index = p.options->answer_index;
    ctx.option_texts = p.options->entries;
    if (!perturbed_fractions.empty()) {
      ctx.perturbed_fraction = perturbed_fractions[i];
    }
    s.items.push_back(std::move(ctx));
  }
  return s;
}

std::vector<QuerySequence> BuildSequences(
    const std::vector<DataPrimitive>& primitives, std::string_view condition,
    const std::optional<std::string>& prompt_override,
    const std::map<std::string, double>& perturbed_fractions) {
  std::vector<std::vector<DataPrimitive>> groups;
  std::map<std::string, std::size_t> slot;
  for (const DataPrimitive& p : primitives) {
    if (p.group_id) {
      auto [it, fresh] = slot.emplace(*p.group_id, groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(p);
    } else {
      groups.push_back({p});
    }
  }
  std::vector<QuerySequence> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    std::vector<double> fractions;
    if (!perturbed_fractions.empty()) {
      for (const DataPrimitive& p : g) {
        auto it = perturbed_fractions.find(p.id);
        fractions.push_back(it == perturbed_fractions.end() ? 0.0 : it->second);
      }
    }
    out.push_back(Assemble(g, prompt_override ? *prompt_override : g.front().prompt,
                           condition, fractions));
  }
  return out;
}

// ---- models ----

std::string ModelRef::Id() const {
  return (kind == Kind::kMock ? "mock:" : "http:") + name;
}

ModelRef ParseModelRef(std::string_view spec) {
  ModelRef ref;
  if (StartsWith(spec, "mock:")) {
    ref.kind = ModelRef::Kind::kMock;
    ref.name = std::string(spec.substr(5));
  } else if (StartsWith(spec, "http:")) {
    ref.kind = ModelRef::Kind::kHttp;
    ref.name = std::string(spec.substr(5));
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "model must be mock:<name> or http:<model-id>, got '" +
                    std::string(spec) + "'");
  }
  if (ref.name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty model name");
  }
  return ref;
}

namespace {

std::optional<MockSpec> BuiltinMock(const std::string& name) {
  MockSpec spec;
  if (name.size() == 10 && StartsWith(name, "constant-") && name[9] >= 'A' &&
      name[9] <= 'F') {
    spec.kind = MockSpec::Kind::kConstant;
    spec.index = static_cast<std::size_t>(name[9] - 'A');
    return spec;
  }
  auto number_after = [&](std::string_view prefix) -> std::optional<double> {
    if (!StartsWith(name, prefix)) return std::nullopt;
    const std::string rest = name.substr(prefix.size());
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (rest.empty() || *end != '\0') return std::nullopt;
    return v;
  };
  if (auto k = number_after("constant:")) {
    if (*k < 0 || *k != static_cast<double>(static_cast<std::size_t>(*k))) {
      return std::nullopt;
    }
    spec.kind = MockSpec::Kind::kConstant;
    spec.index = static_cast<std::size_t>(*k);
    return spec;
  }
  if (auto t = number_after("threshold-flip:")) {
    if (*t < 0 || *t > 1) return std::nullopt;
    spec.kind = MockSpec::Kind::kThresholdFlip;
    spec.threshold = *t;
    return spec;
  }
  if (name == "content-matcher") {
    spec.kind = MockSpec::Kind::kContentMatcher;
    return spec;
  }
  if (name == "digest-chooser") {
    spec.kind = MockSpec::Kind::kDigestChooser;
    return spec;
  }
  return std::nullopt;
}

std::vector<std::string> MatchTokens(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& t : Tokenize(text)) {
    std::string w = ToLowerAscii(StripPunctuation(t));
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

bool ContainsRun(const std::vector<std::string>& hay,
                 const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) !=
         hay.end();
}

}  // namespace

MockRegistry& MockRegistry::Global() {
  static MockRegistry registry;
  return registry;
}

ModelRef MockRegistry::Register(const std::string& name, const MockSpec& spec) {
  std::lock_guard<std::mutex> lock(mu_);
  if (name.empty() || custom_.count(name) || BuiltinMock(name)) {
    throw Error(ErrorCode::kNameTaken, "mock '" + name + "' already exists");
  }
  custom_.emplace(name, spec);
  ModelRef ref;
  ref.kind = ModelRef::Kind::kMock;
  ref.name = name;
  return ref;
}

MockSpec MockRegistry::Resolve(const std::string& name) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = custom_.find(name);
    if (it != custom_.end()) return it->second;
  }
  if (auto spec = BuiltinMock(name)) return *spec;
  throw Error(ErrorCode::kUnknownModel, "no mock named '" + name + "'");
}

std::size_t MockChoice(const MockSpec& spec, const QuerySequence& sequence,
                       std::size_t question, bool* answered) {
  const QuestionContext& ctx = sequence.items.at(question);
  *answered = true;
  switch (spec.kind) {
    case MockSpec::Kind::kConstant:
      return spec.index % ctx.n_options;
    case MockSpec::Kind::kThresholdFlip:
      return ctx.perturbed_fraction < spec.threshold
                 ? ctx.gold_index
                 : (ctx.gold_index + 1) % ctx.n_options;
    case MockSpec::Kind::kDigestChooser:
      return rng::HashString(sequence.target_text) % ctx.n_options;
    case MockSpec::Kind::kContentMatcher: {
      // Longest matching option text wins, ties by text, so the choice does
      // not depend on option order.
      const std::vector<std::string> hay = MatchTokens(sequence.target_text);
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < ctx.option_texts.size(); ++i) {
        const std::string& text = ctx.option_texts[i];
        if (!ContainsRun(hay, MatchTokens(text))) continue;
        if (!best || text.size() > ctx.option_texts[*best].size() ||
            (text.size() == ctx.option_texts[*best].size() &&
             text < ctx.option_texts[*best])) {
          best = i;
        }
      }
      if (!best) {
        *answered = false;
        return 0;
      }
      return *best;
    }
  }
  return 0;
}

std::string MockReply(const MockSpec& spec, const QuerySequence& sequence,
                      std::size_t question) {
  bool answered = false;
  const std::size_t choice = MockChoice(spec, sequence, question, &answered);
  if (!answered) return "None of the given options appear in the description.";
  const QuestionContext& ctx = sequence.items.at(question);
  return std::string("The answer is (") + OptionSet::Label(choice) + ") " +
         ctx.option_texts.at(choice) + ".";
}

// ---- wire format ----

std::string ChatRequestBody(const ModelRef& model,
                            const std::vector<ChatMessage>& messages) {
  Json body;
  body["model"] = model.name;
  Json msgs = Json::array();
  for (const ChatMessage& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  body["temperature"] = model.temperature;
  body["max_tokens"] = model.max_tokens;
  return body.dump();
}

ChatReply ParseChatReply(const std::string& body) {
  try {
    const Json j = Json::parse(body);
    ChatReply reply;
    reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      reply.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      reply.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return reply;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kEndpointError,
                std::string("malformed chat reply: ") + e.what());
  }
}

std::chrono::milliseconds RetryPolicy::DelayBefore(int attempt) const {
  double ms = static_cast<double>(base_delay.count());
  for (int i = 1; i < attempt; ++i) ms *= multiplier;
  ms = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

Sleeper RealSleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

RateLimiter::RateLimiter(double rpm, Sleeper sleeper,
                         std::function<Clock::time_point()> now)
    : sleeper_(std::move(sleeper)), now_(std::move(now)) {
  if (rpm > 0) {
    interval_ = std::chrono::nanoseconds(
        static_cast<std::int64_t>(60e9 / rpm));
  }
}

void RateLimiter::Acquire() {
  if (interval_.count() == 0) return;
  Clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const Clock::time_point now = now_();
    slot = next_ && *next_ > now ? *next_ : now;
    next_ = slot + interval_;
  }
  const auto wait = slot - now_();
  if (wait.count() > 0) {
    sleeper_(std::chrono::ceil<std::chrono::milliseconds>(wait));
  }
}

// ---- cache ----

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 failed");
  }
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    // A crash can leave a torn last line; it is simply refetched.
    const Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.contains("key")) continue;
    entries_[j["key"].get<std::string>()] = {
        j.value("text", ""), j.value("prompt_tokens", std::int64_t{0}),
        j.value("completion_tokens", std::int64_t{0})};
  }
}

std::optional<CachedReply> ResponseCache::Get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::Put(const std::string& key, const CachedReply& reply) {
  std::unique_lock lock(mu_);
  if (!entries_.emplace(key, reply).second) return;
  if (path_.empty()) return;
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path_.string());
  const Json j = {{"key", key},
                  {"text", reply.text},
                  {"prompt_tokens", reply.prompt_tokens},
                  {"completion_tokens", reply.completion_tokens}};
  out << j.dump() << '\n';
  out.flush();
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string CacheKey(const ModelRef& model,
                     const std::vector<ChatMessage>& messages,
                     const QuestionContext* mock_context) {
  Json j;
  j["model"] = model.Id();
  j["temperature"] = model.temperature;
  j["max_tokens"] = model.max_tokens;
  Json msgs = Json::array();
  for (const ChatMessage& m : messages) msgs.push_back({m.role, m.content});
  j["messages"] = std::move(msgs);
  if (mock_context) {
    j["context"] = {{"gold", mock_context->gold_index},
                    {"fraction", mock_context->perturbed_fraction}};
  }
  return Sha256Hex(j.dump());
}

// ---- transcripts ----

Json TranscriptToJson(const Transcript& t) {
  Json answers = Json::array();
  for (const ModelAnswer& a : t.answers) {
    answers.push_back(a.choice ? Json(*a.choice) : Json(nullptr));
  }
  return {{"sequence_id", t.sequence_id},
          {"condition", t.condition},
          {"model", t.model},
          {"primitive_ids", t.primitive_ids},
          {"n_options", t.n_options},
          {"messages", t.messages},
          {"responses", t.responses},
          {"answers", std::move(answers)},
          {"prompt_tokens", t.prompt_tokens},
          {"completion_tokens", t.completion_tokens},
          {"timestamps", t.timestamps}};
}

Transcript TranscriptFromJson(const Json& j) {
  try {
    Transcript t;
    t.sequence_id = j.at("sequence_id").get<std::string>();
    t.condition = j.at("condition").get<std::string>();
    t.model = j.at("model").get<std::string>();
    t.primitive_ids = j.at("primitive_ids").get<std::vector<std::string>>();
    t.n_options = j.at("n_options").get<std::vector<std::size_t>>();
    t.messages = j.at("messages").get<std::vector<std::string>>();
    t.responses = j.at("responses").get<std::vector<std::string>>();
    const Json& answers = j.at("answers");
    for (std::size_t i = 0; i < t.responses.size(); ++i) {
      ModelAnswer a;
      a.raw_text = t.responses[i];
      if (i < answers.size() && !answers[i].is_null()) {
        a.choice = answers[i].get<std::size_t>();
      }
      t.answers.push_back(std::move(a));
    }
    t.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    t.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    t.timestamps = j.value("timestamps", std::vector<std::string>{});
    if (t.responses.size() != t.primitive_ids.size() ||
        t.n_options.size() != t.primitive_ids.size()) {
      throw Error(ErrorCode::kSchemaError,
                  t.sequence_id + ": responses and questions differ in count");
    }
    return t;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("transcript: ") + e.what());
  }
}

// ---- gateway ----

namespace {

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t CountWords(const std::vector<ChatMessage>& messages) {
  std::int64_t n = 0;
  for (const ChatMessage& m : messages) {
    n += static_cast<std::int64_t>(Tokenize(m.content).size());
  }
  return n;
}

}  // namespace

Gateway::Gateway(ModelRef model, GatewayOptions options)
    : model_(std::move(model)),
      options_(std::move(options)),
      cache_(options_.cache_path),
      limiter_(options_.rpm, options_.sleeper) {
  if (options_.concurrency == 0) options_.concurrency = 1;
  if (model_.kind == ModelRef::Kind::kMock) {
    mock_ = MockRegistry::Global().Resolve(model_.name);
    return;
  }
  transport_ = options_.transport;
  if (const char* key = std::getenv(kApiKeyEnv)) token_ = key;
  if (!transport_) {
    if (model_.endpoint.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "http model " + model_.name + " needs an endpoint");
    }
    if (token_.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(kApiKeyEnv) + " is not set");
    }
    transport_ = MakeHttpTransport(model_.endpoint, options_.timeout);
  }
}

ChatReply Gateway::SendWithRetry(const std::string& body,
                                 const std::string& sequence_id) {
  std::optional<int> last_status;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      options_.sleeper(options_.retry.DelayBefore(attempt - 1));
    }
    limiter_.Acquire();
    ++requests_;
    const std::size_t now_in_flight = ++in_flight_;
    if (options_.probe) options_.probe(now_in_flight);
    HttpResponse response;
    bool sent = false;
    try {
      response = transport_->Post(body, token_);
      sent = true;
    } catch (const Error& e) {
      last_error = e.what();
    }
    const std::size_t after = --in_flight_;
    if (options_.probe) options_.probe(after);
    if (!sent) {
      last_status.reset();
      continue;
    }
    if (response.status >= 200 && response.status < 300) {
      return ParseChatReply(response.body);
    }
    last_status = response.status;
    if (response.status != 429 && response.status < 500) break;
  }
  if (last_status) {
    throw Error(ErrorCode::kEndpointError,
                "status " + std::to_string(*last_status) + " for " + sequence_id);
  }
  throw Error(ErrorCode::kTransportError, sequence_id + ": " + last_error);
}

ChatReply Gateway::Complete(const std::vector<ChatMessage>& messages,
                            const QuerySequence& sequence,
                            std::size_t question) {
  const QuestionContext* ctx = mock_ ? &sequence.items[question] : nullptr;
  const std::string key = CacheKey(model_, messages, ctx);
  if (auto hit = cache_.Get(key)) {
    ++cache_hits_;
    return {hit->text, hit->prompt_tokens, hit->completion_tokens};
  }
  ChatReply reply;
  if (mock_) {
    ++requests_;
    reply.text = MockReply(*mock_, sequence, question);
    reply.prompt_tokens = CountWords(messages);
    reply.completion_tokens =
        static_cast<std::int64_t>(Tokenize(reply.text).size());
  } else {
    reply = SendWithRetry(ChatRequestBody(model_, messages), sequence.sequence_id);
  }
  cache_.Put(key, {reply.text, reply.prompt_tokens, reply.completion_tokens});
  return reply;
}

Transcript Gateway::Run(const QuerySequence& sequence) {
  Transcript t;
  t.sequence_id = sequence.sequence_id;
  t.condition = sequence.condition;
  t.model = model_.Id();
  t.messages = sequence.UserMessages();
  std::vector<ChatMessage> history;
  if (!sequence.preamble.empty()) history.push_back({"user", sequence.preamble});
  for (std::size_t q = 0; q < sequence.questions.size(); ++q) {
    const QuestionContext& ctx = sequence.items[q];
    history.push_back({"user", sequence.questions[q]});
    const ChatReply reply = Complete(history, sequence, q);
    history.push_back({"assistant", reply.text});
    t.primitive_ids.push_back(ctx.primitive_id);
    t.n_options.push_back(ctx.n_options);
    t.responses.push_back(reply.text);
    t.answers.push_back(Extract(reply.text, ctx.n_options));
    t.prompt_tokens += reply.prompt_tokens;
    t.completion_tokens += reply.completion_tokens;
    t.timestamps.push_back(UtcNow());
  }
  return t;
}

std::vector<Transcript> Gateway::RunAll(
    const std::vector<QuerySequence>& sequences) {
  std::vector<std::optional<Transcript>> results(sequences.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= sequences.size()) return;
      try {
        results[i] = Run(sequences[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t n_workers =
      std::min(options_.concurrency, std::max<std::size_t>(sequences.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<Transcript> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

GatewayStats Gateway::stats() const {
  return {requests_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace perturbench
