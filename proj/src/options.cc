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

#include "perturbench/options.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <regex>
#include <set>

#include "perturbench/error.h"
#include "perturbench/rng.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

constexpr std::size_t kDistractors = 4;
constexpr int kMaxAttempts = 1000;

rng::Stream StreamFor(std::uint64_t seed, std::uint64_t salt) {
  return rng::Stream(rng::Key({seed, rng::StageKey(rng::Stage::kOptions), salt}));
}

// Shortest plain rendering: integers without a point, otherwise up to four
// decimals with trailing zeros removed.
std::string PlainNumber(double v) {
  if (std::fabs(v - std::round(v)) < 1e-9) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(v)));
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string Key(std::string_view s) { return ToLowerAscii(NormalizeWhitespace(s)); }

OptionSet Assemble(std::string answer, std::vector<std::string> distractors,
                   rng::Stream& stream) {
  std::vector<std::string> entries = std::move(distractors);
  entries.push_back(std::move(answer));
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  stream.Shuffle(order);
  OptionSet o;
  for (std::size_t i = 0; i < order.size(); ++i) {
    o.entries.push_back(entries[order[i]]);
    if (order[i] == entries.size() - 1) o.answer_index = i;
  }
  return o;
}

// Keeps candidates that differ from everything already accepted.
class Collector {
 public:
  explicit Collector(std::string_view answer) { seen_.insert(Key(answer)); }

  bool Offer(const std::string& candidate) {
    const std::string trimmed = NormalizeWhitespace(candidate);
    if (trimmed.empty() || full()) return false;
    if (!seen_.insert(Key(trimmed)).second) return false;
    items_.push_back(trimmed);
    return true;
  }
  bool full() const { return items_.size() >= kDistractors; }
  std::vector<std::string>& items() { return items_; }

 private:
  std::set<std::string> seen_;
  std::vector<std::string> items_;
};

// ---- numbers ----

double NearMiss(const NumericAnswer& n, rng::Stream& s) {
  const double unit = std::pow(10.0, -n.decimals);
  const double scale = std::max(3.0, std::fabs(n.value) / unit / 2.0);
  const double d = static_cast<double>(
      s.Below(static_cast<std::uint64_t>(std::min(scale, 1e9))) + 1);
  return n.value + (s.Bernoulli(0.5) ? d : -d) * unit;
}

double DigitChange(const NumericAnswer& n, rng::Stream& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", n.decimals, std::fabs(n.value));
  std::string digits = buf;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(digits[i]))) positions.push_back(i);
  }
  const std::size_t at = positions[s.Below(positions.size())];
  char replacement;
  do {
    replacement = static_cast<char>('0' + s.Below(10));
  } while (replacement == digits[at]);
  digits[at] = replacement;
  const double v = std::stod(digits);
  return n.value < 0 ? -v : v;
}

std::string FormatFraction(long long a, long long b) {
  return std::to_string(a) + "/" + std::to_string(b);
}

}  // namespace

std::optional<bool> ParseTruth(std::string_view text) {
  const std::string t = ToLowerAscii(StripPunctuation(Trim(text)));
  if (t == "true" || t == "yes") return true;
  if (t == "false" || t == "no") return false;
  return std::nullopt;
}

std::string NumericAnswer::Format(double v) const {
  std::string out;
  if (v < 0) {
    out += '-';
  } else if (explicit_plus && v > 0) {
    out += '+';
  }
  if (currency) out += '$';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, std::fabs(v));
  out += buf;
  if (percent) out += '%';
  return out;
}

std::optional<NumericAnswer> ParseNumeric(std::string_view text) {
  static const std::regex kFraction(R"(^\s*(-?\d+)\s*/\s*(\d+)\s*$)");
  static const std::regex kNumber(
      R"(^\s*([+-])?\s*(\$)?\s*(\d{1,3}(?:,\d{3})+|\d+)?(\.\d+)?\s*(%)?\s*$)");
  const std::string s(text);
  std::smatch m;
  if (std::regex_match(s, m, kFraction)) {
    const long long a = std::stoll(m[1]);
    const long long b = std::stoll(m[2]);
    if (b == 0) return std::nullopt;
    NumericAnswer n;
    n.value = static_cast<double>(a) / static_cast<double>(b);
    n.fraction = std::make_pair(a, b);
    return n;
  }
  if (!std::regex_match(s, m, kNumber)) return std::nullopt;
  if (!m[3].matched && !m[4].matched) return std::nullopt;
  NumericAnswer n;
  std::string digits = m[3].matched ? m[3].str() : "0";
  digits.erase(std::remove(digits.begin(), digits.end(), ','), digits.end());
  if (m[4].matched) {
    digits += m[4].str();
    n.decimals = static_cast<int>(m[4].length()) - 1;
  }
  n.value = std::stod(digits);
  if (m[1].matched && m[1].str() == "-") n.value = -n.value;
  n.explicit_plus = m[1].matched && m[1].str() == "+";
  n.currency = m[2].matched;
  n.percent = m[5].matched;
  return n;
}

AnswerType RouteAnswerType(AnswerType declared, std::string_view answer) {
  const std::size_t words = Tokenize(answer).size();
  switch (declared) {
    case AnswerType::kMulti:
      if (ParseTruth(answer)) return AnswerType::kTF;
      if (ParseNumeric(answer)) return AnswerType::kNumber;
      return words == 1 ? AnswerType::kWord : AnswerType::kText;
    case AnswerType::kWord:
      return words == 1 ? AnswerType::kWord : AnswerType::kText;
    default:
      return declared;
  }
}

OptionSet GenTf(bool answer, std::uint64_t seed) {
  std::vector<std::size_t> order = {0, 1, 2};
  rng::Stream stream = StreamFor(seed, 0x7f);
  stream.Shuffle(order);
  const std::string canonical[3] = {std::string(kTrueOption),
                                    std::string(kFalseOption),
                                    std::string(kUnableOption)};
  OptionSet o;
  for (std::size_t i = 0; i < 3; ++i) {
    o.entries.push_back(canonical[order[i]]);
    if (order[i] == (answer ? 0u : 1u)) o.answer_index = i;
  }
  return o;
}

OptionSet GenNumber(std::string_view answer, std::uint64_t seed) {
  const std::optional<NumericAnswer> parsed = ParseNumeric(answer);
  if (!parsed) {
    throw Error(ErrorCode::kTypeMismatch,
                "'" + std::string(answer) + "' is not numeric");
  }
  const NumericAnswer& n = *parsed;
  rng::Stream stream = StreamFor(seed, 0x11);
  Collector out(Trim(answer));
  const double unit = std::pow(10.0, -n.decimals);
  auto same_value = [&](double v) { return std::fabs(v - n.value) < unit / 2; };

  if (n.fraction) {
    const auto [a, b] = *n.fraction;
    for (int attempt = 0; attempt < kMaxAttempts && !out.full(); ++attempt) {
      long long na = a;
      long long nb = b;
      const std::uint64_t kind = stream.Below(3);
      const long long d = static_cast<long long>(stream.Below(3)) + 1;
      if (kind == 0) na += stream.Bernoulli(0.5) ? d : -d;
      if (kind == 1) nb += stream.Bernoulli(0.5) ? d : -d;
      if (kind == 2) std::swap(na, nb);
      if (nb <= 0) continue;
      if (static_cast<double>(na) / static_cast<double>(nb) == n.value) continue;
      out.Offer(FormatFraction(na, nb));
    }
    for (long long k = 1; !out.full(); ++k) out.Offer(FormatFraction(a + k, b));
  } else {
    const double weights[4] = {0.4, 0.3, 0.15, 0.15};
    for (int attempt = 0; attempt < kMaxAttempts && !out.full(); ++attempt) {
      double v = n.value;
      switch (stream.Categorical(weights)) {
        case 0: v = NearMiss(n, stream); break;
        case 1: v = DigitChange(n, stream); break;
        case 2:
          v = stream.Bernoulli(0.5) ? n.value * 10 : n.value / 10;
          v = std::round(v / unit) * unit;
          break;
        case 3: v = -n.value; break;
      }
      if (same_value(v)) continue;
      out.Offer(n.Format(v));
    }
    for (int k = 1; !out.full(); ++k) out.Offer(n.Format(n.value + k * unit));
  }
  return Assemble(Trim(answer), std::move(out.items()), stream);
}

OptionSet GenWord(std::string_view answer, std::string_view context,
                  const PosTagger& tagger, const SynonymTable& synonyms,
                  std::uint64_t seed) {
  const std::string target = Trim(answer);
  const std::string target_key = ToLowerAscii(StripPunctuation(target));
  const std::vector<std::string> tokens = Tokenize(context);
  const std::vector<std::string> tags =
      tokens.empty() ? std::vector<std::string>{} : tagger(tokens);

  std::string answer_tag;
  std::vector<std::string> words;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string w = ToLowerAscii(StripPunctuation(tokens[i]));
    words.push_back(w);
    if (answer_tag.empty() && w == target_key) answer_tag = tags[i];
  }
  if (answer_tag.empty()) answer_tag = tagger({target}).front();

  std::vector<std::string> same;
  std::vector<std::string> other;
  std::set<std::string> seen = {target_key};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].empty() || !seen.insert(words[i]).second) continue;
    (tags[i] == answer_tag ? same : other).push_back(words[i]);
  }
  rng::Stream stream = StreamFor(seed, 0x33);
  stream.Shuffle(same);
  stream.Shuffle(other);

  Collector out(target);
  for (const std::string& w : same) out.Offer(w);
  for (const std::string& w : other) out.Offer(w);
  if (const auto* syns = synonyms.Find(target)) {
    for (const std::string& w : *syns) out.Offer(w);
  }
  const auto& vocab = synonyms.vocabulary();
  for (int attempt = 0; attempt < kMaxAttempts && !out.full() && !vocab.empty();
       ++attempt) {
    out.Offer(vocab[stream.Below(vocab.size())]);
  }
  if (!out.full()) {
    throw Error(ErrorCode::kGenerationFailed,
                "not enough distractors for '" + target + "'");
  }
  return Assemble(target, std::move(out.items()), stream);
}

std::vector<Formula> FindFormulas(std::string_view text) {
  static const std::regex kFormula(
      R"((\d+(?:\.\d+)?|\.\d+)(?:\s*[-+*/x]\s*(?:\d+(?:\.\d+)?|\.\d+))+\s*=\s*-?(?:\d+(?:\.\d+)?|\.\d+))");
  static const std::regex kNumber(R"(\d+(?:\.\d+)?|\.\d+)");
  std::vector<Formula> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kFormula);
       it != std::sregex_iterator(); ++it) {
    const std::size_t begin = static_cast<std::size_t>(it->position());
    // A leading minus directly before the span belongs to the first operand
    // only when not preceded by a digit; keep spans digit-initial.
    Formula f;
    f.begin = begin;
    f.end = begin + static_cast<std::size_t>(it->length());
    const std::string body = it->str();
    const std::size_t eq = body.find('=');
    const std::string lhs = body.substr(0, eq);
    std::string rhs = Trim(body.substr(eq + 1));
    for (auto n = std::sregex_iterator(lhs.begin(), lhs.end(), kNumber);
         n != std::sregex_iterator(); ++n) {
      f.operands.push_back(std::stod(n->str()));
      const std::size_t after =
          static_cast<std::size_t>(n->position() + n->length());
      for (std::size_t j = after; j < lhs.size(); ++j) {
        const char c = lhs[j];
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == 'x') {
          f.ops.push_back(c == 'x' ? '*' : c);
          break;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) break;
      }
    }
    if (f.ops.size() + 1 != f.operands.size()) continue;
    f.result = std::stod(rhs[0] == '.' ? "0" + rhs : rhs);
    out.push_back(std::move(f));
  }
  return out;
}

double EvaluateFormula(const std::vector<double>& operands,
                       const std::vector<char>& ops) {
  // Collapse * and / first, then fold + and - left to right.
  std::vector<double> terms = {operands.front()};
  std::vector<char> additive;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const double v = operands[i + 1];
    if (ops[i] == '*') {
      terms.back() *= v;
    } else if (ops[i] == '/') {
      terms.back() = v == 0 ? 0 : terms.back() / v;
    } else {
      additive.push_back(ops[i]);
      terms.push_back(v);
    }
  }
  double total = terms.front();
  for (std::size_t i = 0; i < additive.size(); ++i) {
    total += additive[i] == '+' ? terms[i + 1] : -terms[i + 1];
  }
  return total;
}

namespace {

std::string RenderFormula(const std::vector<double>& operands,
                          const std::vector<char>& ops, double result) {
  std::string out = PlainNumber(operands.front());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    out += ops[i];
    out += PlainNumber(operands[i + 1]);
  }
  return out + "=" + PlainNumber(result);
}

std::string Splice(std::string_view text, const Formula& f,
                   std::string_view replacement) {
  return std::string(text.substr(0, f.begin)) + std::string(replacement) +
         std::string(text.substr(f.end));
}

std::string RandomWord(const SynonymTable& synonyms, rng::Stream& s) {
  const auto& vocab = synonyms.vocabulary();
  return vocab.empty() ? std::string() : vocab[s.Below(vocab.size())];
}

// Means (i): one word deleted, inserted, replaced or swapped with its
// neighbor.
std::string WordEdit(const std::vector<std::string>& words,
                     const SynonymTable& synonyms, rng::Stream& s) {
  std::vector<std::string> w = words;
  const std::size_t n = w.size();
  switch (s.Below(4)) {
    case 0:
      if (n < 2) return {};
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(s.Below(n)));
      break;
    case 1: {
      const std::string extra = RandomWord(synonyms, s);
      if (extra.empty()) return {};
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(s.Below(n + 1)), extra);
      break;
    }
    case 2: {
      const std::size_t i = s.Below(n);
      const auto* syns = synonyms.Find(w[i]);
      const std::string repl = syns && !syns->empty()
                                   ? (*syns)[s.Below(syns->size())]
                                   : RandomWord(synonyms, s);
      if (repl.empty()) return {};
      w[i] = repl;
      break;
    }
    case 3: {
      if (n < 2) return {};
      const std::size_t i = s.Below(n - 1);
      std::swap(w[i], w[i + 1]);
      break;
    }
  }
  return JoinTokens(w);
}

double OperandNearMiss(double v, rng::Stream& s) {
  const bool whole = std::fabs(v - std::round(v)) < 1e-9;
  if (!whole) {
    return std::round((v + (static_cast<double>(s.Below(9)) + 1) / 10.0 *
                               (s.Bernoulli(0.5) ? 1 : -1)) *
                      100) / 100;
  }
  const auto bound = static_cast<std::uint64_t>(std::max(10.0, std::fabs(v) * 2));
  return static_cast<double>(s.Below(bound) + 1);
}

// Means (ii): operands or result changed, or the formula replaced by a
// sibling's formula or by a bare wrong result.
std::string FormulaEdit(std::string_view answer, const std::vector<Formula>& own,
                        const std::vector<std::string>& sibling_formulas,
                        rng::Stream& s) {
  const Formula& f = own[s.Below(own.size())];
  switch (s.Below(4)) {
    case 0: {
      std::vector<double> operands = f.operands;
      bool changed = false;
      for (double& v : operands) {
        if (s.Bernoulli(0.5)) {
          v = OperandNearMiss(v, s);
          changed = true;
        }
      }
      if (!changed) operands.front() = OperandNearMiss(operands.front(), s);
      const double r = EvaluateFormula(operands, f.ops);
      return Splice(answer, f, RenderFormula(operands, f.ops, r));
    }
    case 1: {
      const double d = static_cast<double>(s.Below(5) + 1);
      return Splice(answer, f,
                    RenderFormula(f.operands, f.ops,
                                  f.result + (s.Bernoulli(0.5) ? d : -d)));
    }
    case 2:
      if (sibling_formulas.empty()) return {};
      return Splice(answer, f,
                    sibling_formulas[s.Below(sibling_formulas.size())]);
    default: {
      const double d = static_cast<double>(s.Below(5) + 1);
      return Splice(answer, f, PlainNumber(f.result + (s.Bernoulli(0.5) ? d : -d)));
    }
  }
}

}  // namespace

OptionSet GenText(std::string_view answer,
                  const std::vector<std::string>& sibling_steps,
                  const SynonymTable& synonyms, std::uint64_t seed,
                  double none_rate) {
  const std::string target = NormalizeWhitespace(answer);
  rng::Stream stream = StreamFor(seed, 0x55);
  const bool none_fires = stream.Bernoulli(none_rate);
  const std::vector<std::string> words = Tokenize(target);
  const std::vector<Formula> own = FindFormulas(target);

  std::vector<std::string> sibling_formulas;
  for (const std::string& step : sibling_steps) {
    for (const Formula& f : FindFormulas(step)) {
      sibling_formulas.push_back(
          RenderFormula(f.operands, f.ops, f.result));
    }
  }

  // One pool per means; picked round-robin in seeded order.
  std::vector<std::vector<std::string>> pools(3);
  for (int i = 0; i < 8 && !words.empty(); ++i) {
    pools[0].push_back(WordEdit(words, synonyms, stream));
  }
  if (!own.empty()) {
    for (int i = 0; i < 8; ++i) {
      pools[1].push_back(FormulaEdit(target, own, sibling_formulas, stream));
    }
    pools[2] = sibling_steps;
  }
  for (auto& pool : pools) stream.Shuffle(pool);
  std::vector<std::size_t> order = {0, 1, 2};
  stream.Shuffle(order);

  Collector out(target);
  std::set<std::string> reserved = {Key(kNoneOfTheOthers)};
  auto offer = [&](const std::string& c) {
    if (!reserved.count(Key(c))) out.Offer(c);
  };
  std::vector<std::size_t> cursor(3, 0);
  for (bool progress = true; progress && !out.full();) {
    progress = false;
    for (std::size_t p : order) {
      if (cursor[p] < pools[p].size() && !out.full()) {
        offer(pools[p][cursor[p]++]);
        progress = true;
      }
    }
  }
  for (int attempt = 0; attempt < kMaxAttempts && !out.full() && !words.empty();
       ++attempt) {
    offer(WordEdit(words, synonyms, stream));
  }
  if (!out.full()) {
    throw Error(ErrorCode::kGenerationFailed,
                "not enough distractors for '" + target + "'");
  }
  if (!none_fires) return Assemble(target, std::move(out.items()), stream);
  OptionSet o;
  o.entries = std::move(out.items());
  stream.Shuffle(o.entries);
  o.entries.emplace_back(kNoneOfTheOthers);
  o.answer_index = o.entries.size() - 1;
  return o;
}

std::vector<OrderVariant> OrderVariants(const OptionSet& options,
                                        std::size_t k, std::uint64_t seed) {
  const std::size_t n = options.entries.size();
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= n; ++i) factorial *= i;
  if (k == 0 || k > factorial) {
    throw Error(ErrorCode::kTooManyVariants,
                std::to_string(k) + " orderings requested for " +
                    std::to_string(n) + " options");
  }
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<std::vector<std::size_t>> others;
  std::vector<std::size_t> perm = identity;
  while (std::next_permutation(perm.begin(), perm.end())) others.push_back(perm);
  rng::Stream stream(rng::Key({seed, rng::StageKey(rng::Stage::kOrder)}));
  stream.Shuffle(others);

  std::vector<OrderVariant> out;
  out.push_back({identity, options});
  for (std::size_t i = 0; i + 1 < k; ++i) {
    out.push_back({others[i], RemapAnswer(options, others[i])});
  }
  return out;
}

std::uint64_t PrimitiveSeed(std::uint64_t run_seed, std::string_view id) {
  return rng::Key({run_seed, rng::HashString(id)});
}

namespace {

void FillOptionsImpl(std::vector<DataPrimitive>& primitives,
                     const OptionGenConfig& config, bool parallel) {
  static const SynonymTable kEmpty;
  const SynonymTable& synonyms = config.synonyms ? *config.synonyms : kEmpty;

  // Sibling steps: other answers in the same group, plus a seeded pick of
  // other groups' text answers (sorted by id so input order is irrelevant).
  std::vector<AnswerType> routed(primitives.size());
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::pair<std::string, std::size_t>> text_items;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const DataPrimitive& p = primitives[i];
    routed[i] = RouteAnswerType(p.answer_type, p.answer);
    if (p.group_id) groups[*p.group_id].push_back(i);
    if (routed[i] == AnswerType::kText) text_items.emplace_back(p.id, i);
  }
  std::sort(text_items.begin(), text_items.end());

  const auto n = static_cast<std::ptrdiff_t>(primitives.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    DataPrimitive& p = primitives[i];
    if (p.options) continue;
    try {
      const std::uint64_t seed = PrimitiveSeed(config.seed, p.id);
      switch (routed[i]) {
        case AnswerType::kTF: {
          const auto truth = ParseTruth(p.answer);
          if (!truth) {
            throw Error(ErrorCode::kTypeMismatch,
                        p.id + ": '" + p.answer + "' is not a truth value");
          }
          p.options = GenTf(*truth, seed);
          break;
        }
        case AnswerType::kNumber:
          p.options = GenNumber(p.answer, seed);
          break;
        case AnswerType::kWord: {
          const std::string context =
              (p.passage ? *p.passage + " " : std::string()) + p.question;
          p.options = GenWord(p.answer, context, config.tagger, synonyms, seed);
          break;
        }
        default: {
          std::vector<std::string> siblings;
          std::set<std::string> group_ids;
          if (p.group_id) {
            for (std::size_t j : groups.at(*p.group_id)) {
              group_ids.insert(primitives[j].id);
              if (j != i && routed[j] == AnswerType::kText) {
                siblings.push_back(primitives[j].answer);
              }
            }
          }
          std::vector<std::size_t> foreign;
          for (const auto& [id, j] : text_items) {
            if (j != i && !group_ids.count(id)) foreign.push_back(j);
          }
          rng::Stream pick(rng::Key({seed, 0xF0}));
          for (std::size_t t = 0; t < config.foreign_steps && !foreign.empty();
               ++t) {
            const std::size_t at = pick.Below(foreign.size());
            siblings.push_back(primitives[foreign[at]].answer);
            foreign.erase(foreign.begin() + static_cast<std::ptrdiff_t>(at));
          }
          p.options = GenText(p.answer, siblings, synonyms, seed,
                              config.none_of_the_others_rate);
        }
      }
      const auto violations = ValidatePrimitive(p);
      if (!violations.empty()) {
        throw Error(ErrorCode::kGenerationFailed,
                    p.id + ": " + violations.front().field + ": " +
                        violations.front().rule);
      }
    } catch (...) {
#pragma omp critical(perturbench_options_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void FillOptions(std::vector<DataPrimitive>& primitives,
                 const OptionGenConfig& config) {
  FillOptionsImpl(primitives, config, true);
}

void FillOptionsSerial(std::vector<DataPrimitive>& primitives,
                       const OptionGenConfig& config) {
  FillOptionsImpl(primitives, config, false);
}

}  // namespace perturbench
