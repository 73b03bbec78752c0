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

#include "perturbench/attack.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <set>

#include "perturbench/error.h"
#include "perturbench/json_io.h"
#include "perturbench/rng.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

constexpr std::array<double, 3> kCharCountWeights = {0.4, 0.4, 0.2};

std::string LookupKey(std::string_view word) {
  return ToLowerAscii(StripPunctuation(word));
}

char32_t ParseCodePoint(std::string_view hex, std::size_t line_no) {
  if (hex.size() < 4 || hex.size() > 6) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) +
                    ": code point must have 4-6 hex digits");
  }
  char32_t value = 0;
  for (char c : hex) {
    value <<= 4;
    if (c >= '0' && c <= '9') {
      value |= static_cast<char32_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      value |= static_cast<char32_t>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      value |= static_cast<char32_t>(c - 'A' + 10);
    } else {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": bad hex digit");
    }
  }
  if (value > 0x10FFFF) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": code point too large");
  }
  return value;
}

WordOp ToWordOp(AttackMethod m) {
  switch (m) {
    case AttackMethod::kWordInsert: return WordOp::kInsert;
    case AttackMethod::kWordDelete: return WordOp::kDelete;
    default: return WordOp::kReplace;
  }
}

CharOp ToCharOp(AttackMethod m) {
  switch (m) {
    case AttackMethod::kCharRepeat: return CharOp::kRepeat;
    case AttackMethod::kCharDelete: return CharOp::kDelete;
    default: return CharOp::kInsert;
  }
}

PerturbationOp ToPerturbationOp(AttackMethod m) {
  switch (m) {
    case AttackMethod::kCharRepeat: return PerturbationOp::kCharRepeat;
    case AttackMethod::kCharDelete: return PerturbationOp::kCharDelete;
    case AttackMethod::kCharInsert: return PerturbationOp::kCharInsert;
    case AttackMethod::kWordInsert: return PerturbationOp::kWordInsert;
    case AttackMethod::kWordDelete: return PerturbationOp::kWordDelete;
    case AttackMethod::kWordReplace: return PerturbationOp::kWordReplace;
    case AttackMethod::kVisual: return PerturbationOp::kVisualReplace;
  }
  return PerturbationOp::kWordReplace;
}

std::uint64_t WordKey(std::uint64_t seed, std::uint64_t sample_hash,
                      std::size_t index, rng::Stage stage) {
  return rng::Key({seed, sample_hash, static_cast<std::uint64_t>(index),
                   rng::StageKey(stage)});
}

}  // namespace

SynonymTable SynonymTable::Parse(std::string_view tsv) {
  SynonymTable table;
  std::size_t line_no = 0;
  for (const std::string& raw : Split(tsv, '\n')) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "synonym line " + std::to_string(line_no) + " has no tab");
    }
    std::vector<std::string> syns;
    for (const std::string& s : Split(line.substr(tab + 1), ',')) {
      std::string t = Trim(s);
      if (!t.empty()) syns.push_back(std::move(t));
    }
    table.Add(Trim(line.substr(0, tab)), std::move(syns));
  }
  return table;
}

SynonymTable SynonymTable::Load(const std::filesystem::path& path) {
  return Parse(ReadTextFile(path));
}

void SynonymTable::Add(std::string word, std::vector<std::string> synonyms) {
  const std::string key = LookupKey(word);
  if (key.empty()) return;
  std::vector<std::string>& slot = entries_[key];
  std::set<std::string> known(slot.begin(), slot.end());
  for (std::string& s : synonyms) {
    if (ToLowerAscii(s) == key || !known.insert(s).second) continue;
    slot.push_back(s);
  }
  if (std::find(vocabulary_.begin(), vocabulary_.end(), key) ==
      vocabulary_.end()) {
    vocabulary_.push_back(key);
  }
  for (const std::string& s : slot) {
    if (std::find(vocabulary_.begin(), vocabulary_.end(), s) ==
        vocabulary_.end()) {
      vocabulary_.push_back(s);
    }
  }
  if (slot.empty()) entries_.erase(key);
}

const std::vector<std::string>* SynonymTable::Find(
    std::string_view word) const {
  auto it = entries_.find(LookupKey(word));
  return it == entries_.end() ? nullptr : &it->second;
}

HomoglyphTable HomoglyphTable::Parse(std::string_view tsv) {
  HomoglyphTable table;
  std::size_t line_no = 0;
  for (const std::string& raw : Split(tsv, '\n')) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab != 1) {
      throw Error(ErrorCode::kParseError,
                  "homoglyph line " + std::to_string(line_no) +
                      ": expected one source letter then a tab");
    }
    const char source = line[0];
    if (!IsAsciiLetter(source)) {
      throw Error(ErrorCode::kParseError,
                  "homoglyph line " + std::to_string(line_no) +
                      ": source must be an ASCII letter");
    }
    for (const std::string& hex : Split(line.substr(tab + 1), ',')) {
      const char32_t cp = ParseCodePoint(Trim(hex), line_no);
      if (cp == static_cast<char32_t>(source)) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("homoglyph for '") + source +
                        "' maps to itself");
      }
      table.entries_[source].push_back(cp);
    }
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    for (char letter : {c, static_cast<char>(c - 'a' + 'A')}) {
      if (table.entries_[letter].empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("homoglyph table lacks '") + letter + "'");
      }
    }
  }
  return table;
}

HomoglyphTable HomoglyphTable::Load(const std::filesystem::path& path) {
  return Parse(ReadTextFile(path));
}

const std::vector<char32_t>& HomoglyphTable::Find(char letter) const {
  static const std::vector<char32_t> kEmpty;
  auto it = entries_.find(letter);
  return it == entries_.end() ? kEmpty : it->second;
}

std::vector<std::size_t> SelectWords(std::size_t word_count, double rho,
                                     std::uint64_t seed,
                                     std::string_view sample_key) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must lie in [0, 1]");
  }
  std::vector<std::size_t> selected;
  const std::uint64_t sample_hash = rng::HashString(sample_key);
  for (std::size_t i = 0; i < word_count; ++i) {
    rng::Stream stream(WordKey(seed, sample_hash, i, rng::Stage::kSelect));
    const double z = stream.Uniform();
    if (0.0 < z && z < rho) selected.push_back(i);
  }
  return selected;
}

int DrawCharCount(std::uint64_t key) {
  rng::Stream stream(rng::Key({key, 0xC0u}));
  return static_cast<int>(stream.Categorical(kCharCountWeights)) + 1;
}

CharAttackResult CharAttack(std::string_view word, CharOp op,
                            std::uint64_t key) {
  std::vector<std::string> chars = Utf8Chars(word);
  if (chars.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "char attack on empty word");
  }
  rng::Stream stream(key);
  CharAttackResult result;
  switch (op) {
    case CharOp::kRepeat: {
      const int count = DrawCharCount(key);
      const std::size_t pos = stream.Below(chars.size());
      const std::string c = chars[pos];
      for (int i = 0; i < count; ++i) chars[pos] += c;
      result.count = count;
      break;
    }
    case CharOp::kDelete: {
      if (chars.size() == 1) {
        result.word = std::string(word);
        result.skipped = true;
        return result;
      }
      const int drawn = DrawCharCount(key);
      const int count = std::min<int>(drawn, static_cast<int>(chars.size()) - 1);
      for (int i = 0; i < count; ++i) {
        chars.erase(chars.begin() +
                    static_cast<std::ptrdiff_t>(stream.Below(chars.size())));
      }
      result.count = count;
      break;
    }
    case CharOp::kInsert: {
      const std::size_t pos = stream.Below(chars.size() + 1);
      const char c = kInsertAlphabet[stream.Below(kInsertAlphabet.size())];
      chars.insert(chars.begin() + static_cast<std::ptrdiff_t>(pos),
                   std::string(1, c));
      result.count = 1;
      break;
    }
  }
  for (const std::string& c : chars) result.word += c;
  return result;
}

PerturbationRecord WordAttack(std::span<const std::string> words,
                              std::size_t index, WordOp op,
                              std::span<const std::string> passage_vocab,
                              const SynonymTable& synonyms,
                              std::uint64_t key) {
  if (index >= words.size()) {
    throw Error(ErrorCode::kInvalidArgument, "word index out of range");
  }
  PerturbationRecord record;
  record.word_index = index;
  record.original = words[index];
  if (op == WordOp::kDelete) {
    record.op = PerturbationOp::kWordDelete;
    return record;
  }
  record.op = op == WordOp::kInsert ? PerturbationOp::kWordInsert
                                    : PerturbationOp::kWordReplace;

  rng::Stream stream(key);
  const bool from_passage = stream.Bernoulli(0.5);
  const std::vector<std::string>* syns = synonyms.Find(words[index]);
  const bool table_has_word =
      (syns != nullptr && !syns->empty()) || !synonyms.vocabulary().empty();
  std::string fresh;
  auto draw_passage = [&] {
    return passage_vocab[stream.Below(passage_vocab.size())];
  };
  auto draw_table = [&] {
    if (syns != nullptr && !syns->empty()) {
      return (*syns)[stream.Below(syns->size())];
    }
    const auto& vocab = synonyms.vocabulary();
    return vocab[stream.Below(vocab.size())];
  };
  if (passage_vocab.empty() && !table_has_word) {
    throw Error(ErrorCode::kAttackSourceUnavailable,
                "no passage words and no synonym table entries");
  }
  if ((from_passage && !passage_vocab.empty()) || !table_has_word) {
    fresh = draw_passage();
  } else {
    fresh = draw_table();
  }
  record.replacement =
      op == WordOp::kInsert ? fresh + " " + words[index] : fresh;
  return record;
}

CharAttackResult VisualAttack(std::string_view word, double ratio,
                              const HomoglyphTable& table,
                              std::uint64_t key) {
  CharAttackResult result;
  std::vector<std::size_t> letters;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (IsAsciiLetter(word[i])) letters.push_back(i);
  }
  if (letters.empty()) {
    result.word = std::string(word);
    result.skipped = true;
    return result;
  }
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::lround(ratio * static_cast<double>(letters.size()))));
  rng::Stream stream(key);
  stream.Shuffle(letters);
  letters.resize(std::min(k, letters.size()));
  std::sort(letters.begin(), letters.end());

  std::size_t next = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (next < letters.size() && letters[next] == i) {
      const auto& options = table.Find(word[i]);
      if (options.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("no homoglyph for '") + word[i] + "'");
      }
      AppendUtf8(result.word, options[stream.Below(options.size())]);
      ++next;
    } else {
      result.word += word[i];
    }
  }
  result.count = static_cast<int>(letters.size());
  return result;
}

std::vector<std::string> ApplyRecords(
    std::span<const std::string> words,
    std::span<const PerturbationRecord> records) {
  std::map<std::size_t, const PerturbationRecord*> by_index;
  for (const PerturbationRecord& r : records) {
    if (!r.skipped) by_index[r.word_index] = &r;
  }
  std::vector<std::string> out;
  out.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = by_index.find(i);
    if (it == by_index.end()) {
      out.push_back(words[i]);
    } else if (it->second->replacement) {
      for (std::string& t : Tokenize(*it->second->replacement)) {
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

std::string AttackKey(const DataPrimitive& primitive) {
  return primitive.group_id ? "group:" + *primitive.group_id
                            : "id:" + primitive.id;
}

Attacker::Attacker(std::shared_ptr<const SynonymTable> synonyms,
                   std::shared_ptr<const HomoglyphTable> homoglyphs)
    : synonyms_(std::move(synonyms)), homoglyphs_(std::move(homoglyphs)) {
  if (!synonyms_) synonyms_ = std::make_shared<SynonymTable>();
}

PerturbedSample Attacker::Apply(const DataPrimitive& primitive,
                                const AttackConfig& config) const {
  config.Validate();
  if (config.method == AttackMethod::kVisual && !homoglyphs_) {
    throw Error(ErrorCode::kInvalidArgument,
                "visual attack requires a homoglyph table");
  }
  PerturbedSample sample;
  sample.base_id = primitive.id;
  sample.question_target = !primitive.passage.has_value();
  sample.attack = config;
  sample.seed = config.seed;

  const std::vector<std::string> words = Tokenize(primitive.target_text());
  sample.clean_word_count = words.size();
  const std::string key = AttackKey(primitive);
  const std::uint64_t sample_hash = rng::HashString(key);

  for (std::size_t index : SelectWords(words.size(), config.rho, config.seed,
                                       key)) {
    const std::uint64_t op_key =
        WordKey(config.seed, sample_hash, index, rng::Stage::kOperator);
    PerturbationRecord record;
    try {
      if (IsWordLevel(config.method)) {
        record = WordAttack(words, index, ToWordOp(config.method), words,
                            *synonyms_, op_key);
      } else {
        const CharAttackResult r =
            config.method == AttackMethod::kVisual
                ? VisualAttack(words[index], *config.visual_ratio,
                               *homoglyphs_, op_key)
                : CharAttack(words[index], ToCharOp(config.method), op_key);
        record.word_index = index;
        record.original = words[index];
        record.replacement = r.word;
        record.op = ToPerturbationOp(config.method);
        record.skipped = r.skipped;
      }
    } catch (const Error&) {
      // Operator failures mark the word as skipped; the sample goes on.
      record.word_index = index;
      record.original = words[index];
      record.replacement = words[index];
      record.op = ToPerturbationOp(config.method);
      record.skipped = true;
    }
    sample.records.push_back(std::move(record));
  }
  sample.perturbed_passage = JoinTokens(ApplyRecords(words, sample.records));
  return sample;
}

std::vector<PerturbedSample> Attacker::ApplyBatch(
    std::span<const DataPrimitive> primitives,
    const AttackConfig& config) const {
  config.Validate();
  if (config.method == AttackMethod::kVisual && !homoglyphs_) {
    throw Error(ErrorCode::kInvalidArgument,
                "visual attack requires a homoglyph table");
  }
  std::vector<PerturbedSample> out(primitives.size());
  const auto n = static_cast<std::ptrdiff_t>(primitives.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          Apply(primitives[static_cast<std::size_t>(i)], config);
    } catch (...) {
#pragma omp critical(perturbench_attack_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<PerturbedSample> Attacker::ApplyBatchSerial(
    std::span<const DataPrimitive> primitives,
    const AttackConfig& config) const {
  std::vector<PerturbedSample> out;
  out.reserve(primitives.size());
  for (const DataPrimitive& p : primitives) out.push_back(Apply(p, config));
  return out;
}

}  // namespace perturbench
