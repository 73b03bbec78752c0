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

#ifndef PERTURBENCH_ATTACK_H_
#define PERTURBENCH_ATTACK_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perturbench/types.h"

namespace perturbench {

// word -> synonyms, plus a flat vocabulary for random draws.
class SynonymTable {
 public:
  SynonymTable() = default;

  // TSV: word<TAB>syn1,syn2,...  Lines starting with '#' are comments.
  static SynonymTable Parse(std::string_view tsv);
  static SynonymTable Load(const std::filesystem::path& path);

  void Add(std::string word, std::vector<std::string> synonyms);

  // Lookup is case-insensitive and ignores surrounding punctuation.
  const std::vector<std::string>* Find(std::string_view word) const;
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  bool empty() const { return vocabulary_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
  std::vector<std::string> vocabulary_;
};

// ASCII letter -> visually similar code points.
class HomoglyphTable {
 public:
  HomoglyphTable() = default;

  // TSV: source<TAB>codepoint[,codepoint...], code points as 4-6 hex digits.
  // Throws ParseError on malformed lines and InvalidArgument when a letter
  // is missing or maps to itself.
  static HomoglyphTable Parse(std::string_view tsv);
  static HomoglyphTable Load(const std::filesystem::path& path);

  const std::vector<char32_t>& Find(char letter) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<char, std::vector<char32_t>> entries_;
};

enum class CharOp { kRepeat, kDelete, kInsert };

struct CharAttackResult {
  std::string word;
  int count = 0;         // characters affected
  bool skipped = false;  // word left unchanged
};

// Per-word attack probability: word i is attacked iff its draw z satisfies
// 0 < z < rho. Draws are keyed by (seed, sample key, word index).
std::vector<std::size_t> SelectWords(std::size_t word_count, double rho,
                                     std::uint64_t seed,
                                     std::string_view sample_key);

// Count of characters touched by a repeat or delete: 1, 2 or 3 with
// probabilities 0.4, 0.4, 0.2.
int DrawCharCount(std::uint64_t key);

inline constexpr std::string_view kInsertAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789@#%";

CharAttackResult CharAttack(std::string_view word, CharOp op,
                            std::uint64_t key);

enum class WordOp { kInsert, kDelete, kReplace };

// Builds the record for one attacked word. Throws AttackSourceUnavailable
// when a new word is needed and neither the passage nor the table can
// supply one.
PerturbationRecord WordAttack(std::span<const std::string> words,
                              std::size_t index, WordOp op,
                              std::span<const std::string> passage_vocab,
                              const SynonymTable& synonyms, std::uint64_t key);

// Replaces k = max(1, round(ratio * letters)) distinct ASCII letters.
CharAttackResult VisualAttack(std::string_view word, double ratio,
                              const HomoglyphTable& table, std::uint64_t key);

// Applies records to clean tokens, producing the perturbed token list.
std::vector<std::string> ApplyRecords(
    std::span<const std::string> words,
    std::span<const PerturbationRecord> records);

// The auto-attacker. Holds read-only lexical resources; Apply is pure given
// (primitive, config) and safe to call concurrently.
class Attacker {
 public:
  Attacker(std::shared_ptr<const SynonymTable> synonyms,
           std::shared_ptr<const HomoglyphTable> homoglyphs);

  PerturbedSample Apply(const DataPrimitive& primitive,
                        const AttackConfig& config) const;

  // OpenMP-parallel over samples; output order follows input order.
  std::vector<PerturbedSample> ApplyBatch(
      std::span<const DataPrimitive> primitives,
      const AttackConfig& config) const;

  // Single-threaded reference for ApplyBatch.
  std::vector<PerturbedSample> ApplyBatchSerial(
      std::span<const DataPrimitive> primitives,
      const AttackConfig& config) const;

  const SynonymTable& synonyms() const { return *synonyms_; }

 private:
  std::shared_ptr<const SynonymTable> synonyms_;
  std::shared_ptr<const HomoglyphTable> homoglyphs_;
};

// Samples in a group share one passage, so they share one attack stream.
std::string AttackKey(const DataPrimitive& primitive);

}  // namespace perturbench

#endif  // PERTURBENCH_ATTACK_H_
