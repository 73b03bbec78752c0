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

#ifndef PERTURBENCH_TYPES_H_
#define PERTURBENCH_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perturbench {

enum class AnswerType { kTF, kNumber, kWord, kText, kMulti };

std::string_view AnswerTypeName(AnswerType type);
AnswerType ParseAnswerType(std::string_view name);

inline constexpr std::size_t kMinOptions = 3;
inline constexpr std::size_t kMaxOptions = 6;

// Ordered option texts plus the index of the correct one. Labels are derived
// from position: (A), (B), ...
struct OptionSet {
  std::vector<std::string> entries;
  std::size_t answer_index = 0;

  static char Label(std::size_t index) {
    return static_cast<char>('A' + index);
  }
  std::vector<std::string> labels() const;
  const std::string& answer_text() const { return entries.at(answer_index); }

  // "(A) True (B) False (C) Unable to determine"
  std::string Render() const;

  bool operator==(const OptionSet&) const = default;
};

// New position i receives old entry permutation[i]. Throws
// InvalidPermutation unless permutation is a bijection on the indices.
OptionSet RemapAnswer(const OptionSet& options,
                      std::span<const std::size_t> permutation);

std::vector<std::size_t> InversePermutation(
    std::span<const std::size_t> permutation);

struct DataPrimitive {
  std::string id;
  std::string dataset;
  std::string prompt;
  std::optional<std::string> passage;  // nullopt encodes a Null passage
  std::string question;
  // Empty until distractors are generated (or copied from the source).
  std::optional<OptionSet> options;
  // Gold answer text as found in the source record.
  std::string answer;
  AnswerType answer_type = AnswerType::kText;
  std::optional<std::string> group_id;

  // Text the robustness attacks operate on.
  const std::string& target_text() const {
    return passage ? *passage : question;
  }

  bool operator==(const DataPrimitive&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

// Empty iff every primitive and option-set invariant holds. A primitive
// without options is only valid when require_options is false.
std::vector<Violation> ValidatePrimitive(const DataPrimitive& primitive,
                                         bool require_options = true);

// Primitives sharing a group id must share one passage.
std::vector<Violation> ValidateGroups(std::span<const DataPrimitive> items);

enum class PerturbationOp {
  kCharRepeat,
  kCharDelete,
  kCharInsert,
  kWordInsert,
  kWordDelete,
  kWordReplace,
  kVisualReplace,
};

std::string_view PerturbationOpName(PerturbationOp op);
PerturbationOp ParsePerturbationOp(std::string_view name);

// w -> w*. For an insertion the replacement holds the inserted word followed
// by the original, so every record describes the text that stands in for
// one clean word.
struct PerturbationRecord {
  std::size_t word_index = 0;
  std::string original;
  std::optional<std::string> replacement;  // nullopt for deletions
  PerturbationOp op = PerturbationOp::kWordReplace;
  // The operator could not change the word (e.g. deleting from a one letter
  // word); the word is left untouched and does not count as perturbed.
  bool skipped = false;

  bool operator==(const PerturbationRecord&) const = default;
};

enum class AttackMethod {
  kCharRepeat,
  kCharDelete,
  kCharInsert,
  kWordInsert,
  kWordDelete,
  kWordReplace,
  kVisual,
};

std::string_view AttackMethodName(AttackMethod method);  // "word_replace"
AttackMethod ParseAttackMethod(std::string_view name);
bool IsWordLevel(AttackMethod method);

struct AttackConfig {
  AttackMethod method = AttackMethod::kWordReplace;
  double rho = 0.0;
  std::optional<double> visual_ratio;  // Visual only
  std::uint64_t seed = 0;

  // Throws InvalidArgument when rho or visual_ratio break their rules.
  void Validate() const;
  // Stable tag used in file names and reports, e.g. "word_replace@0.3" or
  // "visual@0.5~r0.3".
  std::string ConditionName() const;

  bool operator==(const AttackConfig&) const = default;
};

struct PerturbedSample {
  std::string base_id;
  // Perturbed passage, or perturbed question when the passage is Null.
  std::string perturbed_passage;
  bool question_target = false;
  std::vector<PerturbationRecord> records;
  AttackConfig attack;
  std::uint64_t seed = 0;
  std::size_t clean_word_count = 0;

  // Records that actually changed a word.
  std::size_t PerturbedCount() const;
  double PerturbedFraction() const;

  // The attacked primitive x'; options and answer are copied untouched.
  DataPrimitive Materialize(const DataPrimitive& clean) const;

  // Rebuilds the whitespace-tokenized clean text from the perturbed text
  // and the records. Throws ParseError if they are inconsistent.
  std::string Reconstruct() const;

  bool operator==(const PerturbedSample&) const = default;
};

struct ModelAnswer {
  std::optional<std::size_t> choice;  // nullopt means Unanswered
  std::string raw_text;

  bool answered() const { return choice.has_value(); }
  bool operator==(const ModelAnswer&) const = default;
};

}  // namespace perturbench

#endif  // PERTURBENCH_TYPES_H_
