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

#ifndef PERTURBENCH_OPTIONS_H_
#define PERTURBENCH_OPTIONS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perturbench/attack.h"
#include "perturbench/tagger.h"
#include "perturbench/types.h"

namespace perturbench {

inline constexpr std::string_view kTrueOption = "True";
inline constexpr std::string_view kFalseOption = "False";
inline constexpr std::string_view kUnableOption = "Unable to determine";
inline constexpr std::string_view kNoneOfTheOthers =
    "None of the other options is correct.";

struct OptionGenConfig {
  std::uint64_t seed = 0;
  std::shared_ptr<const SynonymTable> synonyms;
  PosTagger tagger = BuiltinPosTagger();
  // Chance that a Text item's true answer is replaced by kNoneOfTheOthers.
  double none_of_the_others_rate = 0.2;
  // Other datasets' text answers offered to a Text item as whole-step
  // distractors.
  std::size_t foreign_steps = 3;
};

// Parses "true"/"false"/"yes"/"no" in any case.
std::optional<bool> ParseTruth(std::string_view text);

// A number as it appears in an answer: optional sign and '$', digits with
// thousands commas, decimals, a trailing '%', or a fraction "a/b".
struct NumericAnswer {
  double value = 0.0;
  int decimals = 0;
  bool percent = false;
  bool currency = false;
  bool explicit_plus = false;
  // Set for fractions.
  std::optional<std::pair<long long, long long>> fraction;

  std::string Format(double v) const;
};
std::optional<NumericAnswer> ParseNumeric(std::string_view text);

// Routes a Multi answer: truth words -> TF, numbers -> Number, a single
// token -> Word, anything else -> Text. Other types are returned unchanged
// except Word answers with several tokens, which go to Text.
AnswerType RouteAnswerType(AnswerType declared, std::string_view answer);

// {True, False, Unable to determine} in seeded order.
OptionSet GenTf(bool answer, std::uint64_t seed);

// The answer plus four distinct numeric distractors. Throws TypeMismatch
// when the answer is not numeric.
OptionSet GenNumber(std::string_view answer, std::uint64_t seed);

// The answer plus four context words sharing its POS tag, falling back to
// any context word and then to synonym-table words. Throws
// GenerationFailed when fewer than four candidates exist.
OptionSet GenWord(std::string_view answer, std::string_view context,
                  const PosTagger& tagger, const SynonymTable& synonyms,
                  std::uint64_t seed);

// Arithmetic spans "a op b [op c ...] = r" with op in + - * / (x counts as
// *). Offsets are byte ranges into the text.
struct Formula {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<double> operands;
  std::vector<char> ops;
  double result = 0.0;
};
std::vector<Formula> FindFormulas(std::string_view text);
// Left-to-right with * and / binding tighter than + and -.
double EvaluateFormula(const std::vector<double>& operands,
                       const std::vector<char>& ops);

// Word-edited and formula-altered copies of the answer plus sibling steps;
// with probability none_rate the answer is replaced by kNoneOfTheOthers,
// which is then placed last.
OptionSet GenText(std::string_view answer,
                  const std::vector<std::string>& sibling_steps,
                  const SynonymTable& synonyms, std::uint64_t seed,
                  double none_rate);

// k distinct orderings, the identity first. Throws TooManyVariants when k
// exceeds |entries|!.
struct OrderVariant {
  std::vector<std::size_t> permutation;
  OptionSet options;
};
std::vector<OrderVariant> OrderVariants(const OptionSet& options,
                                        std::size_t k, std::uint64_t seed);

// Per-primitive seed, independent of dataset order.
std::uint64_t PrimitiveSeed(std::uint64_t run_seed, std::string_view id);

// Fills missing option sets in place. Provided options pass through.
// OpenMP-parallel over primitives.
void FillOptions(std::vector<DataPrimitive>& primitives,
                 const OptionGenConfig& config);

// Single-threaded reference; same result as FillOptions.
void FillOptionsSerial(std::vector<DataPrimitive>& primitives,
                       const OptionGenConfig& config);

}  // namespace perturbench

#endif  // PERTURBENCH_OPTIONS_H_
