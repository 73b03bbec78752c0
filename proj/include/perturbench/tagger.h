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

#ifndef PERTURBENCH_TAGGER_H_
#define PERTURBENCH_TAGGER_H_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace perturbench {

// Tag used whenever a provider has nothing better.
inline constexpr std::string_view kUnknownTag = "X";

// Maps whitespace tokens to one universal POS tag each.
using PosTagger =
    std::function<std::vector<std::string>(const std::vector<std::string>&)>;

// Closed-class lexicon plus suffix heuristics over the universal tagset
// (ADJ ADP ADV AUX CCONJ DET INTJ NOUN NUM PART PRON PROPN PUNCT SCONJ SYM
// VERB X). Surrounding punctuation is ignored; a token that is only
// punctuation is PUNCT.
std::string BuiltinPosTag(std::string_view token, bool sentence_initial);
std::vector<std::string> BuiltinPosTags(const std::vector<std::string>& tokens);

PosTagger BuiltinPosTagger();

}  // namespace perturbench

#endif  // PERTURBENCH_TAGGER_H_
