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

#ifndef PERTURBENCH_INTERPRETER_H_
#define PERTURBENCH_INTERPRETER_H_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "perturbench/types.h"

namespace perturbench {

// Which rule produced an extraction, in priority order.
enum class MatchClass {
  kParenthesized,  // "(B)"
  kDelimited,      // "B)" anywhere, "B." / "B:" at the start of a line
  kPhrase,         // "answer is B", "option B"
  kRefusal,        // "none of the given options", "unable to"
  kUnmatched,
};
inline constexpr std::size_t kMatchClassCount = 5;

std::string_view MatchClassName(MatchClass c);

struct Extraction {
  ModelAnswer answer;
  MatchClass match = MatchClass::kUnmatched;
};

// Never throws. Labels beyond n_options are ignored; when several distinct
// labels of one class appear, the one closest after an answer cue wins,
// else the first.
Extraction ExtractDetailed(std::string_view response, std::size_t n_options);
ModelAnswer Extract(std::string_view response, std::size_t n_options);

// Running tally of how responses were matched.
struct InterpretStats {
  std::array<std::size_t, kMatchClassCount> counts{};

  void Add(MatchClass c) { ++counts[static_cast<std::size_t>(c)]; }
  std::size_t total() const;
  // Share of responses no rule matched (refusals excluded).
  double UnmatchedRate() const;
};

}  // namespace perturbench

#endif  // PERTURBENCH_INTERPRETER_H_
