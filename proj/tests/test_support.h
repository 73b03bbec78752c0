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

// Shared fixtures for tests that need lexical tables or synthetic samples.

#ifndef PERTURBENCH_TESTS_TEST_SUPPORT_H_
#define PERTURBENCH_TESTS_TEST_SUPPORT_H_

#include <memory>
#include <string>

#include "perturbench/attack.h"
#include "perturbench/rng.h"
#include "perturbench/types.h"

namespace perturbench::testing {

inline std::string DataPath(const std::string& rel) {
  return std::string(PERTURBENCH_DATA_DIR) + "/" + rel;
}

inline std::shared_ptr<const SynonymTable> Synonyms() {
  static auto table = std::make_shared<const SynonymTable>(
      SynonymTable::Load(DataPath("synonyms.tsv")));
  return table;
}

inline std::shared_ptr<const HomoglyphTable> Homoglyphs() {
  static auto table = std::make_shared<const HomoglyphTable>(
      HomoglyphTable::Load(DataPath("homoglyphs.tsv")));
  return table;
}

// A primitive whose passage is `words` distinct lowercase tokens, three TF
// style options and gold index `gold`.
inline DataPrimitive SyntheticPrimitive(int index, int words = 100,
                                        std::size_t gold = 0) {
  DataPrimitive p;
  p.id = "syn-" + std::to_string(index);
  p.dataset = "synthetic";
  rng::Stream stream(rng::Key({0x5eedULL, static_cast<std::uint64_t>(index)}));
  std::string passage;
  for (int w = 0; w < words; ++w) {
    if (w) passage += ' ';
    // Position suffix keeps tokens distinct inside one passage.
    for (int c = 0; c < 4; ++c) {
      passage += static_cast<char>('a' + stream.Below(26));
    }
    passage += std::to_string(w);
  }
  p.passage = passage;
  p.question = "Is the statement above consistent?";
  p.answer = "true";
  p.answer_type = AnswerType::kTF;
  p.options = OptionSet{{"True", "False", "Unable to determine"}, gold};
  return p;
}

}  // namespace perturbench::testing

#endif  // PERTURBENCH_TESTS_TEST_SUPPORT_H_
