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

#ifndef PERTURBENCH_INGEST_H_
#define PERTURBENCH_INGEST_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "perturbench/json_io.h"
#include "perturbench/types.h"

namespace perturbench {

enum class DataSplit { kTrain, kDev, kTest };

std::string_view SplitName(DataSplit split);

// How one dataset's raw records map onto (passage, question, answer).
//
// Field selectors are dotted paths with optional array steps, e.g.
// "facts", "passage[*][1]", "meta.context[0]". A wildcard collects every
// element; several matches are joined with passage_join.
struct SchemaMapping {
  std::string dataset;
  std::string format = "jsonl";  // jsonl | json | babi
  DataSplit split = DataSplit::kTest;
  AnswerType answer_type = AnswerType::kText;

  std::optional<std::string> passage_path;
  std::string passage_join;
  // When set, each element of this array yields one primitive and the
  // question/answer selectors are resolved relative to that element.
  std::optional<std::string> group_path;
  std::string question_path;
  std::string answer_path;
  std::optional<std::string> provided_options_path;

  // "text" (answer is the gold text), "label" (answer is a letter indexing
  // the provided options) or "socratic_steps" (answer lists
  // "sub-question ** step" lines and a final "#### value").
  std::string answer_format = "text";
  // Passage-less datasets are split into statement and question unless
  // marked non-decomposable.
  bool decomposable = true;
  // Appended to the question after its terminal period is dropped, e.g.
  // ", is it right?".
  std::optional<std::string> question_suffix;
};

// Key/value config, one `key = value` per line; strings may be quoted,
// '#' starts a comment. Throws ParseError on unknown keys.
SchemaMapping ParseSchemaMapping(std::string_view text);
SchemaMapping LoadSchemaMapping(const std::filesystem::path& path);

struct RawRecord {
  Json payload;
  std::size_t source_line = 1;
};

// Reads the file form named by mapping.format. For bAbI text the
// payload of each question is {"story": [...], "question": q, "answer": a}.
std::vector<RawRecord> ReadRawRecords(const std::filesystem::path& path,
                                      const SchemaMapping& mapping);

struct ConvertedItem {
  std::optional<std::string> passage;
  std::string question;
  std::string answer;
  std::optional<std::vector<std::string>> provided_options;
  AnswerType answer_type = AnswerType::kText;
  // Set when several questions share one passage.
  std::optional<std::size_t> group_position;
};

// Throws SchemaError naming the field and source line when a selector does
// not resolve.
std::vector<ConvertedItem> Convert(const RawRecord& record,
                                   const SchemaMapping& mapping);

struct Decomposition {
  std::optional<std::string> passage;
  std::string question;
};

// The final sentence containing '?' (or the final sentence) and anything
// after it becomes the question; preceding sentences become the passage.
// Throws EmptyQuestion on blank input.
Decomposition DecomposeQuestion(std::string_view question);

// Sentence spans after segmentation on . ! ? followed by whitespace or end,
// honoring a small abbreviation list.
std::vector<std::string> SplitSentences(std::string_view text);

// Full conversion: records -> primitives with ids "<dataset>-<line>[-q<k>]".
// Provided options are turned into an OptionSet directly.
std::vector<DataPrimitive> IngestRecords(const std::vector<RawRecord>& records,
                                         const SchemaMapping& mapping,
                                         const std::string& prompt);

// Strips "A)", "(A)", "A." and "A:" style prefixes from a provided option.
std::string StripOptionLabel(std::string_view option);

}  // namespace perturbench

#endif  // PERTURBENCH_INGEST_H_
