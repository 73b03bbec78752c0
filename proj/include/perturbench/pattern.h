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

#ifndef PERTURBENCH_PATTERN_H_
#define PERTURBENCH_PATTERN_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perturbench/forest.h"
#include "perturbench/json_io.h"
#include "perturbench/tagger.h"
#include "perturbench/types.h"

namespace perturbench {

// One token of the annotation sidecar. Missing tags are nullopt.
struct AnnotatedToken {
  std::string text;
  std::size_t index = 0;
  std::optional<std::string> pos;
  std::optional<std::string> dep;
  std::optional<std::string> phrase;
};

// Sidecar line: {id, tokens: [{text, pos, dep, phrase}]}. Tokens follow the
// whitespace tokenization of the primitive's attack target (the passage, or
// the question when the passage is Null).
struct Annotation {
  std::string id;
  std::vector<AnnotatedToken> tokens;
};

using AnnotationIndex = std::map<std::string, Annotation>;

Annotation AnnotationFromJson(const Json& j);
// Throws ParseError on malformed lines or duplicate ids.
AnnotationIndex LoadAnnotations(const std::filesystem::path& path);

// Throws AnnotationGap naming the id when the annotation's tokens are not
// exactly the whitespace tokens of text.
void CheckAlignment(const Annotation& annotation, std::string_view text);

enum class CategoryKind { kPos, kDep, kPhrase, kPosition };

std::string_view CategoryKindName(CategoryKind kind);  // "pos", ...
CategoryKind ParseCategoryKind(std::string_view name);

// "head" for the first token, "tail" for the last, otherwise "mid-k" with
// k = floor(10 * index / n_tokens). A single token is "head".
std::string PositionCategory(std::size_t index, std::size_t n_tokens);

// Assigns exactly one category to every token of a primitive's target text.
class CategoryProvider {
 public:
  // pos uses the sidecar when one is given and the tagger otherwise (the
  // built-in tagger when tagger is empty). dep and phrase need the sidecar.
  explicit CategoryProvider(
      CategoryKind kind,
      std::shared_ptr<const AnnotationIndex> sidecar = nullptr,
      PosTagger tagger = {});

  // Throws AnnotationGap when the sample is not covered or misaligned.
  std::vector<std::string> Categorize(const DataPrimitive& primitive) const;
  CategoryKind kind() const { return kind_; }

 private:
  CategoryKind kind_;
  std::shared_ptr<const AnnotationIndex> sidecar_;
  PosTagger tagger_;
};

// A perturbed sample reduced to what the analysis needs.
struct AnalysisSample {
  std::string id;
  std::vector<std::string> categories;  // one per clean token
  std::vector<std::size_t> perturbed;   // distinct changed token indices
  bool flipped = false;
};

AnalysisSample MakeAnalysisSample(const DataPrimitive& clean,
                                  const PerturbedSample& sample, bool flipped,
                                  const CategoryProvider& provider);

// OpenMP-parallel over samples. clean is looked up by sample.base_id;
// flipped[i] belongs to samples[i].
std::vector<AnalysisSample> MakeAnalysisSamples(
    const std::map<std::string, const DataPrimitive*>& clean,
    std::span<const PerturbedSample> samples, const std::vector<bool>& flipped,
    const CategoryProvider& provider);

// Single-threaded reference for MakeAnalysisSamples.
std::vector<AnalysisSample> MakeAnalysisSamplesSerial(
    const std::map<std::string, const DataPrimitive*>& clean,
    std::span<const PerturbedSample> samples, const std::vector<bool>& flipped,
    const CategoryProvider& provider);

// Contribution of one sample to s_l: 1/G(x) per perturbed token of category
// l, G(x) the number of perturbed tokens. Empty unless flipped with G > 0.
std::map<std::string, double> SampleContribution(const AnalysisSample& s);

struct FrequencyTable {
  std::map<std::string, double> s;
  std::size_t samples = 0;
  std::size_t flipped = 0;
  std::size_t zero_g_flips = 0;  // flipped with nothing perturbed; skipped
};

FrequencyTable BuildFrequencyTable(std::span<const AnalysisSample> samples);

// Sorted union of categories seen in the samples.
std::vector<std::string> CategorySet(std::span<const AnalysisSample> samples);

struct CategoryVector {
  std::vector<double> values;  // aligned with the category list
  int label = 0;               // 1 iff the answer flipped
};

// Component j is (perturbed tokens of category j) / (tokens of category j),
// 0 when the sample has no token of that category.
CategoryVector MakeCategoryVector(const AnalysisSample& sample,
                                  const std::vector<std::string>& categories);

struct CategoryImportance {
  std::string category;
  double score = 0.0;
};

struct PatternReport {
  CategoryKind kind = CategoryKind::kPos;
  std::string condition;
  FrequencyTable table;
  std::vector<std::string> categories;
  // Sorted by score, highest first. Empty with importance_error set when the
  // forest could not be trained (e.g. every sample flipped).
  std::vector<CategoryImportance> importance;
  std::string importance_error;
};

PatternReport AnalyzeCategory(std::span<const AnalysisSample> samples,
                              CategoryKind kind, const std::string& condition,
                              const ForestParams& params);

Json PatternReportToJson(const PatternReport& report);

// Horizontal bar chart of the importance ranking.
std::string ImportanceSvg(const PatternReport& report);

}  // namespace perturbench

#endif  // PERTURBENCH_PATTERN_H_
