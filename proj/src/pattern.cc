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

#include "perturbench/pattern.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <set>
#include <sstream>

#include "perturbench/error.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

std::optional<std::string> OptionalTag(const Json& token, const char* key) {
  auto it = token.find(key);
  if (it == token.end() || it->is_null()) return std::nullopt;
  std::string tag = it->get<std::string>();
  if (tag.empty()) return std::nullopt;
  return tag;
}

Error Gap(const std::string& id, const std::string& why) {
  return Error(ErrorCode::kAnnotationGap, id + ": " + why);
}

std::string EscapeXml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Annotation AnnotationFromJson(const Json& j) {
  try {
    Annotation a;
    a.id = j.at("id").get<std::string>();
    std::size_t index = 0;
    for (const Json& t : j.at("tokens")) {
      AnnotatedToken token;
      token.text = t.at("text").get<std::string>();
      token.index = index++;
      token.pos = OptionalTag(t, "pos");
      token.dep = OptionalTag(t, "dep");
      token.phrase = OptionalTag(t, "phrase");
      a.tokens.push_back(std::move(token));
    }
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("annotation: ") + e.what());
  }
}

AnnotationIndex LoadAnnotations(const std::filesystem::path& path) {
  AnnotationIndex index;
  std::size_t line = 0;
  for (const Json& j : ReadJsonLines(path)) {
    ++line;
    Annotation a = AnnotationFromJson(j);
    const std::string id = a.id;
    if (!index.emplace(id, std::move(a)).second) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": duplicate annotation id " + id +
                      " (record " + std::to_string(line) + ")");
    }
  }
  return index;
}

void CheckAlignment(const Annotation& annotation, std::string_view text) {
  const std::vector<std::string> words = Tokenize(text);
  if (words.size() != annotation.tokens.size()) {
    throw Gap(annotation.id, std::to_string(annotation.tokens.size()) +
                                 " annotated tokens for " +
                                 std::to_string(words.size()) + " words");
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (annotation.tokens[i].text != words[i]) {
      throw Gap(annotation.id, "token " + std::to_string(i) + " is '" +
                                   annotation.tokens[i].text + "', text has '" +
                                   words[i] + "'");
    }
  }
}

std::string_view CategoryKindName(CategoryKind kind) {
  switch (kind) {
    case CategoryKind::kPos: return "pos";
    case CategoryKind::kDep: return "dep";
    case CategoryKind::kPhrase: return "phrase";
    case CategoryKind::kPosition: return "position";
  }
  return "pos";
}

CategoryKind ParseCategoryKind(std::string_view name) {
  for (CategoryKind k : {CategoryKind::kPos, CategoryKind::kDep,
                         CategoryKind::kPhrase, CategoryKind::kPosition}) {
    if (CategoryKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kParseError,
              "unknown category kind '" + std::string(name) + "'");
}

std::string PositionCategory(std::size_t index, std::size_t n_tokens) {
  if (index == 0) return "head";
  if (index + 1 == n_tokens) return "tail";
  return "mid-" + std::to_string(10 * index / n_tokens);
}

CategoryProvider::CategoryProvider(
    CategoryKind kind, std::shared_ptr<const AnnotationIndex> sidecar,
    PosTagger tagger)
    : kind_(kind), sidecar_(std::move(sidecar)), tagger_(std::move(tagger)) {
  if (!tagger_) tagger_ = BuiltinPosTagger();
}

std::vector<std::string> CategoryProvider::Categorize(
    const DataPrimitive& primitive) const {
  const std::string& text = primitive.target_text();
  const std::vector<std::string> words = Tokenize(text);
  std::vector<std::string> out;
  out.reserve(words.size());
  if (kind_ == CategoryKind::kPosition) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      out.push_back(PositionCategory(i, words.size()));
    }
    return out;
  }
  if (!sidecar_) {
    if (kind_ != CategoryKind::kPos) {
      throw Gap(primitive.id, std::string(CategoryKindName(kind_)) +
                                  " categories need an annotation sidecar");
    }
    out = tagger_(words);
    if (out.size() != words.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tagger returned " + std::to_string(out.size()) +
                      " tags for " + std::to_string(words.size()) + " tokens");
    }
    return out;
  }
  auto it = sidecar_->find(primitive.id);
  if (it == sidecar_->end()) throw Gap(primitive.id, "no annotation");
  CheckAlignment(it->second, text);
  for (const AnnotatedToken& t : it->second.tokens) {
    const std::optional<std::string>& tag =
        kind_ == CategoryKind::kPos   ? t.pos
        : kind_ == CategoryKind::kDep ? t.dep
                                      : t.phrase;
    out.push_back(tag.value_or(std::string(kUnknownTag)));
  }
  return out;
}

AnalysisSample MakeAnalysisSample(const DataPrimitive& clean,
                                  const PerturbedSample& sample, bool flipped,
                                  const CategoryProvider& provider) {
  AnalysisSample a;
  a.id = clean.id;
  a.flipped = flipped;
  a.categories = provider.Categorize(clean);
  std::set<std::size_t> changed;
  for (const PerturbationRecord& r : sample.records) {
    if (r.skipped) continue;
    if (r.word_index >= a.categories.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  clean.id + ": record index " + std::to_string(r.word_index) +
                      " beyond " + std::to_string(a.categories.size()) +
                      " tokens");
    }
    changed.insert(r.word_index);
  }
  a.perturbed.assign(changed.begin(), changed.end());
  return a;
}

namespace {

std::vector<AnalysisSample> AnalysisSamplesImpl(
    const std::map<std::string, const DataPrimitive*>& clean,
    std::span<const PerturbedSample> samples, const std::vector<bool>& flipped,
    const CategoryProvider& provider, bool parallel) {
  if (flipped.size() != samples.size()) {
    throw Error(ErrorCode::kPairingError,
                std::to_string(samples.size()) + " samples vs " +
                    std::to_string(flipped.size()) + " flip labels");
  }
  std::vector<AnalysisSample> out(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      auto it = clean.find(samples[k].base_id);
      if (it == clean.end()) {
        throw Error(ErrorCode::kPairingError,
                    "no clean primitive for " + samples[k].base_id);
      }
      out[k] = MakeAnalysisSample(*it->second, samples[k], flipped[k], provider);
    } catch (...) {
#pragma omp critical(perturbench_pattern_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

std::vector<AnalysisSample> MakeAnalysisSamples(
    const std::map<std::string, const DataPrimitive*>& clean,
    std::span<const PerturbedSample> samples, const std::vector<bool>& flipped,
    const CategoryProvider& provider) {
  return AnalysisSamplesImpl(clean, samples, flipped, provider, true);
}

std::vector<AnalysisSample> MakeAnalysisSamplesSerial(
    const std::map<std::string, const DataPrimitive*>& clean,
    std::span<const PerturbedSample> samples, const std::vector<bool>& flipped,
    const CategoryProvider& provider) {
  return AnalysisSamplesImpl(clean, samples, flipped, provider, false);
}

std::map<std::string, double> SampleContribution(const AnalysisSample& s) {
  std::map<std::string, double> out;
  if (!s.flipped || s.perturbed.empty()) return out;
  const double weight = 1.0 / static_cast<double>(s.perturbed.size());
  for (std::size_t i : s.perturbed) out[s.categories[i]] += weight;
  return out;
}

FrequencyTable BuildFrequencyTable(std::span<const AnalysisSample> samples) {
  FrequencyTable table;
  for (const AnalysisSample& s : samples) {
    ++table.samples;
    for (const std::string& c : s.categories) table.s.try_emplace(c, 0.0);
    if (!s.flipped) continue;
    ++table.flipped;
    if (s.perturbed.empty()) {
      ++table.zero_g_flips;
      continue;
    }
    for (const auto& [c, v] : SampleContribution(s)) table.s[c] += v;
  }
  return table;
}

std::vector<std::string> CategorySet(std::span<const AnalysisSample> samples) {
  std::set<std::string> all;
  for (const AnalysisSample& s : samples) {
    all.insert(s.categories.begin(), s.categories.end());
  }
  return {all.begin(), all.end()};
}

CategoryVector MakeCategoryVector(const AnalysisSample& sample,
                                  const std::vector<std::string>& categories) {
  std::map<std::string, std::pair<double, double>> counts;  // hit, total
  for (const std::string& c : sample.categories) counts[c].second += 1;
  for (std::size_t i : sample.perturbed) counts[sample.categories[i]].first += 1;
  CategoryVector v;
  v.label = sample.flipped ? 1 : 0;
  v.values.reserve(categories.size());
  for (const std::string& c : categories) {
    auto it = counts.find(c);
    v.values.push_back(it == counts.end() || it->second.second == 0
                           ? 0.0
                           : it->second.first / it->second.second);
  }
  return v;
}

PatternReport AnalyzeCategory(std::span<const AnalysisSample> samples,
                              CategoryKind kind, const std::string& condition,
                              const ForestParams& params) {
  PatternReport report;
  report.kind = kind;
  report.condition = condition;
  report.table = BuildFrequencyTable(samples);
  report.categories = CategorySet(samples);
  if (samples.empty() || report.categories.empty()) {
    report.importance_error = "no samples";
    return report;
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const AnalysisSample& s : samples) {
    CategoryVector v = MakeCategoryVector(s, report.categories);
    rows.push_back(std::move(v.values));
    labels.push_back(v.label);
  }
  try {
    const ForestModel forest = TrainForest(rows, labels, params);
    for (std::size_t j = 0; j < report.categories.size(); ++j) {
      report.importance.push_back(
          {report.categories[j], forest.importances()[j]});
    }
    std::stable_sort(report.importance.begin(), report.importance.end(),
                     [](const CategoryImportance& a, const CategoryImportance& b) {
                       return a.score > b.score;
                     });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateLabels) throw;
    report.importance_error = e.what();
  }
  return report;
}

Json PatternReportToJson(const PatternReport& report) {
  Json s = Json::object();
  for (const auto& [c, v] : report.table.s) s[c] = v;
  Json importance = Json::array();
  for (const CategoryImportance& i : report.importance) {
    importance.push_back({{"category", i.category}, {"score", i.score}});
  }
  Json j = {{"kind", CategoryKindName(report.kind)},
            {"condition", report.condition},
            {"samples", report.table.samples},
            {"flipped", report.table.flipped},
            {"zero_g_flips", report.table.zero_g_flips},
            {"s", std::move(s)},
            {"importance", std::move(importance)}};
  if (!report.importance_error.empty()) {
    j["importance_error"] = report.importance_error;
  }
  return j;
}

std::string ImportanceSvg(const PatternReport& report) {
  constexpr int kBar = 18, kGap = 6, kLabel = 110, kWidth = 360, kTop = 28;
  const int rows = static_cast<int>(report.importance.size());
  const int height = kTop + rows * (kBar + kGap) + 10;
  double top = 0.0;
  for (const CategoryImportance& i : report.importance) top = std::max(top, i.score);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << kLabel + kWidth + 70 << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"4\" y=\"16\">" << EscapeXml(CategoryKindName(report.kind))
      << " importance, " << EscapeXml(report.condition) << "</text>\n";
  int y = kTop;
  for (const CategoryImportance& i : report.importance) {
    const double w = top > 0 ? i.score / top * kWidth : 0.0;
    char value[32];
    std::snprintf(value, sizeof value, "%.3f", i.score);
    svg << "<text x=\"" << kLabel - 6 << "\" y=\"" << y + 13
        << "\" text-anchor=\"end\">" << EscapeXml(i.category) << "</text>"
        << "<rect x=\"" << kLabel << "\" y=\"" << y << "\" width=\"" << w
        << "\" height=\"" << kBar << "\" fill=\"#4a7bb7\"/>"
        << "<text x=\"" << kLabel + w + 4 << "\" y=\"" << y + 13 << "\">"
        << value << "</text>\n";
    y += kBar + kGap;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace perturbench
