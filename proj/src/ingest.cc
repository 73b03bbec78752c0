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

#include "perturbench/ingest.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>

#include "perturbench/error.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

constexpr std::array<std::string_view, 20> kAbbreviations = {
    "mr.",  "mrs.", "ms.", "dr.",  "prof.", "sr.",  "jr.", "st.", "vs.", "etc.",
    "e.g.", "i.e.", "no.", "inc.", "ltd.",  "co.",  "mt.", "u.s.", "approx.",
    "fig."};

struct Step {
  std::string name;
  // -1: no index, -2: wildcard, otherwise the index.
  std::vector<long> indices;
};

std::vector<Step> ParseSelector(std::string_view path) {
  std::vector<Step> steps;
  for (const std::string& part : Split(path, '.')) {
    Step step;
    std::size_t i = 0;
    while (i < part.size() && part[i] != '[') step.name += part[i++];
    while (i < part.size()) {
      const std::size_t close = part.find(']', i);
      if (part[i] != '[' || close == std::string::npos) {
        throw Error(ErrorCode::kParseError,
                    "bad selector '" + std::string(path) + "'");
      }
      const std::string inner = part.substr(i + 1, close - i - 1);
      if (inner == "*") {
        step.indices.push_back(-2);
      } else {
        try {
          step.indices.push_back(std::stol(inner));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParseError,
                      "bad selector index in '" + std::string(path) + "'");
        }
      }
      i = close + 1;
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

void Walk(const Json& node, const std::vector<Step>& steps, std::size_t at,
          std::vector<const Json*>& out) {
  if (at == steps.size()) {
    out.push_back(&node);
    return;
  }
  const Step& step = steps[at];
  std::vector<const Json*> current;
  if (step.name.empty()) {
    current.push_back(&node);
  } else if (node.is_object()) {
    auto it = node.find(step.name);
    if (it != node.end()) current.push_back(&*it);
  } else if (node.is_array() &&
             std::all_of(step.name.begin(), step.name.end(), ::isdigit)) {
    const std::size_t idx = std::stoul(step.name);
    if (idx < node.size()) current.push_back(&node[idx]);
  }
  for (long index : step.indices) {
    std::vector<const Json*> next;
    for (const Json* n : current) {
      if (!n->is_array()) continue;
      if (index == -2) {
        for (const Json& e : *n) next.push_back(&e);
      } else if (index >= 0 && static_cast<std::size_t>(index) < n->size()) {
        next.push_back(&(*n)[static_cast<std::size_t>(index)]);
      }
    }
    current = std::move(next);
  }
  for (const Json* n : current) Walk(*n, steps, at + 1, out);
}

std::vector<const Json*> Resolve(const Json& root, std::string_view path) {
  std::vector<const Json*> out;
  Walk(root, ParseSelector(path), 0, out);
  return out;
}

std::string ScalarText(const Json& j, std::string_view join) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number()) return j.dump();
  if (j.is_null()) return "";
  if (j.is_array()) {
    std::string out;
    bool first = true;
    for (const Json& e : j) {
      if (!first) out += join;
      out += ScalarText(e, join);
      first = false;
    }
    return out;
  }
  return j.dump();
}

std::string ResolveText(const Json& root, const std::string& path,
                        std::string_view join, const char* field,
                        std::size_t line) {
  const std::vector<const Json*> hits = Resolve(root, path);
  if (hits.empty()) {
    throw Error(ErrorCode::kSchemaError,
                std::string(field) + " ('" + path + "') unresolved at line " +
                    std::to_string(line));
  }
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i > 0) out += join;
    out += ScalarText(*hits[i], join);
  }
  return out;
}

std::string Unquote(std::string value) {
  value = Trim(value);
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < value.size(); ++i) {
      if (value[i] == '\\' && i + 2 < value.size()) {
        const char n = value[++i];
        out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else {
        out += value[i];
      }
    }
    return out;
  }
  return value;
}

bool ParseBool(const std::string& v) {
  const std::string lower = ToLowerAscii(v);
  if (lower == "true" || lower == "yes" || lower == "1") return true;
  if (lower == "false" || lower == "no" || lower == "0") return false;
  throw Error(ErrorCode::kParseError, "expected boolean, got '" + v + "'");
}

DataSplit ParseSplit(const std::string& v) {
  if (v == "train") return DataSplit::kTrain;
  if (v == "dev") return DataSplit::kDev;
  if (v == "test") return DataSplit::kTest;
  throw Error(ErrorCode::kParseError, "unknown split '" + v + "'");
}

std::string StripCalculatorAnnotations(std::string_view text) {
  static const std::regex kCalc("<<[^>]*>>");
  return std::regex_replace(std::string(text), kCalc, "");
}

std::string DropTerminalPeriod(std::string text) {
  text = Trim(text);
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

std::vector<std::pair<std::size_t, std::size_t>> SentenceSpans(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t start = 0;
  while (start < text.size() && is_space(text[start])) ++start;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t end = i + 1;
    while (end < text.size() &&
           (text[end] == '"' || text[end] == '\'' || text[end] == ')')) {
      ++end;
    }
    if (end < text.size() && !is_space(text[end])) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      const std::string word = ToLowerAscii(text.substr(w, i + 1 - w));
      const bool abbreviation =
          std::find(kAbbreviations.begin(), kAbbreviations.end(), word) !=
              kAbbreviations.end() ||
          (word.size() == 2 && IsAsciiLetter(word[0]) && end < text.size());
      if (abbreviation) continue;
    }
    spans.emplace_back(start, end);
    start = end;
    while (start < text.size() && is_space(text[start])) ++start;
    i = start == 0 ? 0 : start - 1;
  }
  if (start < text.size()) spans.emplace_back(start, text.size());
  return spans;
}

}  // namespace

std::string_view SplitName(DataSplit split) {
  switch (split) {
    case DataSplit::kTrain: return "train";
    case DataSplit::kDev: return "dev";
    case DataSplit::kTest: return "test";
  }
  return "test";
}

SchemaMapping ParseSchemaMapping(std::string_view text) {
  SchemaMapping m;
  std::size_t line_no = 0;
  for (const std::string& raw : Split(text, '\n')) {
    ++line_no;
    std::string line = Trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "mapping line " + std::to_string(line_no) + " has no '='");
    }
    const std::string key = Trim(line.substr(0, eq));
    std::string value = line.substr(eq + 1);
    // Trailing comments only outside quotes.
    if (Trim(value).rfind('"', 0) != 0) {
      const std::size_t hash = value.find('#');
      if (hash != std::string::npos) value = value.substr(0, hash);
    }
    value = Unquote(value);
    if (key == "dataset") {
      m.dataset = value;
    } else if (key == "format") {
      m.format = value;
    } else if (key == "split") {
      m.split = ParseSplit(value);
    } else if (key == "answer_type") {
      m.answer_type = ParseAnswerType(value);
    } else if (key == "passage_path") {
      m.passage_path = value;
    } else if (key == "passage_join") {
      m.passage_join = value;
    } else if (key == "group_path") {
      m.group_path = value;
    } else if (key == "question_path") {
      m.question_path = value;
    } else if (key == "answer_path") {
      m.answer_path = value;
    } else if (key == "provided_options_path") {
      m.provided_options_path = value;
    } else if (key == "answer_format") {
      m.answer_format = value;
    } else if (key == "decomposable") {
      m.decomposable = ParseBool(value);
    } else if (key == "question_suffix") {
      m.question_suffix = value;
    } else {
      throw Error(ErrorCode::kParseError, "unknown mapping key '" + key + "'");
    }
  }
  if (m.dataset.empty() || m.question_path.empty() || m.answer_path.empty()) {
    throw Error(ErrorCode::kParseError,
                "mapping needs dataset, question_path and answer_path");
  }
  if (m.answer_format != "text" && m.answer_format != "label" &&
      m.answer_format != "socratic_steps") {
    throw Error(ErrorCode::kParseError,
                "unknown answer_format '" + m.answer_format + "'");
  }
  return m;
}

SchemaMapping LoadSchemaMapping(const std::filesystem::path& path) {
  return ParseSchemaMapping(ReadTextFile(path));
}

std::vector<RawRecord> ReadRawRecords(const std::filesystem::path& path,
                                      const SchemaMapping& mapping) {
  std::vector<RawRecord> records;
  if (mapping.format == "jsonl") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (Trim(line).empty()) continue;
      try {
        records.push_back({Json::parse(line), line_no});
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::kParseError, path.string() + ":" +
                                                std::to_string(line_no) +
                                                ": " + e.what());
      }
    }
  } else if (mapping.format == "json") {
    Json doc;
    try {
      doc = Json::parse(ReadTextFile(path));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": expected a top-level array");
    }
    std::size_t n = 0;
    for (const Json& e : doc) records.push_back({e, ++n});
  } else if (mapping.format == "babi") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> story;
    while (std::getline(in, line)) {
      ++line_no;
      line = Trim(line);
      if (line.empty()) continue;
      const std::size_t space = line.find(' ');
      if (space == std::string::npos) {
        throw Error(ErrorCode::kParseError,
                    path.string() + ":" + std::to_string(line_no) +
                        ": expected '<n> <text>'");
      }
      if (line.substr(0, space) == "1") story.clear();
      const std::string body = line.substr(space + 1);
      const std::vector<std::string> fields = Split(body, '\t');
      if (fields.size() >= 2) {
        Json payload = {{"story", story},
                        {"question", Trim(fields[0])},
                        {"answer", Trim(fields[1])}};
        records.push_back({std::move(payload), line_no});
      } else {
        story.push_back(Trim(body));
      }
    }
  } else {
    throw Error(ErrorCode::kParseError,
                "unknown record format '" + mapping.format + "'");
  }
  return records;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& [b, e] : SentenceSpans(text)) {
    out.push_back(Trim(text.substr(b, e - b)));
  }
  return out;
}

Decomposition DecomposeQuestion(std::string_view question) {
  if (Trim(question).empty()) {
    throw Error(ErrorCode::kEmptyQuestion, "question is empty");
  }
  const auto spans = SentenceSpans(question);
  std::size_t chosen = spans.size() - 1;
  for (std::size_t i = spans.size(); i-- > 0;) {
    const auto [b, e] = spans[i];
    if (question.substr(b, e - b).find('?') != std::string_view::npos) {
      chosen = i;
      break;
    }
  }
  Decomposition d;
  const std::size_t qstart = spans[chosen].first;
  d.question = Trim(question.substr(qstart));
  if (chosen > 0) d.passage = Trim(question.substr(0, qstart));
  return d;
}

std::string StripOptionLabel(std::string_view option) {
  static const std::regex kLabel(R"(^\s*\(?[A-Za-z]\s*[\).:]\s*)");
  return Trim(std::regex_replace(std::string(option), kLabel, "",
                                 std::regex_constants::format_first_only));
}

std::vector<ConvertedItem> Convert(const RawRecord& record,
                                   const SchemaMapping& mapping) {
  const Json& root = record.payload;
  const std::size_t line = record.source_line;

  std::optional<std::string> passage;
  if (mapping.passage_path) {
    passage = ResolveText(root, *mapping.passage_path, mapping.passage_join,
                          "passage_path", line);
  }

  std::vector<const Json*> units;
  if (mapping.group_path) {
    const auto groups = Resolve(root, *mapping.group_path);
    if (groups.empty() || !groups.front()->is_array()) {
      throw Error(ErrorCode::kSchemaError,
                  "group_path ('" + *mapping.group_path +
                      "') unresolved at line " + std::to_string(line));
    }
    for (const Json& e : *groups.front()) units.push_back(&e);
  } else {
    units.push_back(&root);
  }

  std::vector<ConvertedItem> out;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const Json& unit = *units[k];
    ConvertedItem item;
    item.passage = passage;
    item.question =
        ResolveText(unit, mapping.question_path, " ", "question_path", line);
    item.answer =
        ResolveText(unit, mapping.answer_path, " ", "answer_path", line);
    item.answer_type = mapping.answer_type;
    if (mapping.provided_options_path) {
      const auto hits = Resolve(unit, *mapping.provided_options_path);
      if (hits.empty()) {
        throw Error(ErrorCode::kSchemaError,
                    "provided_options_path ('" +
                        *mapping.provided_options_path +
                        "') unresolved at line " + std::to_string(line));
      }
      std::vector<std::string> opts;
      for (const Json* h : hits) {
        if (h->is_array()) {
          for (const Json& e : *h) opts.push_back(ScalarText(e, " "));
        } else {
          opts.push_back(ScalarText(*h, " "));
        }
      }
      item.provided_options = std::move(opts);
    }
    if (mapping.group_path) item.group_position = k;
    out.push_back(std::move(item));
  }

  if (!mapping.passage_path) {
    for (ConvertedItem& item : out) {
      if (!mapping.decomposable) continue;
      Decomposition d = DecomposeQuestion(item.question);
      item.passage = d.passage;
      item.question = d.question;
    }
  }

  if (mapping.question_suffix) {
    for (ConvertedItem& item : out) {
      item.question = DropTerminalPeriod(item.question) + *mapping.question_suffix;
    }
  }

  if (mapping.answer_format == "socratic_steps") {
    if (out.size() != 1) {
      throw Error(ErrorCode::kSchemaError,
                  "socratic_steps cannot combine with group_path (line " +
                      std::to_string(line) + ")");
    }
    const ConvertedItem base = out.front();
    out.clear();
    std::string final_value;
    std::size_t position = 0;
    for (const std::string& raw : Split(base.answer, '\n')) {
      const std::string step_line = Trim(raw);
      if (step_line.empty()) continue;
      if (StartsWith(step_line, "####")) {
        final_value = Trim(step_line.substr(4));
        continue;
      }
      const std::size_t sep = step_line.find("**");
      if (sep == std::string::npos) {
        throw Error(ErrorCode::kSchemaError,
                    "step without '**' separator at line " +
                        std::to_string(line));
      }
      ConvertedItem item;
      item.passage = base.passage;
      item.question = Trim(step_line.substr(0, sep));
      item.answer = NormalizeWhitespace(
          StripCalculatorAnnotations(step_line.substr(sep + 2)));
      item.answer_type = AnswerType::kText;
      item.group_position = position++;
      out.push_back(std::move(item));
    }
    if (!final_value.empty()) {
      ConvertedItem item;
      item.passage = base.passage;
      item.question = "The answer to question \"" + base.question + "\" is \"" +
                      final_value + "\", is it right?";
      item.answer = "true";
      item.answer_type = AnswerType::kTF;
      item.group_position = position++;
      out.push_back(std::move(item));
    }
    if (out.empty()) {
      throw Error(ErrorCode::kSchemaError,
                  "no steps found at line " + std::to_string(line));
    }
  }
  return out;
}

namespace {

OptionSet BuildProvidedOptions(const ConvertedItem& item,
                               const SchemaMapping& mapping,
                               std::size_t line) {
  std::vector<std::string> entries;
  for (const std::string& raw : *item.provided_options) {
    entries.push_back(NormalizeWhitespace(StripOptionLabel(raw)));
  }
  std::optional<std::size_t> answer;
  if (mapping.answer_format == "label") {
    const std::string label = Trim(StripPunctuation(item.answer));
    if (label.size() == 1 && IsAsciiLetter(label[0])) {
      const auto idx = static_cast<std::size_t>(
          std::toupper(static_cast<unsigned char>(label[0])) - 'A');
      if (idx < entries.size()) answer = idx;
    }
  } else {
    const std::string want = ToLowerAscii(NormalizeWhitespace(item.answer));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (ToLowerAscii(entries[i]) == want) {
        answer = i;
        break;
      }
    }
  }
  if (!answer) {
    throw Error(ErrorCode::kSchemaError,
                "answer '" + item.answer +
                    "' not among provided options at line " +
                    std::to_string(line));
  }
  OptionSet o;
  // Keep at most kMaxOptions entries, always including the answer.
  std::size_t distractors = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i == *answer) {
      o.answer_index = o.entries.size();
      o.entries.push_back(entries[i]);
    } else if (distractors + 1 < kMaxOptions) {
      o.entries.push_back(entries[i]);
      ++distractors;
    }
  }
  return o;
}

}  // namespace

std::vector<DataPrimitive> IngestRecords(const std::vector<RawRecord>& records,
                                         const SchemaMapping& mapping,
                                         const std::string& prompt) {
  std::vector<DataPrimitive> out;
  for (const RawRecord& record : records) {
    const std::vector<ConvertedItem> items = Convert(record, mapping);
    const std::string base =
        mapping.dataset + "-" + std::to_string(record.source_line);
    const bool grouped = items.size() > 1 || mapping.group_path.has_value();
    for (std::size_t k = 0; k < items.size(); ++k) {
      const ConvertedItem& item = items[k];
      DataPrimitive p;
      p.id = grouped ? base + "-q" + std::to_string(k) : base;
      p.dataset = mapping.dataset;
      p.prompt = prompt;
      if (item.passage) {
        std::string passage = NormalizeWhitespace(*item.passage);
        if (!passage.empty()) p.passage = std::move(passage);
      }
      p.question = NormalizeWhitespace(item.question);
      p.answer = NormalizeWhitespace(item.answer);
      p.answer_type = item.answer_type;
      if (grouped) p.group_id = base;
      if (item.provided_options) {
        p.options = BuildProvidedOptions(item, mapping, record.source_line);
      }
      const auto violations = ValidatePrimitive(p, /*require_options=*/false);
      if (!violations.empty()) {
        throw Error(ErrorCode::kSchemaError,
                    violations.front().field + ": " + violations.front().rule +
                        " at line " + std::to_string(record.source_line));
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace perturbench
