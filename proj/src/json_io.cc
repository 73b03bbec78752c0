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

#include "perturbench/json_io.h"

#include <fstream>
#include <sstream>

#include "perturbench/error.h"

namespace perturbench {
namespace {

template <typename T>
std::optional<T> OptionalField(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

const Json& Required(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kParseError,
                std::string("missing field '") + key + "'");
  }
  return *it;
}

}  // namespace

void to_json(Json& j, const OptionSet& o) {
  j = Json{{"entries", o.entries},
           {"labels", o.labels()},
           {"answer_index", o.answer_index}};
}

void from_json(const Json& j, OptionSet& o) {
  o.entries = Required(j, "entries").get<std::vector<std::string>>();
  o.answer_index = Required(j, "answer_index").get<std::size_t>();
}

void to_json(Json& j, const DataPrimitive& p) {
  j = Json::object();
  j["id"] = p.id;
  j["dataset"] = p.dataset;
  j["prompt"] = p.prompt;
  j["passage"] = p.passage ? Json(*p.passage) : Json(nullptr);
  j["question"] = p.question;
  j["options"] = p.options ? Json(*p.options) : Json(nullptr);
  j["answer"] = p.answer;
  j["answer_type"] = std::string(AnswerTypeName(p.answer_type));
  j["group_id"] = p.group_id ? Json(*p.group_id) : Json(nullptr);
}

void from_json(const Json& j, DataPrimitive& p) {
  p.id = Required(j, "id").get<std::string>();
  p.dataset = j.value("dataset", std::string());
  p.prompt = j.value("prompt", std::string());
  p.passage = OptionalField<std::string>(j, "passage");
  p.question = Required(j, "question").get<std::string>();
  p.options = OptionalField<OptionSet>(j, "options");
  p.answer = j.value("answer", std::string());
  p.answer_type = ParseAnswerType(j.value("answer_type", std::string("Text")));
  p.group_id = OptionalField<std::string>(j, "group_id");
}

void to_json(Json& j, const PerturbationRecord& r) {
  j = Json{{"word_index", r.word_index},
           {"original", r.original},
           {"replacement",
            r.replacement ? Json(*r.replacement) : Json(nullptr)},
           {"op", std::string(PerturbationOpName(r.op))}};
  if (r.skipped) j["skipped"] = true;
}

void from_json(const Json& j, PerturbationRecord& r) {
  r.word_index = Required(j, "word_index").get<std::size_t>();
  r.original = Required(j, "original").get<std::string>();
  r.replacement = OptionalField<std::string>(j, "replacement");
  r.op = ParsePerturbationOp(Required(j, "op").get<std::string>());
  r.skipped = j.value("skipped", false);
}

void to_json(Json& j, const AttackConfig& c) {
  j = Json{{"method", std::string(AttackMethodName(c.method))},
           {"rho", c.rho},
           {"visual_ratio",
            c.visual_ratio ? Json(*c.visual_ratio) : Json(nullptr)},
           {"seed", c.seed}};
}

void from_json(const Json& j, AttackConfig& c) {
  c.method = ParseAttackMethod(Required(j, "method").get<std::string>());
  c.rho = Required(j, "rho").get<double>();
  c.visual_ratio = OptionalField<double>(j, "visual_ratio");
  c.seed = j.value("seed", std::uint64_t{0});
}

void to_json(Json& j, const ModelAnswer& a) {
  j = Json{{"choice", a.choice ? Json(*a.choice) : Json(nullptr)},
           {"raw_text", a.raw_text}};
}

void from_json(const Json& j, ModelAnswer& a) {
  a.choice = OptionalField<std::size_t>(j, "choice");
  a.raw_text = j.value("raw_text", std::string());
}

Json PerturbedSampleToJson(const PerturbedSample& s,
                           const DataPrimitive* materialized) {
  Json j = Json::object();
  j["base_id"] = s.base_id;
  j["perturbed_passage"] = s.perturbed_passage;
  j["target"] = s.question_target ? "question" : "passage";
  j["records"] = s.records;
  j["attack"] = s.attack;
  j["seed"] = s.seed;
  j["clean_word_count"] = s.clean_word_count;
  if (materialized != nullptr) j["primitive"] = *materialized;
  return j;
}

PerturbedSample PerturbedSampleFromJson(const Json& j) {
  PerturbedSample s;
  s.base_id = Required(j, "base_id").get<std::string>();
  s.perturbed_passage = Required(j, "perturbed_passage").get<std::string>();
  s.question_target = j.value("target", std::string("passage")) == "question";
  s.records = Required(j, "records").get<std::vector<PerturbationRecord>>();
  s.attack = Required(j, "attack").get<AttackConfig>();
  s.seed = j.value("seed", std::uint64_t{0});
  s.clean_word_count = j.value("clean_word_count", std::size_t{0});
  return s;
}

std::vector<Json> ReadJsonLines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::vector<Json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ":" +
                                              std::to_string(line_no) + ": " +
                                              e.what());
    }
  }
  return rows;
}

void WriteTextFile(const std::filesystem::path& path,
                   const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    }
    out << contents;
    if (!out) throw Error(ErrorCode::kIoError, "write failed " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<Json>& rows) {
  std::string out;
  for (const Json& row : rows) {
    out += row.dump();
    out += '\n';
  }
  WriteTextFile(path, out);
}

std::vector<DataPrimitive> ReadPrimitives(const std::filesystem::path& path) {
  std::vector<DataPrimitive> items;
  std::size_t line = 0;
  for (const Json& row : ReadJsonLines(path)) {
    ++line;
    try {
      items.push_back(row.get<DataPrimitive>());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + " record " +
                                              std::to_string(line) + ": " +
                                              e.what());
    }
  }
  return items;
}

void WritePrimitives(const std::filesystem::path& path,
                     const std::vector<DataPrimitive>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const DataPrimitive& p : items) rows.emplace_back(p);
  WriteJsonLines(path, rows);
}

}  // namespace perturbench
