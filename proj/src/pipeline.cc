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

#include "perturbench/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <system_error>
#include <utility>

#include "perturbench/ingest.h"
#include "perturbench/interpreter.h"
#include "perturbench/options.h"
#include "perturbench/rng.h"
#include "perturbench/text.h"

namespace perturbench {
namespace fs = std::filesystem;

namespace {

// ---- config parsing ----

[[noreturn]] void BadValue(std::size_t line, const std::string& key,
                           const std::string& value, const std::string& why) {
  throw Error(ErrorCode::kParseError, "config line " + std::to_string(line) +
                                          ": " + key + " = '" + value +
                                          "': " + why);
}

std::string Unquote(std::string value) {
  if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
      value.back() == value.front()) {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

// Drops a '#' comment that is not inside quotes.
std::string StripComment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

std::vector<std::string> ListOf(const std::string& value) {
  std::vector<std::string> out;
  for (const std::string& part : Split(value, ',')) {
    std::string item = Unquote(Trim(part));
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

std::uint64_t ToUnsigned(std::size_t line, const std::string& key,
                         const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const unsigned long long x = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    BadValue(line, key, v, "expected a non-negative integer");
  }
}

double ToDouble(std::size_t line, const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    BadValue(line, key, v, "expected a number");
  }
}

bool ToBool(std::size_t line, const std::string& key, const std::string& v) {
  const std::string low = ToLowerAscii(v);
  if (low == "true" || low == "yes" || low == "1") return true;
  if (low == "false" || low == "no" || low == "0") return false;
  BadValue(line, key, v, "expected true or false");
}

fs::path Resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string FileDigest(const fs::path& path) {
  if (path.empty()) return "-";
  return Sha256Hex(ReadTextFile(path));
}

// ---- run directory bookkeeping ----

class Artifacts {
 public:
  Artifacts(fs::path root, PipelineResult* result,
            std::function<void(std::string_view)> log)
      : root_(std::move(root)), result_(result), log_(std::move(log)) {}

  fs::path Path(const std::string& rel) const { return root_ / rel; }

  bool Have(const std::string& rel) {
    if (!fs::exists(Path(rel))) return false;
    result_->skipped.push_back(rel);
    Log("reuse " + rel);
    return true;
  }

  void Made(const std::string& rel) {
    result_->ran.push_back(rel);
    Log("wrote " + rel);
  }

  void Log(const std::string& message) const {
    if (log_) log_(message);
  }

 private:
  fs::path root_;
  PipelineResult* result_;
  std::function<void(std::string_view)> log_;
};

template <typename F>
auto InStage(PipelineStage stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(stage, e.what());
  }
}

struct Condition {
  std::string name;
  enum class Kind { kClean, kPrompt, kOrder, kAttack } kind = Kind::kClean;
  int prompt_id = 0;
  std::size_t order = 0;
  AttackConfig attack;
};

std::vector<Condition> Conditions(const RunConfig& c) {
  std::vector<Condition> out;
  out.push_back({"clean", Condition::Kind::kClean, c.prompt_ids[0], 0, {}});
  if (c.prompt_ids.size() >= 2) {
    for (int id : c.prompt_ids) {
      out.push_back({"prompt-" + std::to_string(id), Condition::Kind::kPrompt,
                     id, 0, {}});
    }
  }
  if (c.order_variants >= 2) {
    for (std::size_t k = 0; k < c.order_variants; ++k) {
      out.push_back({"order-" + std::to_string(k), Condition::Kind::kOrder,
                     c.prompt_ids[0], k, {}});
    }
  }
  for (AttackMethod m : c.attack_methods) {
    const bool visual = m == AttackMethod::kVisual;
    for (double rho : c.rhos) {
      const std::vector<std::optional<double>> ratios =
          visual ? std::vector<std::optional<double>>(c.visual_ratios.begin(),
                                                      c.visual_ratios.end())
                 : std::vector<std::optional<double>>{std::nullopt};
      for (const auto& ratio : ratios) {
        Condition cond;
        cond.kind = Condition::Kind::kAttack;
        cond.prompt_id = c.prompt_ids[0];
        cond.attack.method = m;
        cond.attack.rho = rho;
        cond.attack.visual_ratio = ratio;
        cond.attack.seed = c.seed;
        cond.name = cond.attack.ConditionName();
        out.push_back(cond);
      }
    }
  }
  return out;
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string Fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ---- config ----

RunConfig ParseRunConfig(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  fs::path mapping_dir = fs::path(PERTURBENCH_DATA_DIR) / "mappings";
  struct PendingDataset {
    std::string name, input, mapping;
  };
  std::vector<PendingDataset> pending;
  std::set<std::string> seen;

  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(StripComment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, "config line " +
                                              std::to_string(line_no) +
                                              ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Unquote(Trim(line.substr(eq + 1)));
    if (key != "dataset" && !seen.insert(key).second) {
      BadValue(line_no, key, value, "key given twice");
    }
    try {
      if (key == "seed") {
        c.seed = ToUnsigned(line_no, key, value);
      } else if (key == "dataset") {
        const auto parts = ListOf(value);
        if (parts.size() < 2 || parts.size() > 3) {
          BadValue(line_no, key, value, "expected name, input[, mapping]");
        }
        pending.push_back({parts[0], parts[1], parts.size() == 3 ? parts[2] : ""});
      } else if (key == "mapping_dir") {
        mapping_dir = Resolve(base_dir, value);
      } else if (key == "limit") {
        c.limit = ToUnsigned(line_no, key, value);
      } else if (key == "attack_methods") {
        c.attack_methods.clear();
        for (const auto& m : ListOf(value)) c.attack_methods.push_back(ParseAttackMethod(m));
      } else if (key == "rho") {
        c.rhos.clear();
        for (const auto& v : ListOf(value)) c.rhos.push_back(ToDouble(line_no, key, v));
      } else if (key == "visual_ratio") {
        c.visual_ratios.clear();
        for (const auto& v : ListOf(value)) {
          c.visual_ratios.push_back(ToDouble(line_no, key, v));
        }
      } else if (key == "prompts") {
        c.prompt_ids.clear();
        for (const auto& v : ListOf(value)) {
          c.prompt_ids.push_back(static_cast<int>(ToUnsigned(line_no, key, v)));
        }
      } else if (key == "order_variants") {
        c.order_variants = ToUnsigned(line_no, key, value);
      } else if (key == "none_rate") {
        c.none_rate = ToDouble(line_no, key, value);
      } else if (key == "model") {
        c.model = value;
      } else if (key == "endpoint") {
        c.endpoint = value;
      } else if (key == "concurrency") {
        c.concurrency = ToUnsigned(line_no, key, value);
      } else if (key == "rpm") {
        c.rpm = ToDouble(line_no, key, value);
      } else if (key == "cache_dir") {
        c.cache_dir = value.empty() ? fs::path() : Resolve(base_dir, value);
      } else if (key == "output_dir") {
        c.output_dir = Resolve(base_dir, value);
      } else if (key == "rti_methods") {
        c.rti_methods.clear();
        for (const auto& m : ListOf(value)) c.rti_methods.push_back(ParseAttackMethod(m));
      } else if (key == "rti_repeats") {
        c.rti_repeats = static_cast<int>(ToUnsigned(line_no, key, value));
      } else if (key == "rti_stride") {
        c.rti_stride = ToDouble(line_no, key, value);
      } else if (key == "categories") {
        c.categories.clear();
        for (const auto& k : ListOf(value)) c.categories.push_back(ParseCategoryKind(k));
      } else if (key == "annotations") {
        c.annotations = value.empty() ? fs::path() : Resolve(base_dir, value);
      } else if (key == "forest_trees") {
        c.forest_trees = static_cast<int>(ToUnsigned(line_no, key, value));
      } else if (key == "forest_depth") {
        c.forest_depth = static_cast<int>(ToUnsigned(line_no, key, value));
      } else if (key == "svg") {
        c.svg = ToBool(line_no, key, value);
      } else if (key == "synonyms") {
        c.synonyms = Resolve(base_dir, value);
      } else if (key == "homoglyphs") {
        c.homoglyphs = Resolve(base_dir, value);
      } else {
        throw Error(ErrorCode::kParseError, "config line " +
                                                std::to_string(line_no) +
                                                ": unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError &&
          std::string_view(e.what()).find("config line") != std::string_view::npos) {
        throw;
      }
      BadValue(line_no, key, value, e.what());
    }
  }
  for (const PendingDataset& d : pending) {
    DatasetSpec spec;
    spec.name = d.name;
    spec.input = Resolve(base_dir, d.input);
    spec.mapping = d.mapping.empty() ? mapping_dir / (d.name + ".toml")
                                     : Resolve(base_dir, d.mapping);
    c.datasets.push_back(std::move(spec));
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  return ParseRunConfig(ReadTextFile(path), path.parent_path());
}

void ValidateRunConfig(const RunConfig& c) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, why);
  };
  if (c.datasets.empty()) fail("no dataset configured");
  std::set<std::string> names;
  for (const DatasetSpec& d : c.datasets) {
    if (d.name.empty() || d.name.find('/') != std::string::npos) {
      fail("bad dataset name '" + d.name + "'");
    }
    if (!names.insert(d.name).second) fail("dataset '" + d.name + "' given twice");
    if (!fs::exists(d.input)) fail("dataset input not found: " + d.input.string());
    if (!fs::exists(d.mapping)) {
      fail("no mapping for dataset '" + d.name + "': " + d.mapping.string());
    }
  }
  if (c.prompt_ids.empty()) fail("prompts must name at least one prompt id");
  for (int id : c.prompt_ids) GetPromptVariant(id);
  if (c.order_variants > 720) fail("order_variants above 720");
  if (c.none_rate < 0.0 || c.none_rate > 1.0) fail("none_rate outside [0, 1]");
  for (const Condition& cond : Conditions(c)) {
    if (cond.kind == Condition::Kind::kAttack) cond.attack.Validate();
  }
  if (!c.attack_methods.empty() && c.rhos.empty()) fail("rho list is empty");
  const ModelRef model = ParseModelRef(c.model);
  if (model.kind == ModelRef::Kind::kMock) {
    MockRegistry::Global().Resolve(model.name);
  } else if (c.endpoint.empty()) {
    fail("http model needs an endpoint");
  }
  if (c.concurrency < 1) fail("concurrency must be >= 1");
  if (c.rpm < 0) fail("rpm must be >= 0");
  for (AttackMethod m : c.rti_methods) {
    if (!IsWordLevel(m)) {
      fail("rti method must be word-level: " + std::string(AttackMethodName(m)));
    }
  }
  if (c.rti_repeats < 1) fail("rti_repeats must be >= 1");
  RtiOptions rti;
  rti.stride = c.rti_stride;
  RtiStepCount(rti);
  if (c.forest_trees < 1 || c.forest_depth < 1) {
    fail("forest_trees and forest_depth must be >= 1");
  }
  for (CategoryKind k : c.categories) {
    if ((k == CategoryKind::kDep || k == CategoryKind::kPhrase) &&
        c.annotations.empty() && !c.attack_methods.empty()) {
      fail(std::string(CategoryKindName(k)) + " categories need annotations");
    }
  }
  if (!c.annotations.empty() && !fs::exists(c.annotations)) {
    fail("annotations not found: " + c.annotations.string());
  }
}

std::string CanonicalConfig(const RunConfig& c) {
  std::ostringstream out;
  auto list = [](const auto& items, auto fmt) {
    std::string s;
    for (const auto& item : items) {
      if (!s.empty()) s += ",";
      s += fmt(item);
    }
    return s;
  };
  out << "seed=" << c.seed << "\n";
  for (const DatasetSpec& d : c.datasets) {
    out << "dataset=" << d.name << "," << FileDigest(d.input) << ","
        << FileDigest(d.mapping) << "\n";
  }
  out << "limit=" << c.limit << "\n";
  out << "attack_methods="
      << list(c.attack_methods, [](AttackMethod m) { return std::string(AttackMethodName(m)); })
      << "\n";
  out << "rho=" << list(c.rhos, FormatNumber) << "\n";
  out << "visual_ratio=" << list(c.visual_ratios, FormatNumber) << "\n";
  out << "prompts=" << list(c.prompt_ids, [](int i) { return std::to_string(i); }) << "\n";
  out << "order_variants=" << c.order_variants << "\n";
  out << "none_rate=" << FormatNumber(c.none_rate) << "\n";
  out << "model=" << c.model << "\n";
  out << "endpoint=" << c.endpoint << "\n";
  out << "rti_methods="
      << list(c.rti_methods, [](AttackMethod m) { return std::string(AttackMethodName(m)); })
      << "\n";
  out << "rti_repeats=" << c.rti_repeats << "\n";
  out << "rti_stride=" << FormatNumber(c.rti_stride) << "\n";
  out << "categories="
      << list(c.categories, [](CategoryKind k) { return std::string(CategoryKindName(k)); })
      << "\n";
  out << "annotations=" << FileDigest(c.annotations) << "\n";
  out << "forest=" << c.forest_trees << "," << c.forest_depth << "\n";
  out << "svg=" << (c.svg ? "true" : "false") << "\n";
  out << "synonyms=" << FileDigest(c.synonyms) << "\n";
  out << "homoglyphs=" << FileDigest(c.homoglyphs) << "\n";
  return out.str();
}

std::string ConfigDigest(const RunConfig& config) {
  return Sha256Hex(CanonicalConfig(config)).substr(0, 16);
}

std::string_view StageName(PipelineStage stage) {
  switch (stage) {
    case PipelineStage::kConfig: return "config";
    case PipelineStage::kIngest: return "ingest";
    case PipelineStage::kOptions: return "options";
    case PipelineStage::kAttack: return "attack";
    case PipelineStage::kRun: return "run";
    case PipelineStage::kInterpret: return "interpret";
    case PipelineStage::kScore: return "score";
    case PipelineStage::kRti: return "rti";
    case PipelineStage::kAnalyze: return "analyze";
  }
  return "config";
}

int ExitCode(PipelineStage stage) {
  switch (stage) {
    case PipelineStage::kConfig: return 2;
    case PipelineStage::kIngest: return 10;
    case PipelineStage::kOptions: return 11;
    case PipelineStage::kAttack: return 12;
    case PipelineStage::kRun: return 13;
    case PipelineStage::kInterpret: return 14;
    case PipelineStage::kScore: return 15;
    case PipelineStage::kRti: return 16;
    case PipelineStage::kAnalyze: return 17;
  }
  return 2;
}

// ---- stage building blocks ----

std::shared_ptr<const SynonymTable> LoadSynonyms(const fs::path& path) {
  return std::make_shared<const SynonymTable>(SynonymTable::Load(
      path.empty() ? fs::path(PERTURBENCH_DATA_DIR) / "synonyms.tsv" : path));
}

std::shared_ptr<const HomoglyphTable> LoadHomoglyphs(const fs::path& path) {
  return std::make_shared<const HomoglyphTable>(HomoglyphTable::Load(
      path.empty() ? fs::path(PERTURBENCH_DATA_DIR) / "homoglyphs.tsv" : path));
}

std::vector<DataPrimitive> IngestDataset(const DatasetSpec& dataset,
                                         const std::string& prompt,
                                         std::size_t limit) {
  const SchemaMapping mapping = LoadSchemaMapping(dataset.mapping);
  std::vector<DataPrimitive> out =
      IngestRecords(ReadRawRecords(dataset.input, mapping), mapping, prompt);
  if (limit && out.size() > limit) out.resize(limit);
  return out;
}

std::vector<QueryItem> ReadQueryItems(const fs::path& path) {
  std::vector<QueryItem> items;
  for (const Json& row : ReadJsonLines(path)) {
    QueryItem item;
    try {
      if (row.contains("primitive") && row.contains("records")) {
        item.primitive = row.at("primitive").get<DataPrimitive>();
        item.perturbed_fraction = PerturbedSampleFromJson(row).PerturbedFraction();
      } else {
        item.primitive = row.get<DataPrimitive>();
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
    items.push_back(std::move(item));
  }
  return items;
}

void WritePerturbed(const fs::path& path,
                    const std::vector<PerturbedSample>& samples,
                    const std::vector<DataPrimitive>& clean) {
  std::vector<Json> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const DataPrimitive attacked = samples[i].Materialize(clean[i]);
    rows.push_back(PerturbedSampleToJson(samples[i], &attacked));
  }
  WriteJsonLines(path, rows);
}

std::vector<PerturbedRow> ReadPerturbed(const fs::path& path) {
  std::vector<PerturbedRow> rows;
  for (const Json& j : ReadJsonLines(path)) {
    if (!j.contains("primitive")) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": perturbed rows need the attacked primitive");
    }
    try {
      rows.push_back({PerturbedSampleFromJson(j), j.at("primitive").get<DataPrimitive>()});
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
  }
  return rows;
}

std::vector<Transcript> RunQueries(const std::vector<QueryItem>& items,
                                   const std::string& condition,
                                   const std::optional<std::string>& prompt,
                                   Gateway& gateway) {
  std::vector<DataPrimitive> primitives;
  std::map<std::string, double> fractions;
  for (const QueryItem& item : items) {
    primitives.push_back(item.primitive);
    if (item.perturbed_fraction > 0) {
      fractions[item.primitive.id] = item.perturbed_fraction;
    }
  }
  return gateway.RunAll(BuildSequences(primitives, condition, prompt, fractions));
}

void WriteTranscripts(const fs::path& path,
                      const std::vector<Transcript>& transcripts) {
  std::vector<Json> rows;
  for (const Transcript& t : transcripts) rows.push_back(TranscriptToJson(t));
  WriteJsonLines(path, rows);
}

std::vector<Transcript> ReadTranscripts(const fs::path& path) {
  std::vector<Transcript> out;
  for (const Json& j : ReadJsonLines(path)) out.push_back(TranscriptFromJson(j));
  return out;
}

std::vector<Json> InterpretTranscripts(
    const std::vector<Transcript>& transcripts) {
  std::vector<Json> rows;
  for (const Transcript& t : transcripts) {
    if (t.responses.size() != t.primitive_ids.size() ||
        t.n_options.size() != t.primitive_ids.size()) {
      throw Error(ErrorCode::kPairingError,
                  "transcript " + t.sequence_id + " is incomplete");
    }
    for (std::size_t i = 0; i < t.responses.size(); ++i) {
      const Extraction e = ExtractDetailed(t.responses[i], t.n_options[i]);
      rows.push_back({{"id", t.primitive_ids[i]},
                      {"answer", e.answer.choice ? Json(*e.answer.choice)
                                                 : Json(nullptr)},
                      {"match", MatchClassName(e.match)}});
    }
  }
  return rows;
}

std::vector<AnswerRow> ReadAnswerRows(const fs::path& path) {
  const std::vector<Json> rows = ReadJsonLines(path);
  if (!rows.empty() && rows[0].contains("primitive_ids")) {
    std::vector<Transcript> transcripts;
    for (const Json& j : rows) transcripts.push_back(TranscriptFromJson(j));
    return AnswersFromTranscripts(transcripts);
  }
  std::vector<AnswerRow> out;
  for (const Json& j : rows) {
    try {
      AnswerRow row{j.at("id").get<std::string>(), std::nullopt};
      if (!j.at("answer").is_null()) row.choice = j.at("answer").get<std::size_t>();
      out.push_back(std::move(row));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<bool> FlipLabels(const std::vector<PerturbedRow>& rows,
                             const std::vector<AnswerRow>& clean,
                             const std::vector<AnswerRow>& attacked) {
  std::map<std::string, std::optional<std::size_t>> before, after;
  for (const AnswerRow& r : clean) before[r.id] = r.choice;
  for (const AnswerRow& r : attacked) after[r.id] = r.choice;
  std::vector<bool> flips;
  for (const PerturbedRow& row : rows) {
    const std::string& id = row.sample.base_id;
    auto b = before.find(id);
    auto a = after.find(id);
    if (b == before.end() || a == after.end()) {
      throw Error(ErrorCode::kPairingError, "no paired answers for " + id);
    }
    flips.push_back(b->second != a->second);
  }
  return flips;
}

DataPrimitive CleanFromPerturbed(const PerturbedRow& row) {
  DataPrimitive clean = row.attacked;
  clean.id = row.sample.base_id;
  const std::string text = row.sample.Reconstruct();
  if (row.sample.question_target) {
    clean.question = text;
  } else {
    clean.passage = text;
  }
  return clean;
}

std::vector<PatternReport> AnalyzeRows(
    const std::vector<PerturbedRow>& rows, const std::vector<bool>& flipped,
    const std::vector<CategoryKind>& kinds,
    std::shared_ptr<const AnnotationIndex> sidecar,
    const std::string& condition, const ForestParams& params) {
  std::vector<DataPrimitive> clean;
  std::vector<PerturbedSample> samples;
  clean.reserve(rows.size());
  for (const PerturbedRow& r : rows) {
    clean.push_back(CleanFromPerturbed(r));
    samples.push_back(r.sample);
  }
  std::map<std::string, const DataPrimitive*> by_id;
  for (const DataPrimitive& p : clean) by_id[p.id] = &p;
  std::vector<PatternReport> reports;
  for (CategoryKind kind : kinds) {
    const CategoryProvider provider(
        kind, kind == CategoryKind::kPosition ? nullptr : sidecar);
    const auto analysis = MakeAnalysisSamples(by_id, samples, flipped, provider);
    reports.push_back(AnalyzeCategory(analysis, kind, condition, params));
  }
  return reports;
}

// ---- pipeline ----

PipelineResult RunPipeline(const RunConfig& config, const PipelineHooks& hooks) {
  InStage(PipelineStage::kConfig, [&] { ValidateRunConfig(config); });
  PipelineResult result;
  const std::string digest =
      InStage(PipelineStage::kConfig, [&] { return ConfigDigest(config); });
  result.run_dir = config.output_dir / digest;
  fs::create_directories(result.run_dir);
  Artifacts art(result.run_dir, &result, hooks.log);
  WriteTextFile(art.Path("config.txt"), CanonicalConfig(config));

  const std::vector<Condition> conditions = Conditions(config);
  const std::string default_prompt(GetPromptVariant(config.prompt_ids[0]).text);
  auto synonyms = InStage(PipelineStage::kConfig,
                          [&] { return LoadSynonyms(config.synonyms); });

  // ingest
  std::map<std::string, std::vector<DataPrimitive>> ingested;
  InStage(PipelineStage::kIngest, [&] {
    for (const DatasetSpec& d : config.datasets) {
      const std::string rel = "ingest/" + d.name + ".jsonl";
      if (art.Have(rel)) {
        ingested[d.name] = ReadPrimitives(art.Path(rel));
        continue;
      }
      ingested[d.name] = IngestDataset(d, default_prompt, config.limit);
      if (ingested[d.name].empty()) {
        throw Error(ErrorCode::kEmptyDataset, d.name + " produced no primitives");
      }
      WritePrimitives(art.Path(rel), ingested[d.name]);
      art.Made(rel);
    }
  });

  // options, plus one primitives file per order variant
  std::map<std::string, std::vector<DataPrimitive>> primitives;
  std::map<std::string, std::map<std::string, std::vector<DataPrimitive>>> variants;
  InStage(PipelineStage::kOptions, [&] {
    for (const DatasetSpec& d : config.datasets) {
      const std::string rel = "primitives/" + d.name + ".jsonl";
      if (art.Have(rel)) {
        primitives[d.name] = ReadPrimitives(art.Path(rel));
      } else {
        std::vector<DataPrimitive> items = ingested[d.name];
        OptionGenConfig gen;
        gen.seed = config.seed;
        gen.synonyms = synonyms;
        gen.none_of_the_others_rate = config.none_rate;
        FillOptions(items, gen);
        for (const DataPrimitive& p : items) {
          const auto violations = ValidatePrimitive(p);
          if (!violations.empty()) {
            throw Error(ErrorCode::kInvalidArgument,
                        p.id + ": " + violations[0].field + " " + violations[0].rule);
          }
        }
        WritePrimitives(art.Path(rel), items);
        art.Made(rel);
        primitives[d.name] = std::move(items);
      }
      if (config.order_variants < 2) continue;
      std::vector<std::vector<DataPrimitive>> per_k(config.order_variants);
      bool all_present = true;
      for (std::size_t k = 0; k < config.order_variants; ++k) {
        const std::string vrel =
            "primitives/" + d.name + ".order-" + std::to_string(k) + ".jsonl";
        if (!fs::exists(art.Path(vrel))) all_present = false;
      }
      if (!all_present) {
        for (const DataPrimitive& p : primitives[d.name]) {
          const auto orders =
              OrderVariants(*p.options, config.order_variants,
                            rng::Key({PrimitiveSeed(config.seed, p.id),
                                      rng::StageKey(rng::Stage::kOrder)}));
          for (std::size_t k = 0; k < orders.size(); ++k) {
            DataPrimitive v = p;
            v.options = orders[k].options;
            per_k[k].push_back(std::move(v));
          }
        }
      }
      for (std::size_t k = 0; k < config.order_variants; ++k) {
        const std::string name = "order-" + std::to_string(k);
        const std::string vrel = "primitives/" + d.name + "." + name + ".jsonl";
        if (all_present && art.Have(vrel)) {
          variants[d.name][name] = ReadPrimitives(art.Path(vrel));
          continue;
        }
        WritePrimitives(art.Path(vrel), per_k[k]);
        art.Made(vrel);
        variants[d.name][name] = std::move(per_k[k]);
      }
    }
  });

  // attack
  InStage(PipelineStage::kAttack, [&] {
    std::optional<Attacker> attacker;
    for (const DatasetSpec& d : config.datasets) {
      for (const Condition& cond : conditions) {
        if (cond.kind != Condition::Kind::kAttack) continue;
        const std::string rel = "attacks/" + d.name + "/" + cond.name + ".jsonl";
        if (art.Have(rel)) continue;
        if (!attacker) attacker.emplace(synonyms, LoadHomoglyphs(config.homoglyphs));
        const auto samples = attacker->ApplyBatch(primitives[d.name], cond.attack);
        fs::create_directories(art.Path(rel).parent_path());
        WritePerturbed(art.Path(rel), samples, primitives[d.name]);
        art.Made(rel);
      }
    }
  });

  // run
  std::unique_ptr<Gateway> gateway;
  auto gw = [&]() -> Gateway& {
    if (!gateway) {
      ModelRef model = ParseModelRef(config.model);
      model.endpoint = config.endpoint;
      GatewayOptions o;
      o.concurrency = config.concurrency;
      o.rpm = config.rpm;
      const fs::path cache_dir =
          config.cache_dir.empty() ? config.output_dir / "cache" : config.cache_dir;
      o.cache_path = cache_dir / "responses.jsonl";
      o.transport = hooks.transport;
      gateway = std::make_unique<Gateway>(model, o);
    }
    return *gateway;
  };
  auto items_for = [&](const std::string& ds, const Condition& cond) {
    if (cond.kind == Condition::Kind::kAttack) {
      return ReadQueryItems(art.Path("attacks/" + ds + "/" + cond.name + ".jsonl"));
    }
    const std::vector<DataPrimitive>& src =
        cond.kind == Condition::Kind::kOrder ? variants[ds][cond.name]
                                             : primitives[ds];
    std::vector<QueryItem> items;
    for (const DataPrimitive& p : src) items.push_back({p, 0.0});
    return items;
  };
  InStage(PipelineStage::kRun, [&] {
    for (const DatasetSpec& d : config.datasets) {
      for (const Condition& cond : conditions) {
        const std::string rel = "transcripts/" + d.name + "/" + cond.name + ".jsonl";
        if (art.Have(rel)) continue;
        std::optional<std::string> prompt;
        if (cond.kind == Condition::Kind::kPrompt) {
          prompt = std::string(GetPromptVariant(cond.prompt_id).text);
        }
        const auto transcripts = RunQueries(items_for(d.name, cond), cond.name, prompt, gw());
        fs::create_directories(art.Path(rel).parent_path());
        WriteTranscripts(art.Path(rel), transcripts);
        art.Made(rel);
      }
    }
  });

  // interpret
  std::map<std::string, std::map<std::string, std::vector<AnswerRow>>> answers;
  InStage(PipelineStage::kInterpret, [&] {
    for (const DatasetSpec& d : config.datasets) {
      for (const Condition& cond : conditions) {
        const std::string rel = "answers/" + d.name + "/" + cond.name + ".jsonl";
        if (!art.Have(rel)) {
          const auto rows = InterpretTranscripts(ReadTranscripts(
              art.Path("transcripts/" + d.name + "/" + cond.name + ".jsonl")));
          fs::create_directories(art.Path(rel).parent_path());
          WriteJsonLines(art.Path(rel), rows);
          art.Made(rel);
        }
        answers[d.name][cond.name] = ReadAnswerRows(art.Path(rel));
      }
    }
  });

  // score
  std::vector<Json> score_rows, consistency_rows;
  InStage(PipelineStage::kScore, [&] {
    for (const DatasetSpec& d : config.datasets) {
      const auto gold = GoldIndex(primitives[d.name]);
      const auto& clean = answers[d.name]["clean"];
      std::vector<double> prompt_acc, order_acc;
      for (const Condition& cond : conditions) {
        const auto& rows = answers[d.name][cond.name];
        EvalReport report;
        if (cond.kind == Condition::Kind::kOrder) {
          report = Score(d.name, cond.name, rows, GoldIndex(variants[d.name][cond.name]));
          order_acc.push_back(100.0 - report.er_percent);
        } else if (cond.kind == Condition::Kind::kAttack) {
          report = Score(d.name, cond.name, rows, gold,
                         std::span<const AnswerRow>(clean));
        } else {
          report = Score(d.name, cond.name, rows, gold);
          if (cond.kind == Condition::Kind::kPrompt) {
            prompt_acc.push_back(100.0 - report.er_percent);
          }
        }
        score_rows.push_back(EvalReportToJson(report));
      }
      for (auto [axis, acc] : {std::pair{ConsistencyAxis::kPrompt, &prompt_acc},
                               std::pair{ConsistencyAxis::kOptionOrder, &order_acc}}) {
        if (acc->size() < 2) continue;
        const ConsistencyReport r = Consistency(axis, *acc);
        consistency_rows.push_back(
            {{"dataset", d.name},
             {"axis", axis == ConsistencyAxis::kPrompt ? "prompt" : "option_order"},
             {"accuracies", r.accuracies},
             {"std_percent", r.std_percent}});
      }
    }
    WriteJsonLines(art.Path("scores.jsonl"), score_rows);
    WriteJsonLines(art.Path("consistency.jsonl"), consistency_rows);
  });

  // rti
  std::vector<Json> rti_rows;
  InStage(PipelineStage::kRti, [&] {
    if (config.rti_methods.empty()) return;
    std::optional<Attacker> attacker;
    for (const DatasetSpec& d : config.datasets) {
      std::vector<RtiRecord> all;
      for (AttackMethod m : config.rti_methods) {
        const std::string rel =
            "rti/" + d.name + "/" + std::string(AttackMethodName(m)) + ".jsonl";
        if (!art.Have(rel)) {
          if (!attacker) attacker.emplace(synonyms, LoadHomoglyphs(config.homoglyphs));
          RtiOptions o;
          o.method = m;
          o.seed = config.seed;
          o.repeats = config.rti_repeats;
          o.stride = config.rti_stride;
          std::vector<Json> rows;
          for (const RtiRecord& r : RunRti(primitives[d.name], *attacker, gw(), o)) {
            rows.push_back(RtiRecordToJson(r));
          }
          fs::create_directories(art.Path(rel).parent_path());
          WriteJsonLines(art.Path(rel), rows);
          art.Made(rel);
        }
        for (const Json& j : ReadJsonLines(art.Path(rel))) {
          all.push_back(RtiRecordFromJson(j));
        }
      }
      const RtiSummary s = SummarizeRti(all);
      Json per = Json::object();
      for (const auto& [m, v] : s.per_method) per[std::string(AttackMethodName(m))] = v;
      rti_rows.push_back({{"dataset", d.name}, {"r_d", per}, {"average", s.average}});
    }
    WriteJsonLines(art.Path("rti.jsonl"), rti_rows);
  });

  // analyze
  InStage(PipelineStage::kAnalyze, [&] {
    if (config.categories.empty()) return;
    std::shared_ptr<const AnnotationIndex> sidecar;
    if (!config.annotations.empty()) {
      sidecar = std::make_shared<const AnnotationIndex>(LoadAnnotations(config.annotations));
    }
    ForestParams params;
    params.n_trees = config.forest_trees;
    params.max_depth = config.forest_depth;
    params.seed = config.seed;
    for (const DatasetSpec& d : config.datasets) {
      for (const Condition& cond : conditions) {
        if (cond.kind != Condition::Kind::kAttack) continue;
        const std::string rel = "analysis/" + d.name + "/" + cond.name + ".json";
        if (art.Have(rel)) continue;
        const auto rows = ReadPerturbed(art.Path("attacks/" + d.name + "/" + cond.name + ".jsonl"));
        const auto flips = FlipLabels(rows, answers[d.name]["clean"],
                                      answers[d.name][cond.name]);
        const auto reports =
            AnalyzeRows(rows, flips, config.categories, sidecar, cond.name, params);
        Json out = Json::array();
        for (const PatternReport& r : reports) {
          out.push_back(PatternReportToJson(r));
          if (config.svg && !r.importance.empty()) {
            const std::string svg_rel = "analysis/" + d.name + "/" + cond.name + "." +
                                        std::string(CategoryKindName(r.kind)) + ".svg";
            fs::create_directories(art.Path(svg_rel).parent_path());
            WriteTextFile(art.Path(svg_rel), ImportanceSvg(r));
          }
        }
        fs::create_directories(art.Path(rel).parent_path());
        WriteTextFile(art.Path(rel), out.dump(2) + "\n");
        art.Made(rel);
      }
    }
  });

  // summary tables
  std::ostringstream text;
  std::vector<Json> summary;
  text << "ER / ACR (%)\n";
  for (const Json& r : score_rows) {
    summary.push_back({{"table", "scores"}, {"row", r}});
    text << "  " << Pad(r["dataset"].get<std::string>(), 14)
         << Pad(r["condition"].get<std::string>(), 26) << "ER "
         << Fixed(r["er_percent"].get<double>());
    if (!r["acr_percent"].is_null()) {
      text << "  ACR " << Fixed(r["acr_percent"].get<double>());
    }
    text << "\n";
  }
  if (!consistency_rows.empty()) {
    text << "Consistency (std of accuracy, %)\n";
    for (const Json& r : consistency_rows) {
      summary.push_back({{"table", "consistency"}, {"row", r}});
      text << "  " << Pad(r["dataset"].get<std::string>(), 14)
           << Pad(r["axis"].get<std::string>(), 14) << "std "
           << Fixed(r["std_percent"].get<double>()) << "  acc";
      for (double a : r["accuracies"]) text << " " << Fixed(a);
      text << "\n";
    }
  }
  if (!rti_rows.empty()) {
    text << "RTI (R_D)\n";
    for (const Json& r : rti_rows) {
      summary.push_back({{"table", "rti"}, {"row", r}});
      text << "  " << Pad(r["dataset"].get<std::string>(), 14);
      for (const auto& [m, v] : r["r_d"].items()) {
        text << m << " " << Fixed(v.get<double>(), 3) << "  ";
      }
      text << "average " << Fixed(r["average"].get<double>(), 3) << "\n";
    }
  }
  result.summary = text.str();
  WriteJsonLines(art.Path("summary.jsonl"), summary);
  WriteTextFile(art.Path("summary.txt"), result.summary);
  if (gateway) result.gateway = gateway->stats();
  return result;
}

}  // namespace perturbench
