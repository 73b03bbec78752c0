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

// perturbench command line: one subcommand per stage plus `pipeline`.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perturbench/attack.h"
#include "perturbench/error.h"
#include "perturbench/evaluation.h"
#include "perturbench/gateway.h"
#include "perturbench/ingest.h"
#include "perturbench/json_io.h"
#include "perturbench/options.h"
#include "perturbench/pattern.h"
#include "perturbench/pipeline.h"
#include "perturbench/text.h"

namespace pb = perturbench;
namespace fs = std::filesystem;

namespace {

void Log(std::string_view line) { std::cerr << "perturbench: " << line << "\n"; }

struct GatewayFlags {
  std::string model;
  std::string endpoint;
  std::size_t concurrency = 4;
  double rpm = 0;
  std::string cache;

  void Add(CLI::App* cmd) {
    cmd->add_option("--model", model, "mock:<name> or http:<model-id>")->required();
    cmd->add_option("--endpoint", endpoint, "chat-completions URL for http models");
    cmd->add_option("--concurrency", concurrency, "requests in flight")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rpm", rpm, "requests per minute, 0 = unlimited")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--cache", cache, "response cache directory");
  }

  pb::Gateway Make() const {
    pb::ModelRef ref = pb::ParseModelRef(model);
    ref.endpoint = endpoint;
    pb::GatewayOptions o;
    o.concurrency = concurrency;
    o.rpm = rpm;
    if (!cache.empty()) o.cache_path = fs::path(cache) / "responses.jsonl";
    return pb::Gateway(ref, o);
  }
};

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  for (const std::string& part : pb::Split(s, ',')) {
    std::string t = pb::Trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbench: adversarial robustness evaluation for LLM QA"};
  app.require_subcommand(1);
  pb::PipelineStage stage = pb::PipelineStage::kConfig;
  std::function<void()> action;

  // ingest
  {
    auto* cmd = app.add_subcommand("ingest", "convert a raw dataset file into primitives");
    static std::string dataset, input, mapping, out;
    static int prompt_id = pb::kDefaultPromptId;
    static std::size_t limit = 0;
    cmd->add_option("--dataset", dataset, "dataset name")->required();
    cmd->add_option("--input", input, "raw dataset file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mapping", mapping, "schema mapping file")->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "primitives JSONL")->required();
    cmd->add_option("--prompt-id", prompt_id, "prompt variant stored on each primitive");
    cmd->add_option("--limit", limit, "keep at most this many primitives");
    cmd->callback([&] {
      stage = pb::PipelineStage::kIngest;
      action = [] {
        pb::DatasetSpec spec{dataset, input,
                             mapping.empty() ? fs::path(PERTURBENCH_DATA_DIR) /
                                                   "mappings" / (dataset + ".toml")
                                             : fs::path(mapping)};
        const auto items = pb::IngestDataset(
            spec, std::string(pb::GetPromptVariant(prompt_id).text), limit);
        pb::WritePrimitives(out, items);
        Log("ingested " + std::to_string(items.size()) + " primitives");
      };
    });
  }

  // options
  {
    auto* cmd = app.add_subcommand("options", "fill missing option sets");
    static std::string in, out, synonyms;
    static std::uint64_t seed = 0;
    static double none_rate = 0.2;
    cmd->add_option("--in", in, "primitives JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "primitives JSONL")->required();
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--none-rate", none_rate, "rate of the none-of-the-others option")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--synonyms", synonyms, "synonym table");
    cmd->callback([&] {
      stage = pb::PipelineStage::kOptions;
      action = [] {
        auto items = pb::ReadPrimitives(in);
        pb::OptionGenConfig gen;
        gen.seed = seed;
        gen.synonyms = pb::LoadSynonyms(synonyms);
        gen.none_of_the_others_rate = none_rate;
        pb::FillOptions(items, gen);
        pb::WritePrimitives(out, items);
      };
    });
  }

  // attack
  {
    auto* cmd = app.add_subcommand("attack", "perturb passages");
    static std::string in, out, method, synonyms, homoglyphs;
    static double rho = 0.0;
    static std::optional<double> ratio;
    static std::uint64_t seed = 0;
    cmd->add_option("--in", in, "primitives JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "perturbed JSONL")->required();
    cmd->add_option("--method", method, "char_repeat|char_delete|char_insert|"
                                        "word_insert|word_delete|word_replace|visual")
        ->required();
    cmd->add_option("--rho", rho, "per-word attack probability")->required();
    cmd->add_option("--visual-ratio", ratio, "letters replaced per attacked word");
    cmd->add_option("--seed", seed, "attack seed");
    cmd->add_option("--synonyms", synonyms, "synonym table");
    cmd->add_option("--homoglyphs", homoglyphs, "homoglyph table");
    cmd->callback([&] {
      stage = pb::PipelineStage::kAttack;
      action = [] {
        pb::AttackConfig config;
        config.method = pb::ParseAttackMethod(method);
        config.rho = rho;
        config.visual_ratio = ratio;
        config.seed = seed;
        const auto items = pb::ReadPrimitives(in);
        pb::Attacker attacker(pb::LoadSynonyms(synonyms), pb::LoadHomoglyphs(homoglyphs));
        pb::WritePerturbed(out, attacker.ApplyBatch(items, config), items);
      };
    });
  }

  // run
  {
    auto* cmd = app.add_subcommand("run", "query a model and write transcripts");
    static std::string in, out, condition = "run";
    static std::optional<int> prompt_id;
    static GatewayFlags flags;
    cmd->add_option("--in", in, "primitives or perturbed JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "transcripts JSONL")->required();
    cmd->add_option("--condition", condition, "condition tag stored in transcripts");
    cmd->add_option("--prompt-id", prompt_id, "override every primitive's prompt");
    flags.Add(cmd);
    cmd->callback([&] {
      stage = pb::PipelineStage::kRun;
      action = [] {
        pb::Gateway gw = flags.Make();
        std::optional<std::string> prompt;
        if (prompt_id) prompt = std::string(pb::GetPromptVariant(*prompt_id).text);
        pb::WriteTranscripts(out, pb::RunQueries(pb::ReadQueryItems(in), condition, prompt, gw));
        const auto s = gw.stats();
        Log(std::to_string(s.requests) + " requests, " + std::to_string(s.cache_hits) +
            " cache hits, " + std::to_string(s.retries) + " retries");
      };
    });
  }

  // interpret
  {
    auto* cmd = app.add_subcommand("interpret", "extract option indices from transcripts");
    static std::string in, out;
    cmd->add_option("--in", in, "transcripts JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "answers JSONL")->required();
    cmd->callback([&] {
      stage = pb::PipelineStage::kInterpret;
      action = [] {
        pb::WriteJsonLines(out, pb::InterpretTranscripts(pb::ReadTranscripts(in)));
      };
    });
  }

  // score
  {
    auto* cmd = app.add_subcommand("score", "error rate and answer-changed rate");
    static std::string clean, attacked, gold, out, dataset = "-", condition = "attacked";
    cmd->add_option("--clean", clean, "clean transcripts or answers")->required()->check(CLI::ExistingFile);
    cmd->add_option("--attacked", attacked, "attacked transcripts or answers")->check(CLI::ExistingFile);
    cmd->add_option("--gold", gold, "primitives JSONL with options")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "report JSONL with per-sample rows");
    cmd->add_option("--dataset", dataset, "dataset label");
    cmd->add_option("--condition", condition, "condition label");
    cmd->callback([&] {
      stage = pb::PipelineStage::kScore;
      action = [] {
        const auto g = pb::GoldIndex(pb::ReadPrimitives(gold));
        const auto c = pb::ReadAnswerRows(clean);
        std::vector<pb::Json> rows;
        const pb::EvalReport base = pb::Score(dataset, "clean", c, g);
        rows.push_back(pb::EvalReportToJson(base, true));
        std::cout << "clean ER " << base.er_percent << "\n";
        if (!attacked.empty()) {
          const auto a = pb::ReadAnswerRows(attacked);
          const pb::EvalReport r =
              pb::Score(dataset, condition, a, g, std::span<const pb::AnswerRow>(c));
          rows.push_back(pb::EvalReportToJson(r, true));
          std::cout << condition << " ER " << r.er_percent << " ACR " << *r.acr_percent
                    << "\n";
        }
        if (!out.empty()) pb::WriteJsonLines(out, rows);
      };
    });
  }

  // rti
  {
    auto* cmd = app.add_subcommand("rti", "relative training index sweep");
    static std::string in, out, methods = "word_insert,word_delete,word_replace",
                               synonyms, homoglyphs;
    static double stride = 0.1;
    static std::uint64_t seed = 0;
    static int repeats = 1;
    static GatewayFlags flags;
    cmd->add_option("--in", in, "primitives JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "RTI records JSONL");
    cmd->add_option("--methods", methods, "comma-separated word-level methods");
    cmd->add_option("--stride", stride, "rho step");
    cmd->add_option("--seed", seed, "sweep seed");
    cmd->add_option("--repeats", repeats, "realizations per rho (majority flip)");
    cmd->add_option("--synonyms", synonyms, "synonym table");
    cmd->add_option("--homoglyphs", homoglyphs, "homoglyph table");
    flags.Add(cmd);
    cmd->callback([&] {
      stage = pb::PipelineStage::kRti;
      action = [] {
        const auto items = pb::ReadPrimitives(in);
        pb::Attacker attacker(pb::LoadSynonyms(synonyms), pb::LoadHomoglyphs(homoglyphs));
        pb::Gateway gw = flags.Make();
        std::vector<pb::RtiRecord> all;
        std::vector<pb::Json> rows;
        for (const std::string& m : SplitList(methods)) {
          pb::RtiOptions o;
          o.method = pb::ParseAttackMethod(m);
          o.seed = seed;
          o.stride = stride;
          o.repeats = repeats;
          for (pb::RtiRecord& r : pb::RunRti(items, attacker, gw, o)) {
            rows.push_back(pb::RtiRecordToJson(r));
            all.push_back(std::move(r));
          }
        }
        const pb::RtiSummary s = pb::SummarizeRti(all);
        for (const auto& [m, v] : s.per_method) {
          std::cout << pb::AttackMethodName(m) << " R_D " << v << "\n";
        }
        std::cout << "average " << s.average << "\n";
        if (!out.empty()) pb::WriteJsonLines(out, rows);
      };
    });
  }

  // analyze
  {
    auto* cmd = app.add_subcommand("analyze", "category frequencies and forest importance");
    static std::string runs, perturbed, annotations, categories = "pos,position", out, svg;
    static int trees = 100, depth = 8;
    static std::uint64_t seed = 0;
    cmd->add_option("--runs", runs, "clean,attacked transcripts or answers")->required();
    cmd->add_option("--perturbed", perturbed, "perturbed JSONL of the attacked run")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--annotations", annotations, "annotation sidecar JSONL")
        ->check(CLI::ExistingFile);
    cmd->add_option("--categories", categories, "pos,dep,phrase,position");
    cmd->add_option("--out", out, "report JSON")->required();
    cmd->add_option("--svg", svg, "write one importance chart per category: <prefix>.<kind>.svg");
    cmd->add_option("--trees", trees, "forest size")->check(CLI::PositiveNumber);
    cmd->add_option("--depth", depth, "tree depth")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "forest seed");
    cmd->callback([&] {
      stage = pb::PipelineStage::kAnalyze;
      action = [] {
        const auto pair = SplitList(runs);
        if (pair.size() != 2) {
          throw pb::Error(pb::ErrorCode::kInvalidArgument,
                          "--runs takes clean,attacked");
        }
        const auto rows = pb::ReadPerturbed(perturbed);
        const auto flips =
            pb::FlipLabels(rows, pb::ReadAnswerRows(pair[0]), pb::ReadAnswerRows(pair[1]));
        std::vector<pb::CategoryKind> kinds;
        for (const auto& k : SplitList(categories)) kinds.push_back(pb::ParseCategoryKind(k));
        std::shared_ptr<const pb::AnnotationIndex> sidecar;
        if (!annotations.empty()) {
          sidecar = std::make_shared<const pb::AnnotationIndex>(pb::LoadAnnotations(annotations));
        }
        pb::ForestParams params;
        params.n_trees = trees;
        params.max_depth = depth;
        params.seed = seed;
        const std::string condition =
            rows.empty() ? "attacked" : rows[0].sample.attack.ConditionName();
        pb::Json report = pb::Json::array();
        for (const auto& r : pb::AnalyzeRows(rows, flips, kinds, sidecar, condition, params)) {
          report.push_back(pb::PatternReportToJson(r));
          if (!svg.empty() && !r.importance.empty()) {
            pb::WriteTextFile(svg + "." + std::string(pb::CategoryKindName(r.kind)) + ".svg",
                              pb::ImportanceSvg(r));
          }
        }
        pb::WriteTextFile(out, report.dump(2) + "\n");
      };
    });
  }

  // pipeline
  {
    auto* cmd = app.add_subcommand("pipeline", "run every stage from a config file");
    static std::string config_path, output_dir;
    cmd->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
    cmd->add_option("--output-dir", output_dir, "override output_dir");
    cmd->callback([&] {
      stage = pb::PipelineStage::kConfig;
      action = [] {
        pb::RunConfig config = pb::LoadRunConfig(config_path);
        if (!output_dir.empty()) config.output_dir = output_dir;
        pb::PipelineHooks hooks;
        hooks.log = Log;
        const pb::PipelineResult r = pb::RunPipeline(config, hooks);
        std::cout << r.summary << "run directory: " << r.run_dir.string() << "\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : pb::ExitCode(pb::PipelineStage::kConfig);
  }
  try {
    if (action) action();
  } catch (const pb::StageFailure& e) {
    Log(e.what());
    return pb::ExitCode(e.stage());
  } catch (const std::exception& e) {
    Log(std::string(pb::StageName(stage)) + ": " + e.what());
    return pb::ExitCode(stage);
  }
  return 0;
}
