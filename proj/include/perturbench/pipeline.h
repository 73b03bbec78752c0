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

#ifndef PERTURBENCH_PIPELINE_H_
#define PERTURBENCH_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "perturbench/attack.h"
#include "perturbench/error.h"
#include "perturbench/evaluation.h"
#include "perturbench/gateway.h"
#include "perturbench/json_io.h"
#include "perturbench/pattern.h"
#include "perturbench/types.h"

namespace perturbench {

struct DatasetSpec {
  std::string name;
  std::filesystem::path input;
  std::filesystem::path mapping;
};

// Everything that determines a run. Relative paths in a config file are
// resolved against the file's directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::vector<DatasetSpec> datasets;
  std::size_t limit = 0;  // primitives per dataset, 0 = all

  std::vector<AttackMethod> attack_methods;
  std::vector<double> rhos = {0.3};
  std::vector<double> visual_ratios = {0.3};  // visual attacks only

  // The first id is the prompt of every condition outside the prompt axis.
  // The prompt axis runs when two or more ids are given.
  std::vector<int> prompt_ids = {kDefaultPromptId};
  std::size_t order_variants = 6;  // the order axis runs when >= 2
  double none_rate = 0.2;

  std::string model = "mock:content-matcher";
  std::string endpoint;
  std::size_t concurrency = 4;
  double rpm = 0.0;
  std::filesystem::path cache_dir;  // default <output_dir>/cache
  std::filesystem::path output_dir = "runs";

  std::vector<AttackMethod> rti_methods;  // empty skips RTI
  int rti_repeats = 1;
  double rti_stride = 0.1;

  std::vector<CategoryKind> categories = {CategoryKind::kPos,
                                          CategoryKind::kPosition};
  std::filesystem::path annotations;  // optional sidecar
  int forest_trees = 100;
  int forest_depth = 8;
  bool svg = false;

  std::filesystem::path synonyms;    // default: bundled table
  std::filesystem::path homoglyphs;  // default: bundled table
};

// key = value lines, '#' comments. Throws ParseError on unknown keys or bad
// values. "dataset = name, raw-file[, mapping-file]" may repeat; without a
// mapping file, <mapping_dir>/<name>.toml is used.
RunConfig ParseRunConfig(std::string_view text,
                         const std::filesystem::path& base_dir = {});
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Throws InvalidArgument naming the first broken rule.
void ValidateRunConfig(const RunConfig& config);

// Canonical text of the settings that affect results. Output and cache
// locations, concurrency and rpm are left out.
std::string CanonicalConfig(const RunConfig& config);
// First 16 hex digits of the SHA-256 of CanonicalConfig.
std::string ConfigDigest(const RunConfig& config);

enum class PipelineStage {
  kConfig,
  kIngest,
  kOptions,
  kAttack,
  kRun,
  kInterpret,
  kScore,
  kRti,
  kAnalyze,
};

std::string_view StageName(PipelineStage stage);
// 2 config/usage, 10 ingest, 11 options, 12 attack, 13 run, 14 interpret,
// 15 score, 16 rti, 17 analyze.
int ExitCode(PipelineStage stage);

// A library error tagged with the stage it happened in.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(PipelineStage stage, const std::string& what)
      : std::runtime_error(std::string(StageName(stage)) + ": " + what),
        stage_(stage) {}
  PipelineStage stage() const { return stage_; }

 private:
  PipelineStage stage_;
};

// ---- Stage building blocks, shared by the pipeline and the CLI. ----

std::shared_ptr<const SynonymTable> LoadSynonyms(
    const std::filesystem::path& path = {});
std::shared_ptr<const HomoglyphTable> LoadHomoglyphs(
    const std::filesystem::path& path = {});

std::vector<DataPrimitive> IngestDataset(const DatasetSpec& dataset,
                                         const std::string& prompt,
                                         std::size_t limit = 0);

// Clean primitive plus, for attacked inputs, its perturbed fraction.
struct QueryItem {
  DataPrimitive primitive;
  double perturbed_fraction = 0.0;
};

// Reads either a primitives file or a perturbed-samples file (rows carrying
// the attacked "primitive").
std::vector<QueryItem> ReadQueryItems(const std::filesystem::path& path);

void WritePerturbed(const std::filesystem::path& path,
                    const std::vector<PerturbedSample>& samples,
                    const std::vector<DataPrimitive>& clean);

struct PerturbedRow {
  PerturbedSample sample;
  DataPrimitive attacked;
};
std::vector<PerturbedRow> ReadPerturbed(const std::filesystem::path& path);

std::vector<Transcript> RunQueries(const std::vector<QueryItem>& items,
                                   const std::string& condition,
                                   const std::optional<std::string>& prompt,
                                   Gateway& gateway);

void WriteTranscripts(const std::filesystem::path& path,
                      const std::vector<Transcript>& transcripts);
std::vector<Transcript> ReadTranscripts(const std::filesystem::path& path);

// Re-extracts every response. Rows: {id, answer, match}.
std::vector<Json> InterpretTranscripts(const std::vector<Transcript>& transcripts);

// Accepts transcripts or interpreted answer rows.
std::vector<AnswerRow> ReadAnswerRows(const std::filesystem::path& path);

// Flip label per sample: clean answer differs from the attacked one.
std::vector<bool> FlipLabels(const std::vector<PerturbedRow>& rows,
                             const std::vector<AnswerRow>& clean,
                             const std::vector<AnswerRow>& attacked);

// The clean primitive behind a perturbed row, rebuilt from its records.
DataPrimitive CleanFromPerturbed(const PerturbedRow& row);

std::vector<PatternReport> AnalyzeRows(
    const std::vector<PerturbedRow>& rows, const std::vector<bool>& flipped,
    const std::vector<CategoryKind>& kinds,
    std::shared_ptr<const AnnotationIndex> sidecar,
    const std::string& condition, const ForestParams& params);

struct PipelineHooks {
  // Replaces the HTTP transport (tests).
  std::shared_ptr<Transport> transport;
  std::function<void(std::string_view)> log;
};

struct PipelineResult {
  std::filesystem::path run_dir;
  std::vector<std::string> ran;      // artifacts produced this time
  std::vector<std::string> skipped;  // artifacts found and reused
  GatewayStats gateway;
  std::string summary;  // human-readable tables
};

// Runs every stage into <output_dir>/<digest>. Existing artifacts are
// reused, so an interrupted run resumes where it stopped. Throws
// StageFailure.
PipelineResult RunPipeline(const RunConfig& config,
                           const PipelineHooks& hooks = {});

}  // namespace perturbench

#endif  // PERTURBENCH_PIPELINE_H_
