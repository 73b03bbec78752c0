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

#ifndef PERTURBENCH_EVALUATION_H_
#define PERTURBENCH_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perturbench/attack.h"
#include "perturbench/gateway.h"
#include "perturbench/json_io.h"
#include "perturbench/types.h"

namespace perturbench {

// One model answer for one primitive. choice == nullopt is Unanswered.
struct AnswerRow {
  std::string id;
  std::optional<std::size_t> choice;

  bool operator==(const AnswerRow&) const = default;
};

// Flattens transcripts into per-primitive rows, preserving order.
std::vector<AnswerRow> AnswersFromTranscripts(
    std::span<const Transcript> transcripts);

// id -> gold option index. Throws InvalidArgument for primitives without
// options.
std::map<std::string, std::size_t> GoldIndex(
    std::span<const DataPrimitive> primitives);

// Percent of rows that are wrong or Unanswered. Throws EmptyDataset when
// rows is empty and PairingError when an id has no gold entry.
double ErrorRate(std::span<const AnswerRow> rows,
                 const std::map<std::string, std::size_t>& gold);

// Percent of samples whose answer differs between the runs. Two Unanswered
// outputs are equal. Throws PairingError unless ids match position by
// position, EmptyDataset when both are empty.
double AnswerChangedRate(std::span<const AnswerRow> clean,
                         std::span<const AnswerRow> attacked);

struct OutcomeRow {
  std::string id;
  std::optional<std::size_t> answer;
  std::size_t gold = 0;
  bool correct = false;
  std::optional<bool> changed;  // set only when a clean run is paired
};

struct EvalReport {
  std::string dataset;
  std::string condition;
  std::size_t n = 0;
  double er_percent = 0.0;
  std::optional<double> acr_percent;
  std::vector<OutcomeRow> rows;
};

// ACR is filled when clean is supplied.
EvalReport Score(const std::string& dataset, const std::string& condition,
                 std::span<const AnswerRow> answers,
                 const std::map<std::string, std::size_t>& gold,
                 std::optional<std::span<const AnswerRow>> clean = {});

Json EvalReportToJson(const EvalReport& report, bool with_rows = false);

enum class ConsistencyAxis { kPrompt, kOptionOrder };

struct ConsistencyReport {
  ConsistencyAxis axis = ConsistencyAxis::kPrompt;
  std::vector<double> accuracies;  // percent, one per variant
  double std_percent = 0.0;        // population standard deviation
};

// Throws InsufficientVariants for fewer than two accuracies.
ConsistencyReport Consistency(ConsistencyAxis axis,
                              std::vector<double> accuracies);


struct RtiStep {
  double rho = 0.0;
  double perturbed_fraction = 0.0;  // of the first realization
  std::optional<std::size_t> answer;
  bool flipped = false;
};

struct RtiRecord {
  std::string sample_id;
  AttackMethod method = AttackMethod::kWordReplace;
  double r = 1.0;
  bool capped = false;
  std::optional<std::size_t> clean_answer;
  std::vector<RtiStep> steps;  // every swept rho, in order
};

Json RtiRecordToJson(const RtiRecord& record);
RtiRecord RtiRecordFromJson(const Json& j);

struct RtiOptions {
  AttackMethod method = AttackMethod::kWordReplace;
  std::uint64_t seed = 0;
  // Realizations per rho; a rho counts as flipped when more than half of
  // them change the answer. One realization is the plain sweep.
  int repeats = 1;
  // Sweep step; 1/stride must be a whole number of steps. The default gives
  // rho = 0.1, 0.2, ..., 1.0.
  double stride = 0.1;
  std::optional<std::string> prompt_override;
};

// Number of rho values swept. Throws InvalidArgument for a stride that does
// not divide 1 or gives more than 100 steps.
int RtiStepCount(const RtiOptions& options);

// Attack config for step k (1-based) and realization j of one sweep. A fresh
// seed per rho, shared by every sample of the sweep.
AttackConfig SweepConfig(const RtiOptions& options, int step, int repeat);

// Runs the sweep for every primitive. Each rho round queries only samples
// that have not flipped yet; samples within a round go through the gateway
// pool in parallel. Each primitive is queried as its own sequence (preamble
// plus its question).
std::vector<RtiRecord> RunRti(std::span<const DataPrimitive> primitives,
                              const Attacker& attacker, Gateway& gateway,
                              const RtiOptions& options);

struct RtiSummary {
  std::map<AttackMethod, double> per_method;  // mean r
  std::map<AttackMethod, std::size_t> counts;
  double average = 0.0;  // mean over the methods present
};

// Throws EmptyDataset when records is empty.
RtiSummary SummarizeRti(std::span<const RtiRecord> records);

}  // namespace perturbench

#endif  // PERTURBENCH_EVALUATION_H_
