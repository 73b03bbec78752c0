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

#include "perturbench/evaluation.h"

#include <cmath>
#include <numeric>

#include "perturbench/error.h"
#include "perturbench/rng.h"

namespace perturbench {
namespace {

double Percent(std::size_t count, std::size_t total) {
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

Json ChoiceJson(const std::optional<std::size_t>& c) {
  return c ? Json(*c) : Json(nullptr);
}

std::optional<std::size_t> ChoiceFromJson(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

}  // namespace

std::vector<AnswerRow> AnswersFromTranscripts(
    std::span<const Transcript> transcripts) {
  std::vector<AnswerRow> rows;
  for (const Transcript& t : transcripts) {
    if (t.answers.size() != t.primitive_ids.size()) {
      throw Error(ErrorCode::kPairingError,
                  "transcript " + t.sequence_id + " has " +
                      std::to_string(t.answers.size()) + " answers for " +
                      std::to_string(t.primitive_ids.size()) + " questions");
    }
    for (std::size_t i = 0; i < t.answers.size(); ++i) {
      rows.push_back({t.primitive_ids[i], t.answers[i].choice});
    }
  }
  return rows;
}

std::map<std::string, std::size_t> GoldIndex(
    std::span<const DataPrimitive> primitives) {
  std::map<std::string, std::size_t> gold;
  for (const DataPrimitive& p : primitives) {
    if (!p.options) {
      throw Error(ErrorCode::kInvalidArgument,
                  "primitive " + p.id + " has no options");
    }
    gold[p.id] = p.options->answer_index;
  }
  return gold;
}

double ErrorRate(std::span<const AnswerRow> rows,
                 const std::map<std::string, std::size_t>& gold) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "no answers to score");
  std::size_t wrong = 0;
  for (const AnswerRow& row : rows) {
    auto it = gold.find(row.id);
    if (it == gold.end()) {
      throw Error(ErrorCode::kPairingError, "no gold answer for " + row.id);
    }
    if (row.choice != it->second) ++wrong;
  }
  return Percent(wrong, rows.size());
}

double AnswerChangedRate(std::span<const AnswerRow> clean,
                         std::span<const AnswerRow> attacked) {
  if (clean.size() != attacked.size()) {
    throw Error(ErrorCode::kPairingError,
                std::to_string(clean.size()) + " clean answers vs " +
                    std::to_string(attacked.size()) + " attacked");
  }
  if (clean.empty()) throw Error(ErrorCode::kEmptyDataset, "no answers to pair");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i].id != attacked[i].id) {
      throw Error(ErrorCode::kPairingError,
                  "row " + std::to_string(i) + ": " + clean[i].id + " vs " +
                      attacked[i].id);
    }
    if (clean[i].choice != attacked[i].choice) ++changed;
  }
  return Percent(changed, clean.size());
}

EvalReport Score(const std::string& dataset, const std::string& condition,
                 std::span<const AnswerRow> answers,
                 const std::map<std::string, std::size_t>& gold,
                 std::optional<std::span<const AnswerRow>> clean) {
  EvalReport report;
  report.dataset = dataset;
  report.condition = condition;
  report.n = answers.size();
  report.er_percent = ErrorRate(answers, gold);
  if (clean) report.acr_percent = AnswerChangedRate(*clean, answers);
  for (std::size_t i = 0; i < answers.size(); ++i) {
    OutcomeRow row;
    row.id = answers[i].id;
    row.answer = answers[i].choice;
    row.gold = gold.at(row.id);
    row.correct = row.answer == row.gold;
    if (clean) row.changed = (*clean)[i].choice != row.answer;
    report.rows.push_back(std::move(row));
  }
  return report;
}

Json EvalReportToJson(const EvalReport& report, bool with_rows) {
  Json j = {{"dataset", report.dataset},
            {"condition", report.condition},
            {"n", report.n},
            {"er_percent", report.er_percent},
            {"acr_percent", report.acr_percent ? Json(*report.acr_percent)
                                               : Json(nullptr)}};
  if (with_rows) {
    Json rows = Json::array();
    for (const OutcomeRow& r : report.rows) {
      Json row = {{"id", r.id},
                  {"answer", ChoiceJson(r.answer)},
                  {"gold", r.gold},
                  {"correct", r.correct}};
      if (r.changed) row["changed"] = *r.changed;
      rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
  }
  return j;
}

ConsistencyReport Consistency(ConsistencyAxis axis,
                              std::vector<double> accuracies) {
  if (accuracies.size() < 2) {
    throw Error(ErrorCode::kInsufficientVariants,
                "consistency needs at least two variants, got " +
                    std::to_string(accuracies.size()));
  }
  const double n = static_cast<double>(accuracies.size());
  // Shifted by the first value so identical accuracies give exactly 0.
  const double base = accuracies.front();
  double mean = 0.0;
  for (double a : accuracies) mean += (a - base) / n;
  double ss = 0.0;
  for (double a : accuracies) ss += (a - base - mean) * (a - base - mean);
  ConsistencyReport report;
  report.axis = axis;
  report.accuracies = std::move(accuracies);
  report.std_percent = std::sqrt(ss / n);
  return report;
}

Json RtiRecordToJson(const RtiRecord& record) {
  Json steps = Json::array();
  for (const RtiStep& s : record.steps) {
    steps.push_back({{"rho", s.rho},
                     {"perturbed_fraction", s.perturbed_fraction},
                     {"answer", ChoiceJson(s.answer)},
                     {"flipped", s.flipped}});
  }
  return {{"id", record.sample_id},
          {"method", AttackMethodName(record.method)},
          {"r", record.r},
          {"capped", record.capped},
          {"clean_answer", ChoiceJson(record.clean_answer)},
          {"steps", std::move(steps)}};
}

RtiRecord RtiRecordFromJson(const Json& j) {
  try {
    RtiRecord r;
    r.sample_id = j.at("id").get<std::string>();
    r.method = ParseAttackMethod(j.at("method").get<std::string>());
    r.r = j.at("r").get<double>();
    r.capped = j.at("capped").get<bool>();
    r.clean_answer = ChoiceFromJson(j.at("clean_answer"));
    for (const Json& s : j.at("steps")) {
      r.steps.push_back({s.at("rho").get<double>(),
                         s.at("perturbed_fraction").get<double>(),
                         ChoiceFromJson(s.at("answer")),
                         s.at("flipped").get<bool>()});
    }
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("rti record: ") + e.what());
  }
}

int RtiStepCount(const RtiOptions& options) {
  if (!(options.stride > 0.0) || options.stride > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "rti stride must be in (0, 1]");
  }
  const double steps = 1.0 / options.stride;
  const long rounded = std::lround(steps);
  if (std::abs(steps - static_cast<double>(rounded)) > 1e-9 || rounded > 100) {
    throw Error(ErrorCode::kInvalidArgument,
                "rti stride must divide 1 into at most 100 steps");
  }
  return static_cast<int>(rounded);
}

AttackConfig SweepConfig(const RtiOptions& options, int step, int repeat) {
  AttackConfig config;
  config.method = options.method;
  config.rho = static_cast<double>(step) / RtiStepCount(options);
  config.seed = rng::Key({options.seed, rng::StageKey(rng::Stage::kSweep),
                          static_cast<std::uint64_t>(step),
                          static_cast<std::uint64_t>(repeat)});
  return config;
}

std::vector<RtiRecord> RunRti(std::span<const DataPrimitive> primitives,
                              const Attacker& attacker, Gateway& gateway,
                              const RtiOptions& options) {
  if (!IsWordLevel(options.method)) {
    throw Error(ErrorCode::kInvalidArgument,
                "rti uses word-level attacks, got " +
                    std::string(AttackMethodName(options.method)));
  }
  if (options.repeats < 1) {
    throw Error(ErrorCode::kInvalidArgument, "rti repeats must be >= 1");
  }
  const int steps = RtiStepCount(options);
  auto prompt_of = [&](const DataPrimitive& p) -> const std::string& {
    return options.prompt_override ? *options.prompt_override : p.prompt;
  };

  std::vector<QuerySequence> clean;
  for (const DataPrimitive& p : primitives) {
    clean.push_back(Assemble({&p, 1}, prompt_of(p), "rti-clean"));
  }
  const std::vector<Transcript> clean_runs = gateway.RunAll(clean);

  std::vector<RtiRecord> records(primitives.size());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    records[i].sample_id = primitives[i].id;
    records[i].method = options.method;
    records[i].clean_answer = clean_runs[i].answers.at(0).choice;
    active.push_back(i);
  }

  for (int step = 1; step <= steps && !active.empty(); ++step) {
    // differ[a] counts realizations that changed the answer of active[a].
    std::vector<int> differ(active.size(), 0);
    std::vector<RtiStep> first(active.size());
    for (int rep = 0; rep < options.repeats; ++rep) {
      const AttackConfig config = SweepConfig(options, step, rep);
      const std::string condition =
          "rti:" + config.ConditionName() + "#" + std::to_string(rep);
      std::vector<QuerySequence> round;
      std::vector<double> fractions;
      for (std::size_t i : active) {
        const DataPrimitive& p = primitives[i];
        const PerturbedSample s = attacker.Apply(p, config);
        const DataPrimitive attacked = s.Materialize(p);
        const double f[] = {s.PerturbedFraction()};
        round.push_back(Assemble({&attacked, 1}, prompt_of(p), condition, f));
        fractions.push_back(f[0]);
      }
      const std::vector<Transcript> runs = gateway.RunAll(round);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const auto answer = runs[a].answers.at(0).choice;
        if (answer != records[active[a]].clean_answer) ++differ[a];
        if (rep == 0) {
          first[a].rho = config.rho;
          first[a].perturbed_fraction = fractions[a];
          first[a].answer = answer;
        }
      }
    }
    std::vector<std::size_t> still;
    for (std::size_t a = 0; a < active.size(); ++a) {
      RtiRecord& rec = records[active[a]];
      first[a].flipped = 2 * differ[a] > options.repeats;
      rec.steps.push_back(first[a]);
      if (first[a].flipped) {
        rec.r = first[a].rho;
        rec.capped = false;
      } else {
        still.push_back(active[a]);
      }
    }
    active = std::move(still);
  }
  for (std::size_t i : active) {
    records[i].r = 1.0;
    records[i].capped = true;
  }
  return records;
}

RtiSummary SummarizeRti(std::span<const RtiRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "no rti records");
  RtiSummary summary;
  std::map<AttackMethod, double> sums;
  for (const RtiRecord& r : records) {
    sums[r.method] += r.r;
    ++summary.counts[r.method];
  }
  double total = 0.0;
  for (const auto& [m, sum] : sums) {
    summary.per_method[m] = sum / static_cast<double>(summary.counts[m]);
    total += summary.per_method[m];
  }
  summary.average = total / static_cast<double>(sums.size());
  return summary;
}

}  // namespace perturbench
