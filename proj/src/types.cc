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

#include "perturbench/types.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "perturbench/error.h"
#include "perturbench/text.h"

namespace perturbench {

std::string_view AnswerTypeName(AnswerType type) {
  switch (type) {
    case AnswerType::kTF: return "TF";
    case AnswerType::kNumber: return "Number";
    case AnswerType::kWord: return "Word";
    case AnswerType::kText: return "Text";
    case AnswerType::kMulti: return "Multi";
  }
  return "Text";
}

AnswerType ParseAnswerType(std::string_view name) {
  const std::string lower = ToLowerAscii(name);
  if (lower == "tf" || lower == "t/f") return AnswerType::kTF;
  if (lower == "number" || lower == "numbers") return AnswerType::kNumber;
  if (lower == "word") return AnswerType::kWord;
  if (lower == "text") return AnswerType::kText;
  if (lower == "multi") return AnswerType::kMulti;
  throw Error(ErrorCode::kParseError,
              "unknown answer type '" + std::string(name) + "'");
}

std::vector<std::string> OptionSet::labels() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out.emplace_back(1, Label(i));
  }
  return out;
}

std::string OptionSet::Render() const {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out += ' ';
    out += '(';
    out += Label(i);
    out += ") ";
    out += entries[i];
  }
  return out;
}

OptionSet RemapAnswer(const OptionSet& options,
                      std::span<const std::size_t> permutation) {
  const std::size_t n = options.entries.size();
  if (permutation.size() != n) {
    throw Error(ErrorCode::kInvalidPermutation,
                "permutation has " + std::to_string(permutation.size()) +
                    " entries for " + std::to_string(n) + " options");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t src : permutation) {
    if (src >= n || seen[src]) {
      throw Error(ErrorCode::kInvalidPermutation,
                  "permutation is not a bijection");
    }
    seen[src] = true;
  }
  OptionSet out;
  out.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.entries.push_back(options.entries[permutation[i]]);
    if (permutation[i] == options.answer_index) out.answer_index = i;
  }
  return out;
}

std::vector<std::size_t> InversePermutation(
    std::span<const std::size_t> permutation) {
  std::vector<std::size_t> inverse(permutation.size());
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    if (permutation[i] >= permutation.size()) {
      throw Error(ErrorCode::kInvalidPermutation, "index out of range");
    }
    inverse[permutation[i]] = i;
  }
  return inverse;
}

std::vector<Violation> ValidatePrimitive(const DataPrimitive& p,
                                         bool require_options) {
  std::vector<Violation> out;
  if (p.id.empty()) out.push_back({"id", "id must be non-empty"});
  if (Trim(p.question).empty()) {
    out.push_back({"question", "question must be non-empty"});
  }
  if (p.passage && Trim(*p.passage).empty()) {
    out.push_back({"passage", "passage, when present, must be non-empty"});
  }
  if (!p.options) {
    if (require_options) out.push_back({"options", "options missing"});
    return out;
  }
  const OptionSet& o = *p.options;
  if (o.entries.size() < kMinOptions || o.entries.size() > kMaxOptions) {
    out.push_back({"options", "option count must be between 3 and 6"});
  }
  if (o.answer_index >= o.entries.size()) {
    out.push_back({"answer_index", "answer_index out of range"});
  }
  std::set<std::string> normalized;
  for (const std::string& e : o.entries) {
    if (!normalized.insert(NormalizeWhitespace(e)).second) {
      out.push_back({"options", "duplicate options"});
      break;
    }
  }
  return out;
}

std::vector<Violation> ValidateGroups(std::span<const DataPrimitive> items) {
  std::vector<Violation> out;
  std::map<std::string, const DataPrimitive*> first;
  for (const DataPrimitive& p : items) {
    if (!p.group_id) continue;
    auto [it, inserted] = first.emplace(*p.group_id, &p);
    if (!inserted && it->second->passage != p.passage) {
      out.push_back({"group_id", "group '" + *p.group_id +
                                     "' mixes passages (" + p.id + ")"});
    }
  }
  return out;
}

std::string_view PerturbationOpName(PerturbationOp op) {
  switch (op) {
    case PerturbationOp::kCharRepeat: return "CharRepeat";
    case PerturbationOp::kCharDelete: return "CharDelete";
    case PerturbationOp::kCharInsert: return "CharInsert";
    case PerturbationOp::kWordInsert: return "WordInsert";
    case PerturbationOp::kWordDelete: return "WordDelete";
    case PerturbationOp::kWordReplace: return "WordReplace";
    case PerturbationOp::kVisualReplace: return "VisualReplace";
  }
  return "WordReplace";
}

PerturbationOp ParsePerturbationOp(std::string_view name) {
  for (PerturbationOp op :
       {PerturbationOp::kCharRepeat, PerturbationOp::kCharDelete,
        PerturbationOp::kCharInsert, PerturbationOp::kWordInsert,
        PerturbationOp::kWordDelete, PerturbationOp::kWordReplace,
        PerturbationOp::kVisualReplace}) {
    if (PerturbationOpName(op) == name) return op;
  }
  throw Error(ErrorCode::kParseError,
              "unknown perturbation op '" + std::string(name) + "'");
}

std::string_view AttackMethodName(AttackMethod method) {
  switch (method) {
    case AttackMethod::kCharRepeat: return "char_repeat";
    case AttackMethod::kCharDelete: return "char_delete";
    case AttackMethod::kCharInsert: return "char_insert";
    case AttackMethod::kWordInsert: return "word_insert";
    case AttackMethod::kWordDelete: return "word_delete";
    case AttackMethod::kWordReplace: return "word_replace";
    case AttackMethod::kVisual: return "visual";
  }
  return "word_replace";
}

AttackMethod ParseAttackMethod(std::string_view name) {
  for (AttackMethod m :
       {AttackMethod::kCharRepeat, AttackMethod::kCharDelete,
        AttackMethod::kCharInsert, AttackMethod::kWordInsert,
        AttackMethod::kWordDelete, AttackMethod::kWordReplace,
        AttackMethod::kVisual}) {
    if (AttackMethodName(m) == name) return m;
  }
  throw Error(ErrorCode::kParseError,
              "unknown attack method '" + std::string(name) + "'");
}

bool IsWordLevel(AttackMethod method) {
  return method == AttackMethod::kWordInsert ||
         method == AttackMethod::kWordDelete ||
         method == AttackMethod::kWordReplace;
}

void AttackConfig::Validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must lie in [0, 1]");
  }
  if (method == AttackMethod::kVisual) {
    if (!visual_ratio) {
      throw Error(ErrorCode::kInvalidArgument,
                  "visual attack requires a visual ratio");
    }
    const double r = *visual_ratio;
    if (r != 0.1 && r != 0.5 && r != 0.9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "visual ratio must be one of 0.1, 0.5, 0.9");
    }
  } else if (visual_ratio) {
    throw Error(ErrorCode::kInvalidArgument,
                "visual ratio is only valid for the visual attack");
  }
}

namespace {

std::string FormatShort(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string AttackConfig::ConditionName() const {
  std::string out(AttackMethodName(method));
  out += '@';
  out += FormatShort(rho);
  if (visual_ratio) {
    out += "~r";
    out += FormatShort(*visual_ratio);
  }
  return out;
}

std::size_t PerturbedSample::PerturbedCount() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const PerturbationRecord& r) { return !r.skipped; }));
}

double PerturbedSample::PerturbedFraction() const {
  if (clean_word_count == 0) return 0.0;
  return static_cast<double>(PerturbedCount()) /
         static_cast<double>(clean_word_count);
}

DataPrimitive PerturbedSample::Materialize(const DataPrimitive& clean) const {
  if (clean.id != base_id) {
    throw Error(ErrorCode::kPairingError,
                "perturbed sample " + base_id + " applied to " + clean.id);
  }
  DataPrimitive out = clean;
  if (question_target) {
    out.question = perturbed_passage;
  } else {
    out.passage = perturbed_passage;
  }
  return out;
}

std::string PerturbedSample::Reconstruct() const {
  const std::vector<std::string> tokens = Tokenize(perturbed_passage);
  std::map<std::size_t, const PerturbationRecord*> by_index;
  for (const PerturbationRecord& r : records) {
    if (!r.skipped) by_index[r.word_index] = &r;
  }
  std::vector<std::string> clean;
  clean.reserve(clean_word_count);
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < clean_word_count; ++j) {
    auto it = by_index.find(j);
    if (it == by_index.end()) {
      if (cursor >= tokens.size()) {
        throw Error(ErrorCode::kParseError, "perturbed text too short");
      }
      clean.push_back(tokens[cursor++]);
      continue;
    }
    const PerturbationRecord& r = *it->second;
    const std::size_t width =
        r.replacement ? Tokenize(*r.replacement).size() : 0;
    if (cursor + width > tokens.size()) {
      throw Error(ErrorCode::kParseError, "perturbed text too short");
    }
    cursor += width;
    clean.push_back(r.original);
  }
  if (cursor != tokens.size()) {
    throw Error(ErrorCode::kParseError, "perturbed text has extra tokens");
  }
  return JoinTokens(clean);
}

}  // namespace perturbench
