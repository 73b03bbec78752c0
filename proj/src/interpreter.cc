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

#include "perturbench/interpreter.h"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "perturbench/text.h"

namespace perturbench {
namespace {

struct Hit {
  std::size_t pos;
  std::size_t index;
};

const std::regex& ParenthesizedRe() {
  static const std::regex re(R"(\(\s*([A-Fa-f])\s*\))");
  return re;
}

// "B)" after a non-alphanumeric boundary, any case.
const std::regex& ClosingParenRe() {
  static const std::regex re(R"((?:^|[^A-Za-z0-9(])([A-Fa-f])\)(?=\s|$|[.,:;]))");
  return re;
}

// "B." or "B:" heading a line, upper case only ("a." is too common in prose).
const std::regex& LineLeadRe() {
  static const std::regex re(R"((?:^|\n)[\s"'*]*([A-F])[.:](?=\s|$))");
  return re;
}

const std::regex& PhraseRe() {
  static const std::regex re(
      R"((?:answer(?:\s+(?:is|would be|should be|will be))?|option|choice)\s*:?\s*([A-F])(?=[\s.,;:!)]|$))",
      std::regex::icase);
  return re;
}

const std::regex& CueRe() {
  static const std::regex re(
      R"(answer\s+(?:is|would be|should be|will be)|answer\s*:|correct\s+(?:option|choice)|option|choice)",
      std::regex::icase);
  return re;
}

const std::vector<std::string>& RefusalCues() {
  static const std::vector<std::string> cues = {
      "none of the given options", "none of the options",
      "none of the choices",       "unable to",
      "cannot determine",          "can't determine",
      "cannot be determined",      "not possible to determine",
      "i cannot answer",           "i can't answer"};
  return cues;
}

std::vector<Hit> Collect(const std::string& text, const std::regex& re,
                         std::size_t n_options, bool letter_is_upper_only) {
  std::vector<Hit> hits;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
       it != std::sregex_iterator(); ++it) {
    const char c = (*it)[1].str()[0];
    if (letter_is_upper_only && !std::isupper(static_cast<unsigned char>(c))) {
      continue;
    }
    const auto index = static_cast<std::size_t>(
        std::toupper(static_cast<unsigned char>(c)) - 'A');
    if (index >= n_options) continue;
    hits.push_back({static_cast<std::size_t>((*it).position(1)), index});
  }
  return hits;
}

std::optional<std::size_t> Choose(const std::vector<Hit>& hits,
                                  const std::vector<std::size_t>& cue_ends) {
  if (hits.empty()) return std::nullopt;
  const bool unanimous =
      std::all_of(hits.begin(), hits.end(),
                  [&](const Hit& h) { return h.index == hits[0].index; });
  if (unanimous) return hits[0].index;
  std::optional<std::size_t> best;
  std::size_t best_gap = std::string::npos;
  for (std::size_t cue : cue_ends) {
    for (const Hit& h : hits) {
      if (h.pos >= cue && h.pos - cue < best_gap) {
        best_gap = h.pos - cue;
        best = h.index;
      }
    }
  }
  return best ? best : std::optional<std::size_t>(hits[0].index);
}

}  // namespace

std::string_view MatchClassName(MatchClass c) {
  switch (c) {
    case MatchClass::kParenthesized: return "parenthesized";
    case MatchClass::kDelimited: return "delimited";
    case MatchClass::kPhrase: return "phrase";
    case MatchClass::kRefusal: return "refusal";
    case MatchClass::kUnmatched: return "unmatched";
  }
  return "unmatched";
}

Extraction ExtractDetailed(std::string_view response, std::size_t n_options) {
  Extraction out;
  out.answer.raw_text = std::string(response);
  const std::string& text = out.answer.raw_text;

  std::vector<std::size_t> cue_ends;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), CueRe());
       it != std::sregex_iterator(); ++it) {
    cue_ends.push_back(static_cast<std::size_t>(it->position() + it->length()));
  }

  auto attempt = [&](std::vector<Hit> hits, MatchClass cls) {
    if (const auto choice = Choose(hits, cue_ends)) {
      out.answer.choice = choice;
      out.match = cls;
      return true;
    }
    return false;
  };
  if (attempt(Collect(text, ParenthesizedRe(), n_options, false),
              MatchClass::kParenthesized)) {
    return out;
  }
  std::vector<Hit> delimited = Collect(text, ClosingParenRe(), n_options, false);
  // A bare letter as the whole reply.
  const std::string bare = StripPunctuation(Trim(text));
  if (bare.size() == 1 && std::isupper(static_cast<unsigned char>(bare[0])) &&
      static_cast<std::size_t>(bare[0] - 'A') < n_options) {
    delimited.push_back({text.find(bare[0]), static_cast<std::size_t>(bare[0] - 'A')});
  }
  const std::vector<Hit> lead = Collect(text, LineLeadRe(), n_options, true);
  delimited.insert(delimited.end(), lead.begin(), lead.end());
  std::sort(delimited.begin(), delimited.end(),
            [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  if (attempt(delimited, MatchClass::kDelimited)) return out;
  if (attempt(Collect(text, PhraseRe(), n_options, true), MatchClass::kPhrase)) {
    return out;
  }
  const std::string lower = ToLowerAscii(text);
  for (const std::string& cue : RefusalCues()) {
    if (lower.find(cue) != std::string::npos) {
      out.match = MatchClass::kRefusal;
      return out;
    }
  }
  return out;
}

ModelAnswer Extract(std::string_view response, std::size_t n_options) {
  return ExtractDetailed(response, n_options).answer;
}

std::size_t InterpretStats::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

double InterpretStats::UnmatchedRate() const {
  const std::size_t t = total();
  if (t == 0) return 0.0;
  return static_cast<double>(
             counts[static_cast<std::size_t>(MatchClass::kUnmatched)]) /
         static_cast<double>(t);
}

}  // namespace perturbench
