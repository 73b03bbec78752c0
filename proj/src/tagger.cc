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

#include "perturbench/tagger.h"

#include <algorithm>
#include <cctype>
#include <string>
#include <unordered_map>

#include "perturbench/text.h"

namespace perturbench {
namespace {

const std::unordered_map<std::string, std::string>& Lexicon() {
  static const auto* lexicon = [] {
    auto* m = new std::unordered_map<std::string, std::string>();
    auto add = [m](const char* tag, std::initializer_list<const char*> words) {
      for (const char* w : words) m->emplace(w, tag);
    };
    add("DET", {"a", "an", "the", "this", "that", "these", "those", "each",
                "every", "some", "any", "no", "all", "both", "either",
                "neither", "another", "such", "which", "what", "whose"});
    add("PRON", {"i", "me", "my", "mine", "myself", "you", "your", "yours",
                 "yourself", "he", "him", "his", "himself", "she", "her",
                 "hers", "herself", "it", "its", "itself", "we", "us", "our",
                 "ours", "ourselves", "they", "them", "their", "theirs",
                 "themselves", "who", "whom", "someone", "something",
                 "anyone", "anything", "everyone", "everything", "nobody",
                 "nothing", "one"});
    add("ADP", {"in", "on", "at", "by", "for", "with", "about", "against",
                "between", "into", "through", "during", "before", "after",
                "above", "below", "from", "up", "down", "of", "off", "over",
                "under", "to", "around", "among", "across", "behind",
                "beyond", "near", "toward", "towards", "upon", "within",
                "without", "via", "per", "since", "until", "like"});
    add("CCONJ", {"and", "or", "but", "nor", "yet", "so"});
    add("SCONJ", {"if", "because", "although", "though", "while", "whereas",
                  "unless", "whether", "than", "once", "as"});
    add("AUX", {"is", "are", "was", "were", "be", "been", "being", "am",
                "do", "does", "did", "have", "has", "had", "will", "would",
                "shall", "should", "can", "could", "may", "might", "must",
                "isn't", "aren't", "wasn't", "weren't", "don't", "doesn't",
                "didn't", "won't", "can't", "couldn't", "shouldn't"});
    add("PART", {"not", "n't", "'s"});
    add("ADV", {"very", "too", "also", "just", "only", "now", "then", "here",
                "there", "when", "where", "why", "how", "often", "never",
                "always", "sometimes", "again", "still", "already", "soon",
                "indeed", "even", "ever", "quite", "rather", "almost",
                "perhaps", "well", "much", "more", "most", "less", "least",
                "away", "back", "together", "instead", "therefore"});
    add("INTJ", {"oh", "yes", "hello", "hi", "wow", "please"});
    add("NUM", {"zero", "one", "two", "three", "four", "five", "six",
                "seven", "eight", "nine", "ten", "eleven", "twelve",
                "twenty", "thirty", "hundred", "thousand", "million",
                "billion", "first", "second", "third"});
    add("ADJ", {"good", "bad", "new", "old", "great", "high", "low", "small",
                "large", "big", "long", "short", "young", "little", "right",
                "wrong", "true", "false", "same", "different", "other",
                "many", "few", "several", "white", "black", "gray", "grey",
                "green", "yellow", "red", "blue", "brown", "pink", "purple",
                "orange", "hot", "cold", "warm", "happy", "sad", "early",
                "late", "easy", "hard", "best", "worst", "better", "worse",
                "strong", "weak", "full", "empty", "open", "free", "sure",
                "able", "irregular", "afraid"});
    add("VERB", {"go", "goes", "went", "gone", "get", "got", "make", "made",
                 "take", "took", "see", "saw", "seen", "know", "knew", "think",
                 "thought", "come", "came", "give", "gave", "find", "found",
                 "tell", "told", "say", "said", "become", "became", "leave",
                 "left", "feel", "felt", "bring", "brought", "begin",
                 "began", "keep", "kept", "hold", "held", "write", "wrote",
                 "stand", "stood", "hear", "heard", "let", "mean", "meant",
                 "set", "meet", "met", "run", "ran", "pay", "paid", "sit",
                 "sat", "speak", "spoke", "lie", "lay", "lead", "led", "read",
                 "grow", "grew", "lose", "lost", "fall", "fell", "send",
                 "sent", "build", "built", "buy", "bought", "eat", "ate",
                 "sell", "sold", "live", "lives", "relies", "rely", "beat",
                 "beats", "loses", "choose", "chose", "wins", "win", "won",
                 "died", "die", "invented", "released", "receive", "received",
                 "range", "wrestles"});
    return m;
  }();
  return *lexicon;
}

bool AllDigitsLike(std::string_view w) {
  bool digit = false;
  for (char c : w) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '+' && c != '/' &&
               c != '%' && c != '$') {
      return false;
    }
  }
  return digit;
}

}  // namespace

std::string BuiltinPosTag(std::string_view token, bool sentence_initial) {
  const std::string core = StripPunctuation(token);
  if (core.empty()) {
    return token.empty() ? std::string(kUnknownTag) : std::string("PUNCT");
  }
  if (AllDigitsLike(core)) return "NUM";
  const std::string lower = ToLowerAscii(core);
  auto it = Lexicon().find(lower);
  if (it != Lexicon().end()) return it->second;
  const bool capital = std::isupper(static_cast<unsigned char>(core[0])) != 0;
  if (capital && !sentence_initial) return "PROPN";
  if (std::any_of(core.begin(), core.end(), [](char c) {
        return !std::isalpha(static_cast<unsigned char>(c)) && c != '-' &&
               c != '\'' && (static_cast<unsigned char>(c) < 0x80);
      })) {
    return "SYM";
  }
  if (EndsWith(lower, "ly") && lower.size() > 4) return "ADV";
  if (EndsWith(lower, "ing") && lower.size() > 4) return "VERB";
  if (EndsWith(lower, "ed") && lower.size() > 3) return "VERB";
  for (const char* suffix : {"ous", "ful", "ive", "able", "ible", "less",
                             "ical", "ic", "ish", "al"}) {
    if (EndsWith(lower, suffix) && lower.size() > std::string_view(suffix).size() + 2) {
      return "ADJ";
    }
  }
  if (capital) return "PROPN";
  return "NOUN";
}

std::vector<std::string> BuiltinPosTags(const std::vector<std::string>& tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  bool initial = true;
  for (const std::string& t : tokens) {
    tags.push_back(BuiltinPosTag(t, initial));
    initial = !t.empty() && (EndsWith(t, ".") || EndsWith(t, "?") ||
                             EndsWith(t, "!"));
  }
  return tags;
}

PosTagger BuiltinPosTagger() { return BuiltinPosTags; }

}  // namespace perturbench
