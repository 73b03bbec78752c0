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

#include "perturbench/options.h"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "perturbench/error.h"
#include "perturbench/ingest.h"
#include "perturbench/text.h"

namespace perturbench {
namespace {

const std::string kDataDir = PERTURBENCH_DATA_DIR;

const SynonymTable& Synonyms() {
  static const SynonymTable table =
      SynonymTable::Load(kDataDir + "/synonyms.tsv");
  return table;
}

std::multiset<std::string> AsMultiset(const OptionSet& o) {
  return {o.entries.begin(), o.entries.end()};
}

bool AllDistinct(const OptionSet& o) {
  std::set<std::string> seen;
  for (const auto& e : o.entries) seen.insert(ToLowerAscii(e));
  return seen.size() == o.entries.size();
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

TEST(GenTfTest, ThreeCanonicalTextsAndTruth) {
  const std::multiset<std::string> canonical = {"True", "False",
                                                "Unable to determine"};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const OptionSet t = GenTf(true, seed);
    EXPECT_EQ(AsMultiset(t), canonical);
    EXPECT_EQ(t.answer_text(), "True");
    const OptionSet f = GenTf(false, seed);
    EXPECT_EQ(AsMultiset(f), canonical);
    EXPECT_EQ(f.answer_text(), "False");
  }
}

TEST(GenTfTest, KnownRenderingsAreReachable) {
  bool true_first = false;
  bool false_second = false;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const OptionSet t = GenTf(true, seed);
    true_first |= t.Render() == "(A) True (B) False (C) Unable to determine" &&
                  t.answer_index == 0;
    const OptionSet f = GenTf(false, seed);
    false_second |= f.answer_index == 1 && f.entries[1] == "False";
  }
  EXPECT_TRUE(true_first);
  EXPECT_TRUE(false_second);
}

TEST(NumericTest, ParsesAnswerForms) {
  EXPECT_DOUBLE_EQ(ParseNumeric("36")->value, 36);
  EXPECT_DOUBLE_EQ(ParseNumeric("-15")->value, -15);
  EXPECT_TRUE(ParseNumeric("+30")->explicit_plus);
  EXPECT_DOUBLE_EQ(ParseNumeric("$1,200")->value, 1200);
  EXPECT_TRUE(ParseNumeric("32%")->percent);
  EXPECT_EQ(ParseNumeric("0.25")->decimals, 2);
  EXPECT_DOUBLE_EQ(ParseNumeric("8/25")->value, 0.32);
  EXPECT_FALSE(ParseNumeric("25 students").has_value());
  EXPECT_FALSE(ParseNumeric("abc").has_value());
  EXPECT_FALSE(ParseNumeric("").has_value());
}

TEST(RouteTest, MultiAnswersRouteByShape) {
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "8/25"), AnswerType::kNumber);
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "8"), AnswerType::kNumber);
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "false"), AnswerType::kTF);
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "Yes"), AnswerType::kTF);
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "apples"), AnswerType::kWord);
  EXPECT_EQ(RouteAnswerType(AnswerType::kMulti, "25 students"),
            AnswerType::kText);
  EXPECT_EQ(RouteAnswerType(AnswerType::kWord, "pine cone"), AnswerType::kText);
  EXPECT_EQ(RouteAnswerType(AnswerType::kNumber, "x"), AnswerType::kNumber);
}

TEST(GenNumberTest, FiveDistinctOptionsAroundAnswer) {
  for (const std::string answer :
       {"36", "0", "-15", "+30", "15", "0.25", "32%", "$1,200", "8/25", "7"}) {
    const double value = ParseNumeric(answer)->value;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const OptionSet o = GenNumber(answer, seed);
      ASSERT_EQ(o.entries.size(), 5u) << answer;
      EXPECT_EQ(o.answer_text(), answer);
      EXPECT_TRUE(AllDistinct(o)) << o.Render();
      for (std::size_t i = 0; i < o.entries.size(); ++i) {
        if (i == o.answer_index) continue;
        const auto parsed = ParseNumeric(o.entries[i]);
        ASSERT_TRUE(parsed.has_value()) << o.entries[i];
        EXPECT_NE(parsed->value, value) << answer << " vs " << o.entries[i];
      }
    }
  }
}

TEST(GenNumberTest, DeterministicAndSeedSensitive) {
  EXPECT_EQ(GenNumber("36", 7), GenNumber("36", 7));
  bool differs = false;
  for (std::uint64_t seed = 1; seed < 20 && !differs; ++seed) {
    differs = !(GenNumber("36", seed) == GenNumber("36", 0));
  }
  EXPECT_TRUE(differs);
}

TEST(GenNumberTest, KeepsAnswerFormatting) {
  const OptionSet o = GenNumber("32%", 3);
  for (const auto& e : o.entries) EXPECT_TRUE(EndsWith(e, "%")) << e;
  const OptionSet f = GenNumber("8/25", 3);
  for (const auto& e : f.entries) {
    EXPECT_NE(e.find('/'), std::string::npos) << e;
  }
}

TEST(GenNumberTest, NonNumericIsTypeMismatch) {
  EXPECT_EQ(CodeOf([] { GenNumber("many", 1); }), ErrorCode::kTypeMismatch);
}

constexpr char kBabi16Passage[] =
    "Lily is a swan. Bernhard is a lion. Greg is a swan. Bernhard is white. "
    "Brian is a lion. Lily is gray. Julius is a rhino. Julius is gray. Greg is "
    "gray. What color is Brian?";

TEST(GenWordTest, Babi16DistractorsComeFromPassage) {
  std::set<std::string> passage_words;
  for (const auto& t : Tokenize(kBabi16Passage)) {
    passage_words.insert(ToLowerAscii(StripPunctuation(t)));
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const OptionSet o = GenWord("white", kBabi16Passage, BuiltinPosTagger(),
                                Synonyms(), seed);
    ASSERT_EQ(o.entries.size(), 5u);
    EXPECT_EQ(o.answer_text(), "white");
    EXPECT_TRUE(AllDistinct(o));
    bool has_gray = false;
    for (std::size_t i = 0; i < 5; ++i) {
      if (i == o.answer_index) continue;
      EXPECT_TRUE(passage_words.count(o.entries[i])) << o.entries[i];
      has_gray |= o.entries[i] == "gray";
    }
    // gray is the only other adjective, so it is always offered.
    EXPECT_TRUE(has_gray) << o.Render();
  }
}

TEST(GenWordTest, SamePosPreferredThenFallback) {
  const std::string context = "The red and blue boxes sat near the door.";
  const OptionSet o =
      GenWord("green", context, BuiltinPosTagger(), Synonyms(), 4);
  std::set<std::string> picked(o.entries.begin(), o.entries.end());
  EXPECT_TRUE(picked.count("red"));
  EXPECT_TRUE(picked.count("blue"));
  EXPECT_EQ(picked.size(), 5u);
}

TEST(GenWordTest, SynonymFallbackAndFailure) {
  const OptionSet o = GenWord("discovery", "", BuiltinPosTagger(), Synonyms(), 2);
  EXPECT_EQ(o.entries.size(), 5u);
  EXPECT_EQ(o.answer_text(), "discovery");
  const SynonymTable empty;
  EXPECT_EQ(CodeOf([&] {
              GenWord("discovery", "a b", BuiltinPosTagger(), empty, 1);
            }),
            ErrorCode::kGenerationFailed);
}

TEST(GenWordTest, DiscoveryPrefersNouns) {
  const std::string context =
      "The action of thinking led to reflection and a careful deciding "
      "process about the discovery of the world.";
  const OptionSet o =
      GenWord("discovery", context, BuiltinPosTagger(), Synonyms(), 9);
  const std::vector<std::string> tags = BuiltinPosTags(o.entries);
  std::size_t nouns = 0;
  for (const auto& t : tags) nouns += t == "NOUN";
  // action, reflection, process, world, discovery are nouns in context.
  EXPECT_EQ(nouns, 5u) << o.Render();
}

TEST(FormulaTest, DetectsArithmeticSpans) {
  const auto f = FindFormulas("Janet sells 16-3-4=9 duck eggs a day");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].operands, (std::vector<double>{16, 3, 4}));
  EXPECT_EQ(f[0].ops, (std::vector<char>{'-', '-'}));
  EXPECT_DOUBLE_EQ(f[0].result, 9);
  const auto g = FindFormulas("He beats 20*.8=16 people");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].operands[1], 0.8);
  EXPECT_TRUE(FindFormulas("no arithmetic 42 here").empty());
  EXPECT_DOUBLE_EQ(EvaluateFormula({2, 3, 4}, {'+', '*'}), 14);
  EXPECT_DOUBLE_EQ(EvaluateFormula({4, 4, 10}, {'-', '-'}), -10);
  EXPECT_DOUBLE_EQ(EvaluateFormula({20, 2, 5}, {'/', '-'}), 5);
}

const std::vector<std::string> kSiblings = {
    "He beats 20*.8=16 people",
    "The number of cats remaining on the rock became 50-20=30."};

TEST(GenTextTest, OptionInvariantsHoldAcrossSeeds) {
  const std::string answer = "So he loses to 20-16=4 people";
  int none = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const OptionSet o = GenText(answer, kSiblings, Synonyms(), seed, 0.2);
    ASSERT_EQ(o.entries.size(), 5u);
    EXPECT_TRUE(AllDistinct(o)) << o.Render();
    const auto n = std::count(o.entries.begin(), o.entries.end(), answer);
    if (o.answer_text() == kNoneOfTheOthers) {
      ++none;
      EXPECT_EQ(n, 0);
      EXPECT_EQ(o.answer_index, 4u);
    } else {
      EXPECT_EQ(n, 1);
      EXPECT_EQ(o.answer_text(), answer);
    }
    EXPECT_EQ(GenText(answer, kSiblings, Synonyms(), seed, 0.2), o);
  }
  EXPECT_GT(none, 0);
  EXPECT_LT(none, 300);
}

TEST(GenTextTest, NoneOfTheOthersRate) {
  // Binomial(2000, 0.2): mean 400, sd 17.9; bounds at +-4.5 sd.
  int fired = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    fired += GenText("A step with 2+2=4 here", {}, Synonyms(), seed, 0.2)
                 .answer_text() == kNoneOfTheOthers;
  }
  EXPECT_GE(fired, 320);
  EXPECT_LE(fired, 480);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_NE(GenText("x 1+1=2", {}, Synonyms(), seed, 0.0).answer_text(),
              kNoneOfTheOthers);
  }
}

TEST(GenTextTest, JanetRealizationShape) {
  // Find a seed where the true answer is withdrawn and check that formula
  // alterations are present and arithmetic-consistent or result-shifted.
  const std::string answer = "Janet sells 16-3-4=9 duck eggs a day";
  bool found = false;
  for (std::uint64_t seed = 0; seed < 400 && !found; ++seed) {
    const OptionSet o = GenText(answer, {}, Synonyms(), seed, 0.2);
    if (o.answer_text() != kNoneOfTheOthers) continue;
    for (std::size_t i = 0; i + 1 < o.entries.size(); ++i) {
      const auto f = FindFormulas(o.entries[i]);
      if (f.size() == 1 && StartsWith(o.entries[i], "Janet sells ") &&
          f[0].operands != std::vector<double>{16, 3, 4} &&
          EvaluateFormula(f[0].operands, f[0].ops) == f[0].result) {
        found = true;
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(GenTextTest, FormulaEditsNeverEqualTruth) {
  const std::string answer = "So he loses to 20-16=4 people";
  std::set<std::string> all;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const OptionSet o = GenText(answer, kSiblings, Synonyms(), seed, 0.0);
    for (std::size_t i = 0; i < o.entries.size(); ++i) {
      if (i != o.answer_index) {
        EXPECT_NE(o.entries[i], answer);
        all.insert(o.entries[i]);
      }
    }
  }
  // Word-order edit and sibling formula swap from the reference options.
  EXPECT_TRUE(all.count("So he to loses 20-16=4 people"));
  EXPECT_TRUE(all.count("So he loses to 20*0.8=16 people"));
  EXPECT_TRUE(all.count(kSiblings[1]));
}

TEST(GenTextTest, PlainSentenceFallsBackToWordEdits) {
  const OptionSet o =
      GenText("The groundhog sees its shadow", {}, Synonyms(), 5, 0.0);
  EXPECT_EQ(o.entries.size(), 5u);
  EXPECT_TRUE(AllDistinct(o));
  for (const auto& e : o.entries) EXPECT_TRUE(FindFormulas(e).empty());
}

TEST(OrderVariantsTest, ThreeOptionsGiveAllPermutations) {
  const OptionSet o = GenTf(false, 1);
  const auto v = OrderVariants(o, 6, 3);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v[0].permutation, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(v[0].options, o);
  std::set<std::vector<std::size_t>> perms;
  for (const auto& x : v) {
    perms.insert(x.permutation);
    EXPECT_EQ(x.options.answer_text(), "False");
  }
  EXPECT_EQ(perms.size(), 6u);
}

TEST(OrderVariantsTest, FiveOptionsDistinctSeeded) {
  const OptionSet o = GenNumber("36", 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = OrderVariants(o, 6, seed);
    ASSERT_EQ(v.size(), 6u);
    std::set<std::vector<std::size_t>> perms;
    std::set<std::vector<std::string>> renders;
    for (const auto& x : v) {
      perms.insert(x.permutation);
      renders.insert(x.options.entries);
      EXPECT_EQ(x.options.answer_text(), "36");
    }
    EXPECT_EQ(perms.size(), 6u);
    EXPECT_EQ(renders.size(), 6u);
    EXPECT_EQ(v[0].options, o);
  }
}

TEST(OrderVariantsTest, SingleAndTooMany) {
  const OptionSet o = GenTf(true, 0);
  const auto one = OrderVariants(o, 1, 9);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].options, o);
  EXPECT_EQ(CodeOf([&] { OrderVariants(o, 7, 0); }),
            ErrorCode::kTooManyVariants);
}

std::vector<DataPrimitive> Load(const std::string& mapping,
                                const std::string& fixture) {
  const SchemaMapping m =
      LoadSchemaMapping(kDataDir + "/mappings/" + mapping + ".toml");
  return IngestRecords(ReadRawRecords(kDataDir + "/fixtures/" + fixture, m), m,
                       "");
}

std::vector<DataPrimitive> AllFixtures() {
  std::vector<DataPrimitive> all;
  for (const auto& [m, f] : std::vector<std::pair<std::string, std::string>>{
           {"strategyqa", "strategyqa.json"},
           {"aqua", "aqua.jsonl"},
           {"creak", "creak.jsonl"},
           {"noahqa", "noahqa.json"},
           {"gsm8k", "gsm8k.jsonl"},
           {"babi15", "babi15.txt"},
           {"babi16", "babi16.txt"}}) {
    auto ps = Load(m, f);
    all.insert(all.end(), ps.begin(), ps.end());
  }
  return all;
}

TEST(FillOptionsTest, EveryFixtureValidatesAndProvidedPassThrough) {
  auto ps = AllFixtures();
  OptionGenConfig config;
  config.seed = 11;
  config.synonyms = std::make_shared<SynonymTable>(Synonyms());
  FillOptions(ps, config);
  for (const DataPrimitive& p : ps) {
    EXPECT_TRUE(ValidatePrimitive(p).empty()) << p.id;
    if (p.dataset == "aqua") {
      EXPECT_EQ(p.options->entries,
                (std::vector<std::string>{"-30", "+30", "0", "15", "-15"}));
    }
    if (p.id == "noahqa-1-q2") {
      EXPECT_EQ(p.options->entries.size(), 5u);
      EXPECT_EQ(p.options->answer_text(), "8/25");
    }
    if (p.dataset == "strategyqa") {
      EXPECT_EQ(p.options->answer_text(), "False");
    }
  }
}

TEST(FillOptionsTest, IndependentOfInputOrder) {
  OptionGenConfig config;
  config.seed = 5;
  config.synonyms = std::make_shared<SynonymTable>(Synonyms());
  auto forward = AllFixtures();
  auto backward = forward;
  std::reverse(backward.begin(), backward.end());
  FillOptions(forward, config);
  FillOptions(backward, config);
  std::map<std::string, OptionSet> by_id;
  for (const auto& p : forward) by_id[p.id] = *p.options;
  for (const auto& p : backward) EXPECT_EQ(*p.options, by_id.at(p.id)) << p.id;
}

TEST(FillOptionsTest, ParallelMatchesSerialReference) {
  OptionGenConfig config;
  config.seed = 19;
  config.synonyms = std::make_shared<SynonymTable>(Synonyms());
  auto parallel = AllFixtures();
  auto serial = parallel;
  FillOptions(parallel, config);
  FillOptionsSerial(serial, config);
  ASSERT_EQ(parallel.size(), serial.size());
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    EXPECT_EQ(parallel[i].options, serial[i].options) << parallel[i].id;
  }
}

TEST(FillOptionsTest, BadTruthValueIsTypeMismatch) {
  DataPrimitive p;
  p.id = "x-1";
  p.question = "Is it?";
  p.answer = "maybe";
  p.answer_type = AnswerType::kTF;
  std::vector<DataPrimitive> ps = {p};
  EXPECT_EQ(CodeOf([&] { FillOptions(ps, OptionGenConfig{}); }),
            ErrorCode::kTypeMismatch);
}

}  // namespace
}  // namespace perturbench
