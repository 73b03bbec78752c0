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

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "perturbench/error.h"
#include "test_support.h"

namespace perturbench {
namespace {

namespace fs = std::filesystem;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

fs::path Fixture(const std::string& name) {
  return testing::DataPath("fixtures/" + name);
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pb_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig SmallConfig(const fs::path& out) {
  RunConfig c;
  c.seed = 7;
  c.datasets = {
      {"strategyqa", Fixture("strategyqa.json"),
       testing::DataPath("mappings/strategyqa.toml")},
      {"noahqa", Fixture("noahqa.json"), testing::DataPath("mappings/noahqa.toml")},
      {"babi15", Fixture("babi15.txt"), testing::DataPath("mappings/babi15.toml")}};
  c.attack_methods = {AttackMethod::kWordInsert, AttackMethod::kWordDelete,
                      AttackMethod::kWordReplace};
  c.rhos = {0.3};
  c.prompt_ids = {4, 0};
  c.order_variants = 3;
  c.model = "mock:content-matcher";
  c.output_dir = out;
  c.rti_methods = {AttackMethod::kWordDelete};
  c.forest_trees = 10;
  return c;
}

std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    std::string body = ReadTextFile(e.path());
    if (rel.rfind("transcripts/", 0) == 0) {
      std::string stripped;
      for (const Json& j : ReadJsonLines(e.path())) {
        Json copy = j;
        copy.erase("timestamps");
        stripped += copy.dump() + "\n";
      }
      body = stripped;
    }
    files[rel] = body;
  }
  return files;
}

TEST(ConfigTest, ParsesKeysAndResolvesPaths) {
  const RunConfig c = ParseRunConfig(
      "# demo\n"
      "seed = 9\n"
      "dataset = strategyqa, raw/sqa.json   # trailing comment\n"
      "dataset = mine, raw/x.jsonl, maps/x.toml\n"
      "mapping_dir = maps\n"
      "attack_methods = word_insert, visual\n"
      "rho = 0.1, 0.5\n"
      "visual_ratio = 0.3\n"
      "prompts = 4, 1\n"
      "model = \"mock:threshold-flip:0.3\"\n"
      "rpm = 60\n"
      "categories = pos, position\n"
      "svg = true\n",
      "/base");
  EXPECT_EQ(c.seed, 9u);
  ASSERT_EQ(c.datasets.size(), 2u);
  EXPECT_EQ(c.datasets[0].input, fs::path("/base/raw/sqa.json"));
  EXPECT_EQ(c.datasets[0].mapping, fs::path("/base/maps/strategyqa.toml"));
  EXPECT_EQ(c.datasets[1].mapping, fs::path("/base/maps/x.toml"));
  EXPECT_EQ(c.attack_methods.size(), 2u);
  EXPECT_EQ(c.rhos, (std::vector<double>{0.1, 0.5}));
  EXPECT_EQ(c.prompt_ids, (std::vector<int>{4, 1}));
  EXPECT_EQ(c.model, "mock:threshold-flip:0.3");
  EXPECT_EQ(c.rpm, 60.0);
  EXPECT_TRUE(c.svg);
}

TEST(ConfigTest, RejectsBadInput) {
  EXPECT_EQ(CodeOf([] { ParseRunConfig("colour = red\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseRunConfig("seed = -1\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseRunConfig("seed = 1\nseed = 2\n"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseRunConfig("attack_methods = shout\n"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { ParseRunConfig("just words\n"); }), ErrorCode::kParseError);

  RunConfig c = SmallConfig(FreshDir("validate"));
  c.rhos = {1.5};
  EXPECT_EQ(CodeOf([&] { ValidateRunConfig(c); }), ErrorCode::kInvalidArgument);
  c = SmallConfig(FreshDir("validate"));
  c.datasets[0].mapping = "/nonexistent.toml";
  EXPECT_EQ(CodeOf([&] { ValidateRunConfig(c); }), ErrorCode::kInvalidArgument);
  c = SmallConfig(FreshDir("validate"));
  c.rti_methods = {AttackMethod::kCharDelete};
  EXPECT_EQ(CodeOf([&] { ValidateRunConfig(c); }), ErrorCode::kInvalidArgument);
  c = SmallConfig(FreshDir("validate"));
  c.model = "mock:nobody";
  EXPECT_EQ(CodeOf([&] { ValidateRunConfig(c); }), ErrorCode::kUnknownModel);
}

TEST(ConfigTest, DigestCoversResultSettingsOnly) {
  RunConfig a = SmallConfig("/tmp/a");
  RunConfig b = a;
  b.output_dir = "/tmp/b";
  b.concurrency = 9;
  b.rpm = 30;
  EXPECT_EQ(ConfigDigest(a), ConfigDigest(b));
  EXPECT_EQ(ConfigDigest(a).size(), 16u);
  b.seed = 8;
  EXPECT_NE(ConfigDigest(a), ConfigDigest(b));
  b = a;
  b.rhos = {0.31};
  EXPECT_NE(ConfigDigest(a), ConfigDigest(b));
}

TEST(ExitCodeTest, StageCodes) {
  EXPECT_EQ(ExitCode(PipelineStage::kConfig), 2);
  EXPECT_EQ(ExitCode(PipelineStage::kIngest), 10);
  EXPECT_EQ(ExitCode(PipelineStage::kOptions), 11);
  EXPECT_EQ(ExitCode(PipelineStage::kAttack), 12);
  EXPECT_EQ(ExitCode(PipelineStage::kRun), 13);
  EXPECT_EQ(ExitCode(PipelineStage::kInterpret), 14);
  EXPECT_EQ(ExitCode(PipelineStage::kScore), 15);
  EXPECT_EQ(ExitCode(PipelineStage::kRti), 16);
  EXPECT_EQ(ExitCode(PipelineStage::kAnalyze), 17);
}

TEST(PipelineTest, ProducesEveryArtifact) {
  const RunConfig c = SmallConfig(FreshDir("full"));
  const PipelineResult r = RunPipeline(c);
  EXPECT_EQ(r.run_dir, c.output_dir / ConfigDigest(c));
  for (const char* rel :
       {"config.txt", "ingest/noahqa.jsonl", "primitives/noahqa.jsonl",
        "primitives/noahqa.order-2.jsonl", "attacks/noahqa/word_delete@0.3.jsonl",
        "transcripts/noahqa/clean.jsonl", "transcripts/noahqa/prompt-0.jsonl",
        "transcripts/noahqa/order-1.jsonl", "answers/babi15/word_insert@0.3.jsonl",
        "scores.jsonl", "consistency.jsonl", "rti.jsonl",
        "rti/babi15/word_delete.jsonl", "analysis/strategyqa/word_replace@0.3.json",
        "summary.jsonl", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(r.run_dir / rel)) << rel;
  }
  // 3 methods x 1 rho: one perturbed sample per primitive per condition.
  const auto prims = ReadPrimitives(r.run_dir / "primitives/noahqa.jsonl");
  std::size_t perturbed = 0;
  for (const char* m : {"word_insert", "word_delete", "word_replace"}) {
    perturbed += ReadJsonLines(r.run_dir / ("attacks/noahqa/" + std::string(m) +
                                            "@0.3.jsonl"))
                     .size();
  }
  EXPECT_EQ(perturbed, 3 * prims.size());
  // 3 datasets x (clean + 2 prompts + 3 orders + 3 attacks).
  EXPECT_EQ(ReadJsonLines(r.run_dir / "scores.jsonl").size(), 27u);
  EXPECT_NE(r.summary.find("RTI"), std::string::npos);
  // The content matcher ignores option order.
  for (const Json& row : ReadJsonLines(r.run_dir / "consistency.jsonl")) {
    if (row["axis"] == "option_order") EXPECT_EQ(row["std_percent"], 0.0);
  }
}

TEST(PipelineTest, RerunReusesAndResumes) {
  const RunConfig c = SmallConfig(FreshDir("resume"));
  const PipelineResult first = RunPipeline(c);
  const auto before = Snapshot(first.run_dir);
  const PipelineResult again = RunPipeline(c);
  EXPECT_TRUE(again.ran.empty());
  EXPECT_EQ(again.gateway.requests, 0u);
  EXPECT_EQ(Snapshot(again.run_dir), before);

  fs::remove(first.run_dir / "answers/strategyqa/word_insert@0.3.jsonl");
  fs::remove_all(first.run_dir / "analysis");
  fs::remove(first.run_dir / "attacks/babi15/word_replace@0.3.jsonl");
  const PipelineResult resumed = RunPipeline(c);
  EXPECT_EQ(resumed.ran.size(), 1u + 9u + 1u);
  EXPECT_EQ(Snapshot(resumed.run_dir), before);
}

TEST(PipelineTest, IndependentRunsMatchByteForByte) {
  RunConfig a = SmallConfig(FreshDir("det_a"));
  RunConfig b = SmallConfig(FreshDir("det_b"));
  b.concurrency = 1;
  EXPECT_EQ(Snapshot(RunPipeline(a).run_dir), Snapshot(RunPipeline(b).run_dir));
}

TEST(PipelineTest, FailuresNameTheStage) {
  RunConfig c = SmallConfig(FreshDir("fail"));
  const fs::path bad = FreshDir("bad_input");
  fs::create_directories(bad);
  WriteTextFile(bad / "broken.json", "{ not json");
  c.datasets = {{"strategyqa", bad / "broken.json",
                 testing::DataPath("mappings/strategyqa.toml")}};
  try {
    RunPipeline(c);
    FAIL() << "expected failure";
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), PipelineStage::kIngest);
  }
  c = SmallConfig(FreshDir("fail2"));
  c.order_variants = 7;  // three options allow only 6 orderings
  try {
    RunPipeline(c);
    FAIL() << "expected failure";
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), PipelineStage::kOptions);
  }
  c = SmallConfig(FreshDir("fail3"));
  c.rhos = {1.5};
  try {
    RunPipeline(c);
    FAIL() << "expected failure";
  } catch (const StageFailure& e) {
    EXPECT_EQ(e.stage(), PipelineStage::kConfig);
  }
}

class CountingTransport : public Transport {
 public:
  int calls = 0;
  HttpResponse Post(const std::string&, const std::string&) override {
    ++calls;
    return {200, R"({"choices":[{"message":{"content":"The answer is (A)."}}]})"};
  }
};

TEST(PipelineTest, HttpModelGoesThroughTransportAndCache) {
  RunConfig c = SmallConfig(FreshDir("http"));
  c.model = "http:test-model";
  c.endpoint = "http://127.0.0.1:9";
  c.rti_methods.clear();
  auto transport = std::make_shared<CountingTransport>();
  PipelineHooks hooks;
  hooks.transport = transport;
  const PipelineResult r = RunPipeline(c, hooks);
  EXPECT_GT(transport->calls, 0);
  EXPECT_EQ(r.gateway.requests, static_cast<std::size_t>(transport->calls));
  // A new config sharing the cache directory sends nothing new for the
  // conditions it has in common.
  RunConfig d = c;
  d.attack_methods.clear();
  d.order_variants = 0;
  const int before = transport->calls;
  RunPipeline(d, hooks);
  EXPECT_EQ(transport->calls, before);
}

}  // namespace
}  // namespace perturbench
