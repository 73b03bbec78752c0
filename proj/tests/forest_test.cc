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

#include "perturbench/forest.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "perturbench/error.h"

namespace perturbench {
namespace {

struct Data {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

// Feature 0 copies the label; the rest are uniform noise.
Data LabelCopy(int n, int noise, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    std::vector<double> row = {static_cast<double>(y)};
    for (int k = 0; k < noise; ++k) row.push_back(u(gen));
    d.rows.push_back(std::move(row));
    d.labels.push_back(y);
  }
  return d;
}

// label = x0 + x1 > 1, with a margin band left empty.
Data Separable(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Data d;
  while (static_cast<int>(d.rows.size()) < n) {
    std::vector<double> row = {u(gen), u(gen), u(gen), u(gen)};
    const double s = row[0] + row[1] - 1.0;
    if (std::abs(s) < 0.05) continue;
    d.rows.push_back(std::move(row));
    d.labels.push_back(s > 0 ? 1 : 0);
  }
  return d;
}

std::size_t TopFeature(const ForestModel& m) {
  const auto& imp = m.importances();
  return static_cast<std::size_t>(
      std::max_element(imp.begin(), imp.end()) - imp.begin());
}

TEST(ForestTest, ExhaustiveTreeSplitsOnLabelCopy) {
  const Data d = LabelCopy(500, 4, 1);
  std::vector<double> decrease;
  const DecisionTree tree = FitExhaustiveTree(d.rows, d.labels, 8, &decrease);
  ASSERT_GE(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_EQ(tree.nodes[tree.nodes[0].left].feature, -1);
  EXPECT_EQ(tree.nodes[tree.nodes[0].right].feature, -1);
  // Balanced labels: root Gini 0.5 removed entirely.
  EXPECT_NEAR(decrease[0], 0.5, 1e-12);
}

TEST(ForestTest, LabelCopyRankedFirst) {
  int top = 0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    const Data d = LabelCopy(500, 4, 100 + seed);
    ForestParams p;
    p.seed = seed;
    top += TopFeature(TrainForest(d.rows, d.labels, p)) == 0;
  }
  EXPECT_GE(top, 48);
}

TEST(ForestTest, ConstantFeatureHasZeroImportance) {
  Data d = LabelCopy(200, 3, 2);
  for (auto& row : d.rows) row.push_back(0.25);
  ForestParams p;
  p.n_trees = 30;
  const ForestModel m = TrainForest(d.rows, d.labels, p);
  EXPECT_EQ(m.importances().back(), 0.0);
  const double sum =
      std::accumulate(m.importances().begin(), m.importances().end(), 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (double v : m.importances()) EXPECT_GE(v, 0.0);
}

TEST(ForestTest, NoiseFeaturesNearUniform) {
  std::vector<double> mean(5, 0.0);
  for (unsigned seed = 0; seed < 50; ++seed) {
    std::mt19937 gen(900 + seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Data d;
    for (int i = 0; i < 200; ++i) {
      d.rows.push_back({u(gen), u(gen), u(gen), u(gen), u(gen)});
      d.labels.push_back(i % 2);
    }
    ForestParams p;
    p.n_trees = 20;
    p.seed = seed;
    const ForestModel m = TrainForest(d.rows, d.labels, p);
    for (int f = 0; f < 5; ++f) mean[f] += m.importances()[f] / 50;
  }
  const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
  EXPECT_LT(*hi / *lo, 3.0);
}

TEST(ForestTest, SeparableAccuracy) {
  const Data train = Separable(1000, 3);
  const Data test = Separable(1000, 4);
  const ForestModel m = TrainForest(train.rows, train.labels, ForestParams{});
  int correct = 0;
  for (std::size_t i = 0; i < test.rows.size(); ++i) {
    correct += m.Predict(test.rows[i]) == test.labels[i];
  }
  EXPECT_GE(correct / 1000.0, 0.95);
}

TEST(ForestTest, ParallelMatchesSerialAndIsDeterministic) {
  const Data d = Separable(300, 5);
  ForestParams p;
  p.n_trees = 25;
  p.seed = 77;
  const ForestModel a = TrainForest(d.rows, d.labels, p);
  const ForestModel b = TrainForestSerial(d.rows, d.labels, p);
  const ForestModel c = TrainForest(d.rows, d.labels, p);
  EXPECT_EQ(a.importances(), b.importances());
  EXPECT_EQ(a.importances(), c.importances());
  for (const auto& row : d.rows) {
    EXPECT_EQ(a.PredictProba(row), b.PredictProba(row));
  }
  p.seed = 78;
  EXPECT_NE(TrainForest(d.rows, d.labels, p).importances(), a.importances());
}

TEST(ForestTest, RejectsBadInput) {
  const std::vector<std::vector<double>> rows = {{1.0}, {2.0}};
  const std::vector<int> same = {1, 1};
  const std::vector<int> mixed = {0, 1};
  EXPECT_EQ(CodeOf([&] { TrainForest(rows, same, ForestParams{}); }),
            ErrorCode::kDegenerateLabels);
  EXPECT_EQ(CodeOf([&] { TrainForest({{1.0}, {1.0, 2.0}}, mixed, ForestParams{}); }),
            ErrorCode::kInvalidArgument);
  ForestParams p;
  p.feature_subset = 2;
  EXPECT_EQ(CodeOf([&] { TrainForest(rows, mixed, p); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { TrainForest({}, {}, ForestParams{}); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace perturbench
