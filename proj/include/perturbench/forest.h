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

#ifndef PERTURBENCH_FOREST_H_
#define PERTURBENCH_FOREST_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace perturbench {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 8;
  // Features tried per split; defaults to ceil(sqrt(n_features)).
  std::optional<std::size_t> feature_subset;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double positive_rate = 0.0;  // fraction of label 1 in the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double PredictProba(std::span<const double> x) const;
};

// Bagged CART classifier over binary labels.
class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, std::vector<double> importances,
              std::size_t n_features)
      : trees_(std::move(trees)),
        importances_(std::move(importances)),
        n_features_(n_features) {}

  // Mean of per-tree leaf rates.
  double PredictProba(std::span<const double> x) const;
  int Predict(std::span<const double> x) const {
    return PredictProba(x) >= 0.5 ? 1 : 0;
  }

  // Mean decrease in Gini impurity per feature, averaged over trees and
  // normalized to sum 1. All zero when no tree made a split.
  const std::vector<double>& importances() const { return importances_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

 private:
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
  std::size_t n_features_ = 0;
};

// rows: one feature vector per sample, all the same width. labels: 0 or 1.
// Throws InvalidArgument on shape problems and DegenerateLabels unless both
// labels occur. Trees are grown in parallel, one seed stream per tree, so
// the result does not depend on the thread count.
ForestModel TrainForest(const std::vector<std::vector<double>>& rows,
                        std::span<const int> labels,
                        const ForestParams& params);

// Single-threaded reference; identical output to TrainForest.
ForestModel TrainForestSerial(const std::vector<std::vector<double>>& rows,
                              std::span<const int> labels,
                              const ForestParams& params);

// Fits one tree on the full data with every feature considered at every
// split. Returns the raw (unnormalized) impurity decrease per feature.
DecisionTree FitExhaustiveTree(const std::vector<std::vector<double>>& rows,
                               std::span<const int> labels, int max_depth,
                               std::vector<double>* decrease = nullptr);

}  // namespace perturbench

#endif  // PERTURBENCH_FOREST_H_
