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
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "perturbench/error.h"
#include "perturbench/rng.h"

namespace perturbench {
namespace {

constexpr double kMinDecrease = 1e-12;

double Gini(double positives, double n) {
  if (n <= 0) return 0.0;
  const double p = positives / n;
  return 2.0 * p * (1.0 - p);
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& rows,
              std::span<const int> labels, std::size_t mtry, int max_depth,
              std::size_t min_split, rng::Stream* features,
              std::vector<double>* decrease, double total)
      : rows_(rows),
        labels_(labels),
        mtry_(mtry),
        max_depth_(max_depth),
        min_split_(min_split),
        features_(features),
        decrease_(decrease),
        total_(total),
        order_(rows.empty() ? 0 : rows[0].size()) {
    std::iota(order_.begin(), order_.end(), 0);
  }

  DecisionTree Build(std::vector<std::size_t> idx) {
    DecisionTree tree;
    nodes_ = &tree.nodes;
    Grow(std::move(idx), 0);
    return tree;
  }

 private:
  int Grow(std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(nodes_->size());
    nodes_->emplace_back();
    const double n = static_cast<double>(idx.size());
    double positives = 0;
    for (std::size_t i : idx) positives += labels_[i];
    (*nodes_)[id].positive_rate = n > 0 ? positives / n : 0.0;
    if (depth >= max_depth_ || idx.size() < min_split_ || positives == 0 ||
        positives == n) {
      return id;
    }
    const Split best = FindSplit(idx, Gini(positives, n));
    if (best.feature < 0) return id;
    if (decrease_) (*decrease_)[best.feature] += n / total_ * best.decrease;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (rows_[i][best.feature] <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = Grow(std::move(left), depth + 1);
    const int r = Grow(std::move(right), depth + 1);
    TreeNode& node = (*nodes_)[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split FindSplit(const std::vector<std::size_t>& idx, double parent_gini) {
    if (features_) features_->Shuffle(order_);
    Split best;
    std::size_t budget = mtry_;
    std::vector<std::pair<double, int>> column(idx.size());
    const double n = static_cast<double>(idx.size());
    double total_pos = 0;
    for (std::size_t i : idx) total_pos += labels_[i];
    for (std::size_t f : order_) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        column[k] = {rows_[idx[k]][f], labels_[idx[k]]};
      }
      std::sort(column.begin(), column.end());
      // Constant columns do not use up the feature budget.
      if (column.front().first == column.back().first) continue;
      double left_pos = 0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        left_pos += column[k].second;
        const double a = column[k].first;
        const double b = column[k + 1].first;
        if (a == b) continue;
        const double ln = static_cast<double>(k + 1);
        const double rn = n - ln;
        const double child = (ln * Gini(left_pos, ln) +
                              rn * Gini(total_pos - left_pos, rn)) / n;
        const double dec = parent_gini - child;
        if (dec > best.decrease + kMinDecrease) {
          double t = a + (b - a) / 2;
          if (!(t < b)) t = a;
          best = {static_cast<int>(f), t, dec};
        }
      }
      if (--budget == 0) break;
    }
    return best;
  }

  const std::vector<std::vector<double>>& rows_;
  std::span<const int> labels_;
  std::size_t mtry_;
  int max_depth_;
  std::size_t min_split_;
  rng::Stream* features_;
  std::vector<double>* decrease_;
  double total_;
  std::vector<std::size_t> order_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

std::size_t CheckShape(const std::vector<std::vector<double>>& rows,
                       std::span<const int> labels) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "no training rows");
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::to_string(rows.size()) + " rows vs " +
                    std::to_string(labels.size()) + " labels");
  }
  const std::size_t width = rows[0].size();
  if (width == 0) throw Error(ErrorCode::kInvalidArgument, "no features");
  bool zero = false, one = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " features, expected " +
                      std::to_string(width));
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
    (labels[i] ? one : zero) = true;
  }
  if (!zero || !one) {
    throw Error(ErrorCode::kDegenerateLabels,
                "training labels are all " + std::to_string(labels[0]));
  }
  return width;
}

struct TreeResult {
  DecisionTree tree;
  std::vector<double> decrease;
};

TreeResult FitTree(const std::vector<std::vector<double>>& rows,
                   std::span<const int> labels, const ForestParams& params,
                   std::size_t mtry, int t) {
  const std::size_t n = rows.size();
  const auto tree_key = static_cast<std::uint64_t>(t);
  rng::Stream boot(rng::Key(
      {params.seed, rng::StageKey(rng::Stage::kBootstrap), tree_key}));
  std::vector<std::size_t> idx(n);
  for (std::size_t& i : idx) i = boot.Below(n);
  rng::Stream features(rng::Key(
      {params.seed, rng::StageKey(rng::Stage::kFeatures), tree_key}));
  TreeResult out;
  out.decrease.assign(rows[0].size(), 0.0);
  TreeBuilder builder(rows, labels, mtry, params.max_depth,
                      params.min_samples_split, &features, &out.decrease,
                      static_cast<double>(n));
  out.tree = builder.Build(std::move(idx));
  return out;
}

std::size_t Mtry(const ForestParams& params, std::size_t width) {
  if (params.n_trees < 1 || params.max_depth < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "forest needs n_trees >= 1 and max_depth >= 1");
  }
  const std::size_t mtry =
      params.feature_subset.value_or(static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(width)))));
  if (mtry < 1 || mtry > width) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature subset " + std::to_string(mtry) + " outside [1, " +
                    std::to_string(width) + "]");
  }
  return mtry;
}

ForestModel Combine(std::vector<TreeResult> results, std::size_t width) {
  std::vector<double> importance(width, 0.0);
  std::vector<DecisionTree> trees;
  trees.reserve(results.size());
  for (TreeResult& r : results) {
    for (std::size_t f = 0; f < width; ++f) importance[f] += r.decrease[f];
    trees.push_back(std::move(r.tree));
  }
  const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
  for (double& v : importance) v = sum > 0 ? v / sum : 0.0;
  return ForestModel(std::move(trees), std::move(importance), width);
}

}  // namespace

double DecisionTree::PredictProba(std::span<const double> x) const {
  int id = 0;
  while (nodes[id].feature >= 0) {
    const TreeNode& node = nodes[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[id].positive_rate;
}

double ForestModel::PredictProba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(ErrorCode::kInvalidArgument, "feature width mismatch");
  }
  if (trees_.empty()) return 0.0;
  double sum = 0.0;
  for (const DecisionTree& t : trees_) sum += t.PredictProba(x);
  return sum / static_cast<double>(trees_.size());
}

ForestModel TrainForest(const std::vector<std::vector<double>>& rows,
                        std::span<const int> labels,
                        const ForestParams& params) {
  const std::size_t width = CheckShape(rows, labels);
  const std::size_t mtry = Mtry(params, width);
  std::vector<TreeResult> results(static_cast<std::size_t>(params.n_trees));
#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < params.n_trees; ++t) {
    results[static_cast<std::size_t>(t)] = FitTree(rows, labels, params, mtry, t);
  }
  return Combine(std::move(results), width);
}

ForestModel TrainForestSerial(const std::vector<std::vector<double>>& rows,
                              std::span<const int> labels,
                              const ForestParams& params) {
  const std::size_t width = CheckShape(rows, labels);
  const std::size_t mtry = Mtry(params, width);
  std::vector<TreeResult> results;
  for (int t = 0; t < params.n_trees; ++t) {
    results.push_back(FitTree(rows, labels, params, mtry, t));
  }
  return Combine(std::move(results), width);
}

DecisionTree FitExhaustiveTree(const std::vector<std::vector<double>>& rows,
                               std::span<const int> labels, int max_depth,
                               std::vector<double>* decrease) {
  const std::size_t width = CheckShape(rows, labels);
  std::vector<double> local(width, 0.0);
  TreeBuilder builder(rows, labels, width, max_depth, 2, nullptr, &local,
                      static_cast<double>(rows.size()));
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  DecisionTree tree = builder.Build(std::move(idx));
  if (decrease) *decrease = std::move(local);
  return tree;
}

}  // namespace perturbench
