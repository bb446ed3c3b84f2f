#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pism/tensor.hpp"

namespace pism {

enum class ForestTask { kClassification, kRegression };

struct ForestParams {
  int n_trees = 200;
  int max_depth = 16;
  int min_samples_leaf = 2;
  int mtry = 0;  // 0 = auto: sqrt(d) for classification, d/3 for regression
  bool bootstrap = true;  // sample size N with replacement
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> leaf;  // class counts, or {mean} for regression
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root, children preorder
};

struct ForestModel {
  ForestTask task = ForestTask::kClassification;
  int n_features = 0;
  int n_classes = 0;  // classification only
  ForestParams params;  // mtry resolved
  std::uint64_t seed = 0;
  std::vector<Tree> trees;
};

// Bagged CART. Classification splits by Gini impurity with majority-class
// leaves; regression splits by variance reduction with mean leaves.
// Classification targets must be integral ids >= 0. Deterministic in
// (features, targets, params, seed); trees fit in parallel with per-tree
// seeds derived from (seed, tree index).
ForestModel fit_forest(const Matrix& features, const std::vector<double>& targets,
                       ForestTask task, const ForestParams& params,
                       std::uint64_t seed);

// Classification: one vote per tree, ties to the lowest class id.
// Regression: mean of tree means, fixed tree order.
std::vector<double> predict(const ForestModel& model, const Matrix& features);

double gini_impurity(const std::vector<long long>& counts);

void save_forest_json(const ForestModel& model,
                      const std::filesystem::path& path);
ForestModel load_forest_json(const std::filesystem::path& path);
std::string forest_to_json(const ForestModel& model);

}  // namespace pism
