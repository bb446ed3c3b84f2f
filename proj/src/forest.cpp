#include "pism/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "pism/rng.hpp"

namespace pism {

double gini_impurity(const std::vector<long long>& counts) {
  long long total = 0;
  for (const long long c : counts) total += c;
  if (total == 0) return 0.0;
  double sumsq = 0.0;
  for (const long long c : counts) {
    sumsq += static_cast<double>(c) * static_cast<double>(c);
  }
  return 1.0 - sumsq / (static_cast<double>(total) * static_cast<double>(total));
}

namespace {

struct Builder {
  const Matrix& x;
  const std::vector<double>& y;
  ForestTask task;
  int n_classes;
  ForestParams params;
  Rng rng;
  Tree tree;

  // scratch reused across nodes
  std::vector<int> feature_pool;
  std::vector<std::pair<double, int>> sorted;  // (value, slot in sample list)

  Builder(const Matrix& x_, const std::vector<double>& y_, ForestTask task_,
          int n_classes_, const ForestParams& p_, std::uint64_t seed)
      : x(x_), y(y_), task(task_), n_classes(n_classes_), params(p_),
        rng(seed) {
    feature_pool.resize(x.cols);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  int make_leaf(const std::vector<int>& samples) {
    TreeNode node;
    if (task == ForestTask::kClassification) {
      node.leaf.assign(n_classes, 0.0);
      for (const int s : samples) node.leaf[static_cast<int>(y[s])] += 1.0;
    } else {
      double sum = 0.0;
      for (const int s : samples) sum += y[s];
      node.leaf = {sum / static_cast<double>(samples.size())};
    }
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  bool node_is_pure(const std::vector<int>& samples) const {
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (y[samples[i]] != y[samples[0]]) return false;
    }
    return true;
  }

  // Best split of `samples` over a fresh mtry feature draw. Returns false
  // when no split improves the node. Ties resolved toward the lowest
  // feature index, then the lowest threshold.
  bool find_split(const std::vector<int>& samples, int* best_feature,
                  double* best_threshold) {
    const int n = static_cast<int>(samples.size());
    const int min_leaf = params.min_samples_leaf;

    double parent_score;
    std::vector<double> parent_counts;
    double parent_sum = 0.0, parent_sumsq = 0.0;
    if (task == ForestTask::kClassification) {
      parent_counts.assign(n_classes, 0.0);
      for (const int s : samples) parent_counts[static_cast<int>(y[s])] += 1.0;
      double sq = 0.0;
      for (const double c : parent_counts) sq += c * c;
      parent_score = n - sq / n;  // n * gini
    } else {
      for (const int s : samples) {
        parent_sum += y[s];
        parent_sumsq += y[s] * y[s];
      }
      parent_score = parent_sumsq - parent_sum * parent_sum / n;  // SSE
    }

    // partial Fisher-Yates: first mtry entries are this node's feature draw
    for (int i = 0; i < params.mtry; ++i) {
      const int j = i + static_cast<int>(rng.below(feature_pool.size() - i));
      std::swap(feature_pool[i], feature_pool[j]);
    }

    double best_score = parent_score;
    int best_f = -1;
    double best_t = 0.0;
    std::vector<double> lcounts;

    for (int fi = 0; fi < params.mtry; ++fi) {
      const int f = feature_pool[fi];
      sorted.resize(n);
      for (int i = 0; i < n; ++i) {
        sorted[i] = {x.at(samples[i], f), i};
      }
      std::sort(sorted.begin(), sorted.end());

      if (task == ForestTask::kClassification) {
        lcounts.assign(n_classes, 0.0);
        double lsq = 0.0, rsq = 0.0;
        std::vector<double> rcounts = parent_counts;
        for (const double c : rcounts) rsq += c * c;
        for (int i = 0; i < n - 1; ++i) {
          const int cls = static_cast<int>(y[samples[sorted[i].second]]);
          lsq += 2.0 * lcounts[cls] + 1.0;
          rsq += -2.0 * rcounts[cls] + 1.0;
          lcounts[cls] += 1.0;
          rcounts[cls] -= 1.0;
          const int nl = i + 1, nr = n - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          if (!(sorted[i + 1].first > sorted[i].first)) continue;
          const double score = (nl - lsq / nl) + (nr - rsq / nr);
          const double thr =
              sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
          if (score < best_score ||
              (score == best_score &&
               (best_f == -1 || f < best_f ||
                (f == best_f && thr < best_t)))) {
            if (score < parent_score) {
              best_score = score;
              best_f = f;
              best_t = thr;
            }
          }
        }
      } else {
        double lsum = 0.0, lsumsq = 0.0;
        for (int i = 0; i < n - 1; ++i) {
          const double yi = y[samples[sorted[i].second]];
          lsum += yi;
          lsumsq += yi * yi;
          const int nl = i + 1, nr = n - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          if (!(sorted[i + 1].first > sorted[i].first)) continue;
          const double rsum = parent_sum - lsum;
          const double rsumsq = parent_sumsq - lsumsq;
          const double score = (lsumsq - lsum * lsum / nl) +
                               (rsumsq - rsum * rsum / nr);
          const double thr =
              sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
          if (score < best_score ||
              (score == best_score &&
               (best_f == -1 || f < best_f ||
                (f == best_f && thr < best_t)))) {
            if (score < parent_score) {
              best_score = score;
              best_f = f;
              best_t = thr;
            }
          }
        }
      }
    }

    if (best_f < 0) return false;
    *best_feature = best_f;
    *best_threshold = best_t;
    return true;
  }

  int build(const std::vector<int>& samples, int depth) {
    const int n = static_cast<int>(samples.size());
    if (depth >= params.max_depth || n < 2 * params.min_samples_leaf ||
        node_is_pure(samples)) {
      return make_leaf(samples);
    }
    int f;
    double thr;
    if (!find_split(samples, &f, &thr)) return make_leaf(samples);

    std::vector<int> left, right;
    left.reserve(samples.size());
    right.reserve(samples.size());
    for (const int s : samples) {
      (x.at(s, f) <= thr ? left : right).push_back(s);
    }

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[id].feature = f;
    tree.nodes[id].threshold = thr;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

void check_features(const Matrix& features) {
  for (const double v : features.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("forest: non-finite feature value");
    }
  }
}

int tree_class_vote(const Tree& tree, const double* row) {
  int at = 0;
  while (tree.nodes[at].feature >= 0) {
    at = row[tree.nodes[at].feature] <= tree.nodes[at].threshold
             ? tree.nodes[at].left
             : tree.nodes[at].right;
  }
  const std::vector<double>& counts = tree.nodes[at].leaf;
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
    if (counts[c] > counts[best]) best = c;  // ties keep the lowest id
  }
  return best;
}

double tree_regress(const Tree& tree, const double* row) {
  int at = 0;
  while (tree.nodes[at].feature >= 0) {
    at = row[tree.nodes[at].feature] <= tree.nodes[at].threshold
             ? tree.nodes[at].left
             : tree.nodes[at].right;
  }
  return tree.nodes[at].leaf[0];
}

}  // namespace

ForestModel fit_forest(const Matrix& features, const std::vector<double>& targets,
                       ForestTask task, const ForestParams& params,
                       std::uint64_t seed) {
  if (features.rows < 1 || features.cols < 1) {
    throw std::invalid_argument("forest: empty feature matrix");
  }
  if (targets.size() != static_cast<std::size_t>(features.rows)) {
    throw std::invalid_argument("forest: target count mismatch");
  }
  if (params.n_trees < 1 || params.max_depth < 0 ||
      params.min_samples_leaf < 1) {
    throw std::invalid_argument("forest: invalid hyperparameters");
  }
  check_features(features);

  ForestModel model;
  model.task = task;
  model.n_features = features.cols;
  model.params = params;
  model.seed = seed;

  if (task == ForestTask::kClassification) {
    int max_cls = 0;
    for (const double t : targets) {
      if (!(t >= 0.0) || t != std::floor(t)) {
        throw std::invalid_argument("forest: classification targets must be "
                                    "integral ids >= 0");
      }
      max_cls = std::max(max_cls, static_cast<int>(t));
    }
    model.n_classes = max_cls + 1;
  } else {
    for (const double t : targets) {
      if (!std::isfinite(t)) {
        throw std::invalid_argument("forest: non-finite regression target");
      }
    }
  }

  if (model.params.mtry <= 0) {
    model.params.mtry =
        task == ForestTask::kClassification
            ? std::max(1, static_cast<int>(std::sqrt(features.cols)))
            : std::max(1, features.cols / 3);
  }
  model.params.mtry = std::min(model.params.mtry, features.cols);

  const int n = features.rows;
  model.trees.resize(params.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < params.n_trees; ++t) {
    Builder builder(features, targets, task, model.n_classes, model.params,
                    mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> samples(n);
    if (model.params.bootstrap) {
      for (int i = 0; i < n; ++i) {
        samples[i] = static_cast<int>(builder.rng.below(n));
      }
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    builder.build(samples, 0);
    model.trees[t] = std::move(builder.tree);
  }
  return model;
}

std::vector<double> predict(const ForestModel& model, const Matrix& features) {
  if (features.cols != model.n_features) {
    throw std::invalid_argument("forest: feature width mismatch");
  }
  check_features(features);
  std::vector<double> out(features.rows);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < features.rows; ++r) {
    const double* row = features.row(r);
    if (model.task == ForestTask::kClassification) {
      std::vector<int> votes(model.n_classes, 0);
      for (const Tree& tree : model.trees) {
        votes[tree_class_vote(tree, row)] += 1;
      }
      int best = 0;
      for (int c = 1; c < model.n_classes; ++c) {
        if (votes[c] > votes[best]) best = c;  // ties keep the lowest id
      }
      out[r] = best;
    } else {
      double acc = 0.0;
      for (const Tree& tree : model.trees) acc += tree_regress(tree, row);
      out[r] = acc / static_cast<double>(model.trees.size());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

nlohmann::ordered_json forest_json(const ForestModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "pism-forest-v1";
  j["task"] = model.task == ForestTask::kClassification ? "classification"
                                                        : "regression";
  j["n_features"] = model.n_features;
  j["n_classes"] = model.n_classes;
  j["params"] = {{"n_trees", model.params.n_trees},
                 {"max_depth", model.params.max_depth},
                 {"min_samples_leaf", model.params.min_samples_leaf},
                 {"mtry", model.params.mtry},
                 {"bootstrap", model.params.bootstrap}};
  j["seed"] = model.seed;
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const Tree& tree : model.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const TreeNode& n : tree.nodes) {
      if (n.feature >= 0) {
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right}});
      } else {
        nodes.push_back({{"leaf", n.leaf}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

}  // namespace

std::string forest_to_json(const ForestModel& model) {
  return forest_json(model).dump(1);
}

void save_forest_json(const ForestModel& model,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << forest_to_json(model) << '\n';
}

ForestModel load_forest_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("forest file not found: " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.at("format").get<std::string>() != "pism-forest-v1") {
    throw std::runtime_error("unknown forest format");
  }
  ForestModel model;
  model.task = j.at("task").get<std::string>() == "classification"
                   ? ForestTask::kClassification
                   : ForestTask::kRegression;
  model.n_features = j.at("n_features").get<int>();
  model.n_classes = j.at("n_classes").get<int>();
  const auto& p = j.at("params");
  model.params.n_trees = p.at("n_trees").get<int>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  model.params.mtry = p.at("mtry").get<int>();
  model.params.bootstrap = p.at("bootstrap").get<bool>();
  model.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode node;
      if (nj.contains("leaf")) {
        node.leaf = nj.at("leaf").get<std::vector<double>>();
      } else {
        node.feature = nj.at("f").get<int>();
        node.threshold = nj.at("t").get<double>();
        node.left = nj.at("l").get<int>();
        node.right = nj.at("r").get<int>();
      }
      tree.nodes.push_back(std::move(node));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace pism
