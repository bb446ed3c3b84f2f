#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "pism/forest.hpp"
#include "pism/rng.hpp"

namespace {

// 2-D XOR-like dataset: label = (x > 0) != (y > 0), fixed seed
void xor_dataset(pism::Matrix* x, std::vector<double>* y, int n,
                 std::uint64_t seed) {
  pism::Rng rng(seed);
  *x = pism::Matrix(n, 2);
  y->resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(-1, 1);
    const double b = rng.uniform(-1, 1);
    x->at(i, 0) = a;
    x->at(i, 1) = b;
    (*y)[i] = (a > 0) != (b > 0) ? 1.0 : 0.0;
  }
}

double accuracy(const std::vector<double>& pred, const std::vector<double>& y) {
  int hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
  return static_cast<double>(hit) / y.size();
}

}  // namespace

TEST_CASE("gini of class counts {2,2} is 0.5") {
  CHECK(pism::gini_impurity({2, 2}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pism::gini_impurity({4, 0}) == 0.0);
  CHECK(pism::gini_impurity({}) == 0.0);
}

TEST_CASE("single training sample predicts its own label") {
  pism::Matrix x(1, 3);
  x.at(0, 0) = 0.5;
  x.at(0, 1) = -1.0;
  x.at(0, 2) = 2.0;
  const auto model = pism::fit_forest(x, {2.0}, pism::ForestTask::kClassification,
                                      {}, 7);
  pism::Matrix q(2, 3);
  q.at(0, 0) = 99.0;
  q.at(1, 2) = -5.0;
  for (const double p : pism::predict(model, q)) CHECK(p == 2.0);
}

TEST_CASE("XOR dataset reaches high training accuracy") {
  pism::Matrix x;
  std::vector<double> y;
  xor_dataset(&x, &y, 200, 61);
  pism::ForestParams params;
  params.n_trees = 50;
  params.max_depth = 8;
  const auto model =
      pism::fit_forest(x, y, pism::ForestTask::kClassification, params, 5);
  CHECK(accuracy(pism::predict(model, x), y) >= 0.95);
}

TEST_CASE("fully grown single tree memorizes distinct training points") {
  pism::Rng rng(62);
  pism::Matrix x(40, 2);
  std::vector<double> y(40);
  for (int i = 0; i < 40; ++i) {
    x.at(i, 0) = rng.uniform(-5, 5);
    x.at(i, 1) = rng.uniform(-5, 5);
    y[i] = static_cast<double>(rng.below(4));
  }
  pism::ForestParams params;
  params.n_trees = 1;
  params.max_depth = 64;
  params.min_samples_leaf = 1;
  params.bootstrap = false;
  params.mtry = 2;
  const auto model =
      pism::fit_forest(x, y, pism::ForestTask::kClassification, params, 3);
  const auto pred = pism::predict(model, x);
  for (int i = 0; i < 40; ++i) CHECK(pred[i] == y[i]);
}

TEST_CASE("regression forest fits a linear function of one feature") {
  pism::Rng rng(63);
  pism::Matrix x(300, 3);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) {
    x.at(i, 0) = rng.uniform(0, 1);
    x.at(i, 1) = rng.uniform(0, 1);
    x.at(i, 2) = rng.uniform(0, 1);
    y[i] = 3.0 * x.at(i, 0) - 1.0;
  }
  pism::ForestParams params;
  params.n_trees = 100;
  params.mtry = 3;
  const auto model =
      pism::fit_forest(x, y, pism::ForestTask::kRegression, params, 11);

  pism::Matrix q(50, 3);
  std::vector<double> qy(50);
  for (int i = 0; i < 50; ++i) {
    q.at(i, 0) = rng.uniform(0.05, 0.95);
    q.at(i, 1) = rng.uniform(0, 1);
    q.at(i, 2) = rng.uniform(0, 1);
    qy[i] = 3.0 * q.at(i, 0) - 1.0;
  }
  const auto pred = pism::predict(model, q);
  double err = 0.0;
  for (int i = 0; i < 50; ++i) err += (pred[i] - qy[i]) * (pred[i] - qy[i]);
  err /= 50;
  CHECK(err < 0.02);  // frozen after the pilot run; y spans [-1, 2]
}

TEST_CASE("fit and predict are deterministic; trees are order-invariant") {
  pism::Matrix x;
  std::vector<double> y;
  xor_dataset(&x, &y, 120, 64);
  pism::ForestParams params;
  params.n_trees = 20;
  const auto a = pism::fit_forest(x, y, pism::ForestTask::kClassification,
                                  params, 99);
  const auto b = pism::fit_forest(x, y, pism::ForestTask::kClassification,
                                  params, 99);
  CHECK(pism::forest_to_json(a) == pism::forest_to_json(b));

  // reversing tree order cannot change majority votes
  pism::ForestModel reversed = a;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  CHECK(pism::predict(a, x) == pism::predict(reversed, x));
}

TEST_CASE("consistent feature permutation leaves predictions unchanged") {
  pism::Rng rng(65);
  const int n = 150, d = 6;
  pism::Matrix x(n, d);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x.at(i, j) = rng.uniform(-1, 1);
    y[i] = x.at(i, 2) + 0.5 * x.at(i, 4) > 0 ? 1.0 : 0.0;
  }
  pism::ForestParams params;
  params.n_trees = 30;
  params.mtry = d;  // full feature scan keeps the split choice permutation-free
  const auto base =
      pism::fit_forest(x, y, pism::ForestTask::kClassification, params, 17);
  const auto base_pred = pism::predict(base, x);

  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  pism::Matrix px(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) px.at(i, perm[j]) = x.at(i, j);
  }
  const auto permuted =
      pism::fit_forest(px, y, pism::ForestTask::kClassification, params, 17);
  CHECK(pism::predict(permuted, px) == base_pred);
}

TEST_CASE("forest JSON round-trips and rejects bad inputs") {
  namespace fs = std::filesystem;
  pism::Matrix x;
  std::vector<double> y;
  xor_dataset(&x, &y, 80, 66);
  pism::ForestParams params;
  params.n_trees = 5;
  const auto model =
      pism::fit_forest(x, y, pism::ForestTask::kClassification, params, 1);

  const fs::path dir = fs::temp_directory_path() / "pism_forest_tests";
  fs::create_directories(dir);
  pism::save_forest_json(model, dir / "forest.json");
  const auto loaded = pism::load_forest_json(dir / "forest.json");
  CHECK(pism::forest_to_json(loaded) == pism::forest_to_json(model));
  CHECK(pism::predict(loaded, x) == pism::predict(model, x));

  // NaN features are rejected at fit and predict time
  pism::Matrix bad = x;
  bad.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(pism::fit_forest(bad, y, pism::ForestTask::kClassification,
                                   params, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pism::predict(model, bad), std::invalid_argument);

  // non-integral classification targets are rejected
  CHECK_THROWS_AS(pism::fit_forest(x, std::vector<double>(80, 0.5),
                                   pism::ForestTask::kClassification, params, 1),
                  std::invalid_argument);

  // width mismatch at predict time
  pism::Matrix narrow(3, 1);
  CHECK_THROWS_AS(pism::predict(model, narrow), std::invalid_argument);
}

TEST_CASE("forest of identical stumps predicts like the stump") {
  // one tree, depth 1, no bootstrap: a deterministic stump
  pism::Matrix x(10, 1);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x.at(i, 0) = i;
    y[i] = i < 5 ? 0.0 : 1.0;
  }
  pism::ForestParams params;
  params.n_trees = 7;  // all trees identical without bootstrap randomness
  params.max_depth = 1;
  params.min_samples_leaf = 1;
  params.bootstrap = false;
  params.mtry = 1;
  const auto forest =
      pism::fit_forest(x, y, pism::ForestTask::kClassification, params, 2);
  const auto pred = pism::predict(forest, x);
  for (int i = 0; i < 10; ++i) CHECK(pred[i] == y[i]);
}
