#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>

#include "gencal/boosting.hpp"
#include "gencal/datagen.hpp"
#include "gencal/error.hpp"
#include "gencal/rng.hpp"

using namespace gencal;

namespace {

const SimData& demo() {
  static const SimData d = [] {
    SimConfig c;
    c.n_population = 200000;
    return generate(c);
  }();
  return d;
}

struct Toy {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Toy toy(std::uint64_t seed, int n, int p) {
  Rng rng(seed);
  Toy t{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) t.X(i, j) = rng.uniform();
    t.y[i] = static_cast<double>(rng.poisson(std::exp(0.5 + 1.5 * t.X(i, 0))));
  }
  return t;
}

}  // namespace

TEST_CASE("init-only model predicts the mean") {
  const Toy t = toy(1, 50, 2);
  BoostConfig c;
  c.n_trees = 0;
  c.min_node_fraction = 0.05;
  const BoostModel m = boost_fit(t.X, t.y, c);
  const Eigen::VectorXd mu = boost_predict(m, t.X);
  CHECK((mu.array() - t.y.mean()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("depth-1 trees are stumps") {
  const Toy t = toy(2, 400, 3);
  BoostConfig c;
  c.n_trees = 20;
  const BoostModel m = boost_fit(t.X, t.y, c);
  for (const auto& tree : m.trees) {
    CHECK(tree.split_count() == 1);
    CHECK(tree.leaf_count() == 2);
  }
  c.depth = 3;
  const BoostModel deep = boost_fit(t.X, t.y, c);
  for (const auto& tree : deep.trees) CHECK(tree.max_depth() <= 3);
}

TEST_CASE("hand-built stump") {
  BoostModel m;
  m.init_score = std::log(2.0);
  m.n_features = 1;
  m.config.shrinkage = 0.5;
  RegressionTree stump;
  stump.nodes = {{0, 0.4, 1, 2, 0.0, 4, 0}, {-1, 0.0, -1, -1, -1.0, 2, 1}, {-1, 0.0, -1, -1, 2.0, 2, 1}};
  m.trees.push_back(stump);
  Eigen::MatrixXd X(3, 1);
  X << 0.1, 0.4, 0.9;
  const Eigen::VectorXd mu = boost_predict(m, X);
  CHECK(mu[0] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(mu[1] == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(mu[2] == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("hand-traced split on one feature") {
  Eigen::MatrixXd X(6, 1);
  X << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd y(6);
  y << 0, 1, 0, 4, 5, 3;
  const Eigen::VectorXd F = Eigen::VectorXd::Constant(6, std::log(y.mean()));
  const Eigen::VectorXd r = (y.array() - y.mean()).matrix();
  const RegressionTree tree = grow_tree(X, r, y, F, {0, 1, 2, 3, 4, 5}, 1, 1);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].threshold == 3.5);
  CHECK(tree.nodes[tree.nodes[0].left].value == doctest::Approx(std::log(1.0 / 6.5)).epsilon(1e-12));
  CHECK(tree.nodes[tree.nodes[0].right].value == doctest::Approx(std::log(12.0 / 6.5)).epsilon(1e-12));
}

TEST_CASE("property: leaf values equal log(sum y / sum exp F)") {
  const Toy t = toy(3, 300, 2);
  Rng rng(4);
  Eigen::VectorXd F(300);
  for (auto& v : F) v = 0.3 * rng.normal();
  const Eigen::VectorXd r = (t.y.array() - F.array().exp()).matrix();
  std::vector<std::size_t> rows(300);
  for (std::size_t i = 0; i < 300; ++i) rows[i] = i;
  const RegressionTree tree = grow_tree(t.X, r, t.y, F, rows, 3, 10);
  std::map<const TreeNode*, std::pair<double, double>> sums;
  for (Eigen::Index i = 0; i < 300; ++i) {
    int k = 0;
    while (tree.nodes[k].feature >= 0) {
      k = t.X(i, tree.nodes[k].feature) <= tree.nodes[k].threshold ? tree.nodes[k].left : tree.nodes[k].right;
    }
    sums[&tree.nodes[k]].first += t.y[i];
    sums[&tree.nodes[k]].second += std::exp(F[i]);
  }
  for (const auto& [leaf, s] : sums) {
    const double ref = std::clamp(std::log(s.first / s.second), -kLeafClamp, kLeafClamp);
    CHECK(std::abs(leaf->value - ref) < 1e-10);
    CHECK(leaf->count >= 10);
  }
}

TEST_CASE("property: out-of-bag rows do not shape the tree") {
  const Toy t = toy(5, 200, 3);
  BoostConfig c;
  c.n_trees = 1;
  c.depth = 2;
  c.min_node_fraction = 0.05;
  const BoostModel m = boost_fit(t.X, t.y, c);
  const auto bag = boost_bag(c, 200, 0);
  CHECK(bag.size() == 150);
  // Replay on the bag subset only.
  Eigen::MatrixXd Xb(150, 3);
  Eigen::VectorXd yb(150);
  for (std::size_t i = 0; i < 150; ++i) {
    Xb.row(static_cast<Eigen::Index>(i)) = t.X.row(static_cast<Eigen::Index>(bag[i]));
    yb[static_cast<Eigen::Index>(i)] = t.y[static_cast<Eigen::Index>(bag[i])];
  }
  const Eigen::VectorXd Fb = Eigen::VectorXd::Constant(150, m.init_score);
  const Eigen::VectorXd rb = (yb.array() - std::exp(m.init_score)).matrix();
  std::vector<std::size_t> all(150);
  for (std::size_t i = 0; i < 150; ++i) all[i] = i;
  const RegressionTree replay = grow_tree(Xb, rb, yb, Fb, all, 2, c.min_node(150));
  REQUIRE(replay.nodes.size() == m.trees[0].nodes.size());
  for (std::size_t k = 0; k < replay.nodes.size(); ++k) {
    CHECK(replay.nodes[k].feature == m.trees[0].nodes[k].feature);
    CHECK(replay.nodes[k].threshold == m.trees[0].nodes[k].threshold);
    CHECK(replay.nodes[k].value == m.trees[0].nodes[k].value);
  }
}

TEST_CASE("training deviance falls over the first 50 iterations on the demo data") {
  BoostConfig c;
  c.n_trees = 50;
  const BoostModel m = boost_fit(demo().train.X, demo().train.y, c);
  for (std::size_t t = 1; t < m.train_deviance.size(); ++t) {
    CHECK(m.train_deviance[t] < m.train_deviance[t - 1]);
  }
  BoostConfig fast = c;
  fast.shrinkage = 0.1;
  const BoostModel f = boost_fit(demo().train.X, demo().train.y, fast);
  CHECK(m.train_deviance[50] >= f.train_deviance[50]);
}

TEST_CASE("fitting is deterministic and serializes losslessly") {
  const Toy t = toy(6, 300, 2);
  BoostConfig c;
  c.n_trees = 30;
  c.depth = 2;
  c.seed = 77;
  const BoostModel a = boost_fit(t.X, t.y, c);
  const BoostModel b = boost_fit(t.X, t.y, c);
  CHECK(boost_predict(a, t.X) == boost_predict(b, t.X));
  const std::string js = boost_to_json(a);
  const BoostModel back = boost_from_json(js);
  CHECK(boost_predict(back, t.X) == boost_predict(a, t.X));
  CHECK(boost_to_json(back) == js);
  nlohmann::json j = nlohmann::json::parse(js);
  j["version"] = 99;
  CHECK_THROWS_AS(boost_from_json(j.dump()), ValidationError);
  CHECK_THROWS_AS(boost_from_json("not json"), ValidationError);
}

TEST_CASE("leave-one-out CV matches a brute-force loop") {
  const Toy t = toy(7, 20, 2);
  BoostConfig c;
  c.n_trees = 10;
  c.depth = 1;
  c.min_node_fraction = 0.1;
  c.seed = 3;
  const CvGridResult cv = cv_grid_search(t.X, t.y, {10}, {1}, 20, c);
  REQUIRE(cv.grid.size() == 1);
  CHECK(cv.best_trees == 10);
  CHECK(cv.best_depth == 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < 20; ++i) {
    Eigen::MatrixXd Xi(19, 2);
    Eigen::VectorXd yi(19);
    for (Eigen::Index r = 0, k = 0; r < 20; ++r) {
      if (r == i) continue;
      Xi.row(k) = t.X.row(r);
      yi[k++] = t.y[r];
    }
    const BoostModel m = boost_fit(Xi, yi, c);
    const double mu = boost_predict(m, t.X.row(i))[0];
    const double y = t.y[i];
    total += 2.0 * ((y > 0 ? y * std::log(y / mu) : 0.0) - (y - mu));
  }
  CHECK(std::abs(cv.grid[0].mean_deviance - total / 20.0) < 1e-10);
}

TEST_CASE("CV on the demo data prefers stumps") {
  BoostConfig c;
  c.seed = derive_seed(1, 101);
  const CvGridResult cv = cv_grid_search(demo().train.X, demo().train.y, {100, 400, 1600}, {1, 3}, 5, c);
  CHECK(cv.grid.size() == 6);
  CHECK(cv.best_depth == 1);
  const CvGridResult threaded =
      cv_grid_search(demo().train.X, demo().train.y, {100, 400, 1600}, {1, 3}, 5, c, 3);
  for (std::size_t i = 0; i < cv.grid.size(); ++i) {
    CHECK(cv.grid[i].mean_deviance == threaded.grid[i].mean_deviance);
  }
}

TEST_CASE("boosting input validation") {
  const Toy t = toy(8, 40, 2);
  BoostConfig c;
  CHECK_THROWS_AS(boost_fit(t.X, t.y, c), ValidationError);  // min node below one row
  c.min_node_fraction = 0.1;
  CHECK_THROWS_AS(boost_fit(t.X, Eigen::VectorXd::Zero(40), c), ValidationError);
  Eigen::VectorXd bad = t.y;
  bad[0] = 0.5;
  CHECK_THROWS_AS(boost_fit(t.X, bad, c), ValidationError);
  c.shrinkage = 0.0;
  CHECK_THROWS_AS(boost_fit(t.X, t.y, c), ValidationError);
}
