#include "gencal/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "gencal/error.hpp"
#include "gencal/parallel.hpp"
#include "gencal/rng.hpp"

namespace gencal {

namespace {
constexpr std::uint64_t kStreamBag = 10;
constexpr std::uint64_t kStreamFolds = 20;
}  // namespace

void BoostConfig::validate() const {
  if (n_trees < 0) throw ValidationError("boosting: n_trees must be >= 0");
  if (depth < 1) throw ValidationError("boosting: depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) {
    throw ValidationError("boosting: shrinkage must be in (0, 1]");
  }
  if (!(bag_fraction > 0.0 && bag_fraction <= 1.0)) {
    throw ValidationError("boosting: bag_fraction must be in (0, 1]");
  }
  if (!(min_node_fraction > 0.0 && min_node_fraction < 1.0)) {
    throw ValidationError("boosting: min_node_fraction must be in (0, 1)");
  }
}

std::size_t BoostConfig::bag_size(std::size_t n) const {
  return static_cast<std::size_t>(std::floor(bag_fraction * static_cast<double>(n) + 1e-9));
}

std::size_t BoostConfig::min_node(std::size_t bag) const {
  const double raw = min_node_fraction * static_cast<double>(bag);
  if (raw < 1.0 - 1e-9) {
    throw ValidationError("boosting: min_node_fraction * bag size = " + std::to_string(raw) +
                          " is below one observation");
  }
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int k = 0;
  while (nodes[k].feature >= 0) {
    k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
  }
  return nodes[k].value;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::split_count() const { return static_cast<int>(nodes.size()) - leaf_count(); }

int RegressionTree::max_depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

namespace {

/// Depth-wise exact greedy tree builder over per-feature sorted row lists.
class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& X, const Eigen::VectorXd& residual, const Eigen::VectorXd& y,
             const Eigen::VectorXd& F, std::vector<std::vector<std::size_t>> order, int max_depth,
             std::size_t min_node)
      : X_(X), r_(residual), y_(y), F_(F), order_(std::move(order)), max_depth_(max_depth),
        min_node_(min_node), goes_left_(static_cast<std::size_t>(X.rows()), 0) {}

  RegressionTree grow() {
    const std::size_t m = order_.empty() ? 0 : order_[0].size();
    if (m == 0) throw ValidationError("grow_tree: no rows");
    build(0, m, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    std::size_t left_count = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  Split best_split(std::size_t begin, std::size_t end) const {
    const std::size_t count = end - begin;
    double total = 0.0;
    for (std::size_t k = begin; k < end; ++k) total += r_[static_cast<Eigen::Index>(order_[0][k])];
    const double base = total * total / static_cast<double>(count);
    Split best;
    for (int f = 0; f < static_cast<int>(order_.size()); ++f) {
      const auto& ord = order_[f];
      double left_sum = 0.0;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        left_sum += r_[static_cast<Eigen::Index>(ord[k])];
        const std::size_t n_left = k - begin + 1;
        const std::size_t n_right = count - n_left;
        if (n_right < min_node_) break;
        if (n_left < min_node_) continue;
        const double xa = X_(static_cast<Eigen::Index>(ord[k]), f);
        const double xb = X_(static_cast<Eigen::Index>(ord[k + 1]), f);
        if (xa == xb) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) - base;
        if (gain > best.gain) {
          double t = xa + (xb - xa) / 2.0;
          if (!(t < xb)) t = xa;
          best = {f, n_left, t, gain};
        }
      }
    }
    return best;
  }

  double leaf_value(std::size_t begin, std::size_t end) const {
    double sum_y = 0.0, sum_mu = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto i = static_cast<Eigen::Index>(order_[0][k]);
      sum_y += y_[i];
      sum_mu += std::exp(F_[i]);
    }
    const double v = sum_y > 0.0 ? std::log(sum_y / sum_mu) : -kLeafClamp;
    return std::clamp(v, -kLeafClamp, kLeafClamp);
  }

  int build(std::size_t begin, std::size_t end, int depth) {
    const int idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[idx].count = end - begin;
    tree_.nodes[idx].depth = depth;

    Split split;
    if (depth < max_depth_ && end - begin >= 2 * min_node_) split = best_split(begin, end);
    if (split.feature < 0) {
      tree_.nodes[idx].value = leaf_value(begin, end);
      return idx;
    }

    const auto& chosen = order_[split.feature];
    for (std::size_t k = begin; k < end; ++k) goes_left_[chosen[k]] = k < begin + split.left_count;
    for (auto& ord : order_) {
      std::stable_partition(ord.begin() + static_cast<std::ptrdiff_t>(begin),
                            ord.begin() + static_cast<std::ptrdiff_t>(end),
                            [&](std::size_t row) { return goes_left_[row] != 0; });
    }
    const std::size_t mid = begin + split.left_count;
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    TreeNode& node = tree_.nodes[idx];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return idx;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& r_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& F_;
  std::vector<std::vector<std::size_t>> order_;
  int max_depth_;
  std::size_t min_node_;
  std::vector<char> goes_left_;
  RegressionTree tree_;
};

// Rows sorted by (X(row, f), row) for every feature.
std::vector<std::vector<std::size_t>> presort(const Eigen::MatrixXd& X,
                                              const std::vector<std::size_t>& rows) {
  std::vector<std::vector<std::size_t>> order(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& ord = order[static_cast<std::size_t>(f)];
    ord = rows;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
      const double xa = X(static_cast<Eigen::Index>(a), f);
      const double xb = X(static_cast<Eigen::Index>(b), f);
      return xa < xb || (xa == xb && a < b);
    });
  }
  return order;
}

void check_counts(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0) || !std::isfinite(y[i]) || y[i] != std::floor(y[i])) {
      throw ValidationError("boosting: outcome at row " + std::to_string(i) +
                            " is not a nonnegative integer");
    }
  }
}

}  // namespace

RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& residual,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                         const std::vector<std::size_t>& rows, int depth, std::size_t min_node) {
  if (min_node < 1) throw ValidationError("grow_tree: min_node must be >= 1");
  TreeGrower grower(X, residual, y, F, presort(X, rows), depth, min_node);
  return grower.grow();
}

std::vector<std::size_t> boost_bag(const BoostConfig& config, std::size_t n, int iteration) {
  const std::size_t bag = config.bag_size(n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (bag < n) {
    Rng rng(derive_seed(config.seed, kStreamBag, static_cast<std::uint64_t>(iteration)));
    for (std::size_t i = 0; i < bag; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(bag);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

double mean_poisson_deviance(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& mu) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double ylog = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0;
    total += 2.0 * (ylog - (y[i] - mu[i]));
  }
  return y.size() > 0 ? total / static_cast<double>(y.size()) : 0.0;
}

BoostModel boost_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) throw ValidationError("boost_fit: X / y size mismatch");
  if (n == 0) throw ValidationError("boost_fit: no training rows");
  check_counts(y);
  const double ybar = y.mean();
  if (!(ybar > 0.0)) throw ValidationError("boost_fit: all outcomes are zero; log(mean) undefined");
  const std::size_t bag = config.bag_size(n);
  if (bag == 0) throw ValidationError("boost_fit: bag is empty");
  const std::size_t min_node = config.min_node(bag);

  BoostModel model;
  model.config = config;
  model.n_features = static_cast<int>(X.cols());
  model.init_score = std::log(ybar);
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto global_order = presort(X, all);

  Eigen::VectorXd F = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), model.init_score);
  Eigen::VectorXd residual(static_cast<Eigen::Index>(n));
  model.train_deviance.push_back(mean_poisson_deviance(y, F.array().exp().matrix()));
  std::vector<char> in_bag(n);
  for (int t = 0; t < config.n_trees; ++t) {
    const auto rows = boost_bag(config, n, t);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (std::size_t r : rows) in_bag[r] = 1;
    for (std::size_t r : rows) {
      const auto i = static_cast<Eigen::Index>(r);
      residual[i] = y[i] - std::exp(F[i]);
    }
    std::vector<std::vector<std::size_t>> order(global_order.size());
    for (std::size_t f = 0; f < order.size(); ++f) {
      order[f].reserve(rows.size());
      for (std::size_t r : global_order[f]) {
        if (in_bag[r]) order[f].push_back(r);
      }
    }
    TreeGrower grower(X, residual, y, F, std::move(order), config.depth, min_node);
    model.trees.push_back(grower.grow());
    const RegressionTree& tree = model.trees.back();
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      F[i] += config.shrinkage * tree.predict(X.row(i));
    }
    model.train_deviance.push_back(mean_poisson_deviance(y, F.array().exp().matrix()));
  }
  return model;
}

std::vector<Eigen::VectorXd> boost_staged_log_predict(const BoostModel& model,
                                                      const Eigen::MatrixXd& X,
                                                      const std::vector<int>& checkpoints) {
  if (X.cols() != model.n_features) {
    throw ValidationError("boost_predict: expected " + std::to_string(model.n_features) +
                          " features, got " + std::to_string(X.cols()));
  }
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd F = Eigen::VectorXd::Constant(X.rows(), model.init_score);
  int done = 0;
  for (int cp : checkpoints) {
    if (cp < done || cp > static_cast<int>(model.trees.size())) {
      throw ValidationError("boost_predict: checkpoints must be ascending and <= tree count");
    }
    for (; done < cp; ++done) {
      const RegressionTree& tree = model.trees[static_cast<std::size_t>(done)];
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        F[i] += model.config.shrinkage * tree.predict(X.row(i));
      }
    }
    out.push_back(F);
  }
  return out;
}

Eigen::VectorXd boost_predict(const BoostModel& model, const Eigen::MatrixXd& X, int n_trees) {
  const int T = n_trees < 0 ? static_cast<int>(model.trees.size()) : n_trees;
  return boost_staged_log_predict(model, X, {T})[0].array().exp();
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

}  // namespace

CvGridResult cv_grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::vector<int> tree_grid, std::vector<int> depth_grid, int k,
                            const BoostConfig& base, unsigned threads) {
  base.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) throw ValidationError("cv: X / y size mismatch");
  if (k < 2) throw ValidationError("cv: need at least 2 folds");
  if (static_cast<std::size_t>(k) > n) throw ValidationError("cv: more folds than rows");
  if (tree_grid.empty() || depth_grid.empty()) throw ValidationError("cv: empty grid");
  std::sort(tree_grid.begin(), tree_grid.end());
  tree_grid.erase(std::unique(tree_grid.begin(), tree_grid.end()), tree_grid.end());
  std::sort(depth_grid.begin(), depth_grid.end());
  depth_grid.erase(std::unique(depth_grid.begin(), depth_grid.end()), depth_grid.end());
  if (tree_grid.front() < 1 || depth_grid.front() < 1) {
    throw ValidationError("cv: grid values must be positive");
  }
  check_counts(y);

  CvGridResult result;
  result.folds.assign(n, 0);
  {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(base.seed, kStreamFolds));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < n; ++i) result.folds[perm[i]] = static_cast<int>(i % k);
  }
  std::vector<std::vector<std::size_t>> train_rows(k), test_rows(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < k; ++f) (result.folds[i] == f ? test_rows : train_rows)[f].push_back(i);
  }
  for (int f = 0; f < k; ++f) {
    const std::size_t bag = base.bag_size(train_rows[f].size());
    if (bag == 0 || base.min_node_fraction * static_cast<double>(bag) < 1.0 - 1e-9) {
      throw ValidationError("cv: fold " + std::to_string(f) + " training set of " +
                            std::to_string(train_rows[f].size()) +
                            " rows is too small for the min-node requirement");
    }
  }

  const std::size_t n_depth = depth_grid.size();
  const int t_max = tree_grid.back();
  // scores[d][fold][t]
  std::vector<std::vector<std::vector<double>>> scores(
      n_depth, std::vector<std::vector<double>>(k, std::vector<double>(tree_grid.size())));
  parallel_for(n_depth * static_cast<std::size_t>(k), threads, [&](std::size_t task) {
    const std::size_t d = task / static_cast<std::size_t>(k);
    const int f = static_cast<int>(task % static_cast<std::size_t>(k));
    BoostConfig cfg = base;
    cfg.n_trees = t_max;
    cfg.depth = depth_grid[d];
    const BoostModel model = boost_fit(take_rows(X, train_rows[f]), take(y, train_rows[f]), cfg);
    const Eigen::MatrixXd X_test = take_rows(X, test_rows[f]);
    const Eigen::VectorXd y_test = take(y, test_rows[f]);
    const auto staged = boost_staged_log_predict(model, X_test, tree_grid);
    for (std::size_t t = 0; t < tree_grid.size(); ++t) {
      scores[d][f][t] = mean_poisson_deviance(y_test, staged[t].array().exp().matrix());
    }
  });

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < tree_grid.size(); ++t) {
    for (std::size_t d = 0; d < n_depth; ++d) {
      double sum = 0.0;
      for (int f = 0; f < k; ++f) sum += scores[d][f][t];
      const double mean = sum / k;
      result.grid.push_back({tree_grid[t], depth_grid[d], mean});
      if (mean < best) {
        best = mean;
        result.best_trees = tree_grid[t];
        result.best_depth = depth_grid[d];
      }
    }
  }
  return result;
}

std::string boost_to_json(const BoostModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = "gencal-boost";
  doc["version"] = 1;
  doc["init_score"] = model.init_score;
  doc["n_features"] = model.n_features;
  doc["config"] = {{"n_trees", model.config.n_trees},
                   {"depth", model.config.depth},
                   {"shrinkage", model.config.shrinkage},
                   {"bag_fraction", model.config.bag_fraction},
                   {"min_node_fraction", model.config.min_node_fraction},
                   {"seed", model.config.seed}};
  auto trees = nlohmann::ordered_json::array();
  for (const auto& tree : model.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& nd : tree.nodes) {
      nodes.push_back({{"feature", nd.feature},
                       {"threshold", nd.threshold},
                       {"left", nd.left},
                       {"right", nd.right},
                       {"value", nd.value},
                       {"count", nd.count},
                       {"depth", nd.depth}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump(1) + "\n";
}

BoostModel boost_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("boost model JSON: ") + e.what());
  }
  if (doc.value("format", "") != "gencal-boost") {
    throw ValidationError("boost model JSON: not a gencal-boost document");
  }
  if (doc.value("version", 0) != 1) {
    throw ValidationError("boost model JSON: unsupported version");
  }
  try {
    BoostModel m;
    m.init_score = doc.at("init_score").get<double>();
    m.n_features = doc.at("n_features").get<int>();
    const auto& c = doc.at("config");
    m.config.n_trees = c.at("n_trees").get<int>();
    m.config.depth = c.at("depth").get<int>();
    m.config.shrinkage = c.at("shrinkage").get<double>();
    m.config.bag_fraction = c.at("bag_fraction").get<double>();
    m.config.min_node_fraction = c.at("min_node_fraction").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      for (const auto& nd : t.at("nodes")) {
        TreeNode node;
        node.feature = nd.at("feature").get<int>();
        node.threshold = nd.at("threshold").get<double>();
        node.left = nd.at("left").get<int>();
        node.right = nd.at("right").get<int>();
        node.value = nd.at("value").get<double>();
        node.count = nd.at("count").get<std::size_t>();
        node.depth = nd.at("depth").get<int>();
        tree.nodes.push_back(node);
      }
      const int size = static_cast<int>(tree.nodes.size());
      for (const auto& nd : tree.nodes) {
        if (nd.feature >= m.n_features ||
            (nd.feature >= 0 && (nd.left <= 0 || nd.left >= size || nd.right <= 0 || nd.right >= size))) {
          throw ValidationError("boost model JSON: malformed tree");
        }
      }
      if (tree.nodes.empty()) throw ValidationError("boost model JSON: empty tree");
      m.trees.push_back(std::move(tree));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("boost model JSON: ") + e.what());
  }
}

}  // namespace gencal
