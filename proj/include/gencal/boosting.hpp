#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gencal {

struct BoostConfig {
  int n_trees = 100;
  /// Maximum interaction depth: levels of splits below the root.
  int depth = 1;
  double shrinkage = 0.01;
  double bag_fraction = 0.75;
  /// Minimum leaf size as a fraction of the bagged subsample.
  double min_node_fraction = 0.01;
  std::uint64_t seed = 1;

  /// Validates the ranges that do not depend on the data.
  void validate() const;
  /// Rows drawn per iteration from n training rows.
  std::size_t bag_size(std::size_t n) const;
  /// Minimum leaf count for a bag of `bag` rows; throws ValidationError if < 1.
  std::size_t min_node(std::size_t bag) const;
};

/// Flat binary tree. Internal nodes send x[feature] <= threshold left.
struct TreeNode {
  int feature = -1;  ///< -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  ///< leaf increment on the log scale, before shrinkage
  std::size_t count = 0;  ///< fitting rows that reached the node
  int depth = 0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int leaf_count() const;
  int split_count() const;
  int max_depth() const;
};

struct BoostModel {
  /// log of the training mean.
  double init_score = 0.0;
  std::vector<RegressionTree> trees;
  BoostConfig config;
  int n_features = 0;
  /// Mean Poisson deviance on the full training data after 0, 1, ..., T trees.
  std::vector<double> train_deviance;
};

/// Clamp applied to every Poisson leaf update.
inline constexpr double kLeafClamp = 5.0;

/// Grows one tree on `rows` (the bag) by exact greedy search, depth-wise to
/// `depth`. Splits maximize the squared-error gain on `residual`; each child
/// needs `min_node` rows. Leaf values are log(sum y / sum exp(F)) over the
/// leaf's rows, clamped to [-kLeafClamp, kLeafClamp].
RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& residual,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& F,
                         const std::vector<std::size_t>& rows, int depth, std::size_t min_node);

/// Gradient boosting with Poisson deviance on the log scale.
/// Throws ValidationError on bad config, all-zero y, or non-count outcomes.
BoostModel boost_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostConfig& config);

/// Bag used at iteration t (sorted row indices); what boost_fit draws.
std::vector<std::size_t> boost_bag(const BoostConfig& config, std::size_t n, int iteration);

/// exp(F0 + shrinkage * sum of the first n_trees trees); n_trees < 0 means all.
Eigen::VectorXd boost_predict(const BoostModel& model, const Eigen::MatrixXd& X, int n_trees = -1);

/// Log-scale predictions after each count in `checkpoints` (ascending).
std::vector<Eigen::VectorXd> boost_staged_log_predict(const BoostModel& model,
                                                      const Eigen::MatrixXd& X,
                                                      const std::vector<int>& checkpoints);

/// Mean Poisson unit deviance.
double mean_poisson_deviance(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& mu);

struct CvPoint {
  int n_trees = 0;
  int depth = 0;
  double mean_deviance = 0.0;
};

struct CvGridResult {
  std::vector<CvPoint> grid;
  int best_trees = 0;
  int best_depth = 0;
  /// Fold of each training row.
  std::vector<int> folds;
};

/// k-fold CV over (T, d). For each depth one model with max(T) trees is fit
/// per fold and scored after each T; a fold's score is its mean held-out
/// deviance and a configuration's score is the average across folds.
/// The best configuration minimizes that, ties going to smaller T then d.
/// `base` supplies shrinkage, bagging, min-node and the seed.
CvGridResult cv_grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::vector<int> tree_grid, std::vector<int> depth_grid, int k,
                            const BoostConfig& base, unsigned threads = 1);

/// Versioned JSON document (init score, config, trees).
std::string boost_to_json(const BoostModel& model);
BoostModel boost_from_json(const std::string& text);

}  // namespace gencal
