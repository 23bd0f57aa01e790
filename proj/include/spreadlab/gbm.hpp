#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spreadlab/data.hpp"
#include "spreadlab/parallel.hpp"
#include "spreadlab/regressor.hpp"

namespace spreadlab::gbm {

struct Hyperparams {
  double learning_rate = 0.3;
  int max_depth = 6;
  /// Minimum retained split gain; subtrees at or below it are pruned.
  double gamma = 0.0;
  /// Minimum hessian sum per child (= instance count under squared error).
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  /// L2 penalty on leaf weights.
  double lambda = 1.0;
  int nrounds = 100;
  std::uint64_t seed = 0;
  /// Per-feature direction in {-1, 0, +1}; empty means unconstrained.
  std::vector<int> monotone_constraints;
  /// Groups of feature indices allowed to interact; empty means unrestricted.
  std::vector<std::vector<std::size_t>> interaction_constraints;

  /// Optimum reported for the full 765-bond sample.
  static Hyperparams tuned();

  /// Throws InvalidHyperparams.
  void validate(std::size_t n_features) const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double gain = 0.0;
  double weight = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat binary tree in depth-first pre-order; node 0 is the root. Rows with
/// x[feature] < threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  double predict(const Eigen::MatrixXd& X, Eigen::Index row) const;
  int depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

class Ensemble final : public Regressor {
 public:
  double base_score = 0.0;
  double learning_rate = 0.3;
  std::vector<Tree> trees;
  Hyperparams hyperparams;
  std::vector<std::string> feature_names;

  /// base_score + learning_rate * sum of tree outputs. Throws SchemaMismatch.
  double predict(std::span<const double> row) const override;
  using Regressor::predict;
  std::size_t n_features() const override { return feature_names.size(); }

  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    return a.base_score == b.base_score && a.learning_rate == b.learning_rate && a.trees == b.trees &&
           a.hyperparams == b.hyperparams && a.feature_names == b.feature_names;
  }
};

/// Per-feature row orders sorted by (value, row index), built once per fit.
class SortedColumns {
 public:
  explicit SortedColumns(const Eigen::MatrixXd& X);
  std::span<const std::uint32_t> order(std::size_t feature) const { return order_[feature]; }
  std::span<const double> values(std::size_t feature) const { return values_[feature]; }
  std::size_t n_features() const { return order_.size(); }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::vector<double>> values_;
};

/// Exact greedy tree on gradients g and hessians h restricted to `rows` and
/// the candidate features `cols`: grows to max_depth, then prunes every
/// subtree whose split gain does not exceed gamma.
Tree fit_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted, std::span<const double> g,
              std::span<const double> h, std::span<const std::size_t> rows, std::span<const std::size_t> cols,
              const Hyperparams& hp, ExecutionPolicy policy = ExecutionPolicy::Serial);

Tree fit_tree(const Eigen::MatrixXd& X, std::span<const double> g, std::span<const double> h,
              std::span<const std::size_t> rows, std::span<const std::size_t> cols, const Hyperparams& hp);

struct BoostTrace {
  Ensemble model;
  /// Training MSE after each round (index 0 = base score only).
  std::vector<double> train_mse;
};

BoostTrace fit_traced(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                      std::vector<std::string> feature_names = {},
                      ExecutionPolicy policy = ExecutionPolicy::Serial);

Ensemble fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparams& hp,
             std::vector<std::string> feature_names = {}, ExecutionPolicy policy = ExecutionPolicy::Serial);

Ensemble fit(const Dataset& data, const FeatureSpec& spec, const Hyperparams& hp,
             ExecutionPolicy policy = ExecutionPolicy::Serial);

/// Boosting trainer; the seed argument overrides hp.seed.
Trainer trainer(const Hyperparams& hp);

/// Maps predictor names to feature indices for constraint specs.
std::vector<std::size_t> feature_indices(const std::vector<std::string>& feature_names,
                                         const std::vector<std::string>& wanted);

}  // namespace spreadlab::gbm
