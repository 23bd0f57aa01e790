#include "spreadlab/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spreadlab/detail/split_kernel.hpp"
#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab::gbm {

namespace {

using detail::NodeState;
using detail::SplitCandidate;

std::string fmt(double v) { return format_double(v); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidHyperparams, what);
}

// Node under construction; children index into the same growth buffer.
struct Growing {
  TreeNode node;
  NodeState state;
  std::vector<std::size_t> path_features;
};

// Pairwise group compatibility: every feature is compatible with itself,
// two distinct features only when some group holds both.
class InteractionRule {
 public:
  InteractionRule(const std::vector<std::vector<std::size_t>>& groups, std::size_t p) : p_(p) {
    if (groups.empty()) return;
    active_ = true;
    compatible_.assign(p * p, 0);
    for (std::size_t f = 0; f < p; ++f) compatible_[f * p + f] = 1;
    for (const auto& group : groups) {
      for (auto a : group) {
        for (auto b : group) compatible_[a * p + b] = 1;
      }
    }
  }

  bool allowed(std::size_t f, const std::vector<std::size_t>& path) const {
    if (!active_) return true;
    return std::all_of(path.begin(), path.end(), [&](std::size_t q) { return compatible_[f * p_ + q] != 0; });
  }

 private:
  std::size_t p_;
  bool active_ = false;
  std::vector<std::uint8_t> compatible_;
};

// Turns every internal node whose children are both leaves and whose gain
// does not exceed gamma into a leaf, repeating upward.
void prune(std::vector<Growing>& nodes, int id, double gamma) {
  TreeNode& node = nodes[static_cast<std::size_t>(id)].node;
  if (node.is_leaf()) return;
  prune(nodes, node.left, gamma);
  prune(nodes, node.right, gamma);
  const bool children_leaves = nodes[static_cast<std::size_t>(node.left)].node.is_leaf() &&
                               nodes[static_cast<std::size_t>(node.right)].node.is_leaf();
  if (children_leaves && !(node.gain > gamma)) {
    node.feature = -1;
    node.threshold = 0.0;
    node.left = -1;
    node.right = -1;
    node.gain = 0.0;
  }
}

int emit_preorder(const std::vector<Growing>& nodes, int id, std::vector<TreeNode>& out) {
  const int slot = static_cast<int>(out.size());
  out.push_back(nodes[static_cast<std::size_t>(id)].node);
  if (!out.back().is_leaf()) {
    const int left = emit_preorder(nodes, nodes[static_cast<std::size_t>(id)].node.left, out);
    const int right = emit_preorder(nodes, nodes[static_cast<std::size_t>(id)].node.right, out);
    out[static_cast<std::size_t>(slot)].left = left;
    out[static_cast<std::size_t>(slot)].right = right;
  }
  return slot;
}

int depth_from(const std::vector<TreeNode>& nodes, int id) {
  const TreeNode& node = nodes[static_cast<std::size_t>(id)];
  if (node.is_leaf()) return 0;
  return 1 + std::max(depth_from(nodes, node.left), depth_from(nodes, node.right));
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

Hyperparams Hyperparams::tuned() {
  Hyperparams hp;
  hp.learning_rate = 0.01;
  hp.max_depth = 4;
  hp.gamma = 0.00004;
  hp.min_child_weight = 5.0;
  hp.subsample = 0.9;
  hp.lambda = 400.0;
  hp.nrounds = 800;
  return hp;
}

void Hyperparams::validate(std::size_t n_features) const {
  require(learning_rate > 0.0 && learning_rate <= 1.0, "learning_rate must lie in (0, 1], got " + fmt(learning_rate));
  require(max_depth >= 1, "max_depth must be >= 1, got " + std::to_string(max_depth));
  require(gamma >= 0.0, "gamma must be >= 0, got " + fmt(gamma));
  require(min_child_weight >= 0.0, "min_child_weight must be >= 0, got " + fmt(min_child_weight));
  require(subsample > 0.0 && subsample <= 1.0, "subsample must lie in (0, 1], got " + fmt(subsample));
  require(colsample > 0.0 && colsample <= 1.0, "colsample must lie in (0, 1], got " + fmt(colsample));
  require(lambda >= 0.0, "lambda must be >= 0, got " + fmt(lambda));
  require(nrounds >= 1, "nrounds must be >= 1, got " + std::to_string(nrounds));
  if (!monotone_constraints.empty()) {
    require(monotone_constraints.size() == n_features,
            "monotone_constraints has " + std::to_string(monotone_constraints.size()) + " entries for " +
                std::to_string(n_features) + " features");
    for (int d : monotone_constraints) require(d >= -1 && d <= 1, "monotone direction must be -1, 0 or +1");
  }
  for (const auto& group : interaction_constraints) {
    for (auto f : group) {
      require(f < n_features, "interaction constraint names feature " + std::to_string(f) + " of " +
                                  std::to_string(n_features));
    }
  }
}

double Tree::predict(std::span<const double> row) const {
  int id = 0;
  while (true) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return node.weight;
    id = row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
}

double Tree::predict(const Eigen::MatrixXd& X, Eigen::Index row) const {
  int id = 0;
  while (true) {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return node.weight;
    id = X(row, node.feature) < node.threshold ? node.left : node.right;
  }
}

int Tree::depth() const { return nodes.empty() ? 0 : depth_from(nodes, 0); }

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
    return n.is_leaf();
  }));
}

double Ensemble::predict(std::span<const double> row) const {
  if (row.size() != feature_names.size()) {
    throw Error(ErrorKind::SchemaMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                               std::to_string(feature_names.size()));
  }
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(row);
  return base_score + learning_rate * sum;
}

SortedColumns::SortedColumns(const Eigen::MatrixXd& X) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  order_.resize(p);
  values_.resize(p);
  for (std::size_t f = 0; f < p; ++f) {
    auto& order = order_[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0U);
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return X(a, col) < X(b, col);
    });
    auto& values = values_[f];
    values.resize(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = X(order[k], col);
  }
}

Tree fit_tree(const Eigen::MatrixXd& X, const SortedColumns& sorted, std::span<const double> g,
              std::span<const double> h, std::span<const std::size_t> rows, std::span<const std::size_t> cols,
              const Hyperparams& hp, ExecutionPolicy policy) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "fit_tree needs at least one row");

  std::vector<std::size_t> features(cols.begin(), cols.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());

  const InteractionRule rule(hp.interaction_constraints, p);
  std::vector<Growing> nodes;
  std::vector<int> node_of(n, -1);

  Growing root;
  for (auto r : rows) {
    node_of[r] = 0;
    root.state.G += g[r];
    root.state.H += h[r];
  }
  root.state.weight = detail::leaf_weight(root.state.G, root.state.H, hp.lambda, root.state.lower, root.state.upper);
  root.node.weight = root.state.weight;
  root.node.cover = root.state.H;
  nodes.push_back(std::move(root));

  detail::NodePartition partition(sorted, rows, features);
  std::vector<int> frontier{0};
  std::vector<std::uint8_t> go_left(n, 0);
  for (int depth = 0; depth < hp.max_depth && !frontier.empty(); ++depth) {
    std::vector<NodeState> slots;
    std::vector<std::uint8_t> allowed(frontier.size() * p, 0);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const Growing& node = nodes[static_cast<std::size_t>(frontier[s])];
      slots.push_back(node.state);
      for (auto f : features) allowed[s * p + f] = rule.allowed(f, node.path_features) ? 1 : 0;
    }

    detail::LevelContext ctx;
    ctx.g = g;
    ctx.h = h;
    ctx.slots = slots;
    ctx.allowed = allowed;
    ctx.monotone = hp.monotone_constraints;
    ctx.lambda = hp.lambda;
    ctx.min_child_weight = hp.min_child_weight;
    const std::vector<SplitCandidate> best = partition.find_best_splits(ctx, policy);

    std::vector<int> next;
    std::vector<std::uint8_t> split(frontier.size(), 0);
    std::vector<int> left_of(nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const SplitCandidate& c = best[s];
      if (!c.valid) continue;
      split[s] = 1;
      const auto parent_id = static_cast<std::size_t>(frontier[s]);
      const NodeState parent = nodes[parent_id].state;
      const int direction =
          hp.monotone_constraints.empty() ? 0 : hp.monotone_constraints[static_cast<std::size_t>(c.feature)];

      Growing left;
      Growing right;
      left.state = {c.GL, c.HL, parent.lower, parent.upper, c.wL};
      right.state = {parent.G - c.GL, parent.H - c.HL, parent.lower, parent.upper, c.wR};
      const double mid = 0.5 * (c.wL + c.wR);
      if (direction > 0) {
        left.state.upper = std::min(left.state.upper, mid);
        right.state.lower = std::max(right.state.lower, mid);
      } else if (direction < 0) {
        left.state.lower = std::max(left.state.lower, mid);
        right.state.upper = std::min(right.state.upper, mid);
      }
      for (Growing* child : {&left, &right}) {
        child->node.weight = child->state.weight;
        child->node.cover = child->state.H;
        child->path_features = nodes[parent_id].path_features;
        child->path_features.push_back(static_cast<std::size_t>(c.feature));
      }

      const int left_id = static_cast<int>(nodes.size());
      TreeNode& pn = nodes[parent_id].node;
      pn.feature = c.feature;
      pn.threshold = c.threshold;
      pn.gain = c.gain;
      pn.left = left_id;
      pn.right = left_id + 1;
      left_of[parent_id] = left_id;
      nodes.push_back(std::move(left));
      nodes.push_back(std::move(right));
      next.push_back(left_id);
      next.push_back(left_id + 1);
    }
    if (next.empty()) break;

    for (auto r : rows) {
      const auto id = static_cast<std::size_t>(node_of[r]);
      if (id >= left_of.size() || left_of[id] < 0) continue;
      const TreeNode& pn = nodes[id].node;
      const bool left = X(static_cast<Eigen::Index>(r), pn.feature) < pn.threshold;
      go_left[r] = left ? 1 : 0;
      node_of[r] = left ? pn.left : pn.right;
    }
    if (depth + 1 < hp.max_depth) partition.split(split, go_left, policy);
    frontier = std::move(next);
  }

  prune(nodes, 0, hp.gamma);
  Tree tree;
  emit_preorder(nodes, 0, tree.nodes);
  return tree;
}

Tree fit_tree(const Eigen::MatrixXd& X, std::span<const double> g, std::span<const double> h,
              std::span<const std::size_t> rows, std::span<const std::size_t> cols, const Hyperparams& hp) {
  const SortedColumns sorted(X);
  return fit_tree(X, sorted, g, h, rows, cols, hp, ExecutionPolicy::Serial);
}

BoostTrace fit_traced(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparams& hp,
                      std::vector<std::string> feature_names, ExecutionPolicy policy) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "design has " + std::to_string(n) + " rows, response has " + std::to_string(y.size()));
  }
  if (n < 2) throw Error(ErrorKind::InsufficientData, "boosting needs n >= 2, got " + std::to_string(n));
  hp.validate(p);
  if (feature_names.empty()) {
    for (std::size_t f = 0; f < p; ++f) feature_names.push_back("x" + std::to_string(f));
  }
  if (feature_names.size() != p) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(feature_names.size()) + " feature names for " + std::to_string(p) + " columns");
  }

  BoostTrace trace;
  Ensemble& model = trace.model;
  model.base_score = stable_mean(y);
  model.learning_rate = hp.learning_rate;
  model.hyperparams = hp;
  model.feature_names = std::move(feature_names);

  const SortedColumns sorted(X);
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), model.base_score);
  std::vector<double> g(n);
  const std::vector<double> h(n, 1.0);
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  std::vector<std::size_t> all_cols(p);
  std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

  const auto n_rows = static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(n)));
  const auto n_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hp.colsample * static_cast<double>(p))));
  if (n_rows == 0) {
    throw Error(ErrorKind::EmptyAfterSubsample, "subsample " + fmt(hp.subsample) + " of " + std::to_string(n) +
                                                    " rows leaves none");
  }

  trace.train_mse.push_back(mse(pred, y));
  model.trees.reserve(static_cast<std::size_t>(hp.nrounds));
  for (int b = 0; b < hp.nrounds; ++b) {
    for (std::size_t i = 0; i < n; ++i) g[i] = pred[static_cast<Eigen::Index>(i)] - y[static_cast<Eigen::Index>(i)];

    Rng rng(derive_seed(hp.seed, static_cast<std::uint64_t>(b)));
    std::vector<std::size_t> rows = hp.subsample < 1.0 ? rng.sample_without_replacement(n, n_rows) : all_rows;
    std::vector<std::size_t> cols = hp.colsample < 1.0 ? rng.sample_without_replacement(p, n_cols) : all_cols;

    Tree tree = fit_tree(X, sorted, g, h, rows, cols, hp, policy);
    for (std::size_t i = 0; i < n; ++i) {
      pred[static_cast<Eigen::Index>(i)] += hp.learning_rate * tree.predict(X, static_cast<Eigen::Index>(i));
    }
    model.trees.push_back(std::move(tree));
    trace.train_mse.push_back(mse(pred, y));
  }
  return trace;
}

Ensemble fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Hyperparams& hp,
             std::vector<std::string> feature_names, ExecutionPolicy policy) {
  return fit_traced(X, y, hp, std::move(feature_names), policy).model;
}

Ensemble fit(const Dataset& data, const FeatureSpec& spec, const Hyperparams& hp, ExecutionPolicy policy) {
  spec.validate();
  DesignMatrix dm = design_matrix(data, spec);
  return fit(dm.X, dm.y, hp, std::move(dm.columns), policy);
}

Trainer trainer(const Hyperparams& hp) {
  return [hp](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t seed) -> RegressorPtr {
    Hyperparams local = hp;
    local.seed = seed;
    return std::make_shared<const Ensemble>(fit(X, y, local));
  };
}

std::vector<std::size_t> feature_indices(const std::vector<std::string>& feature_names,
                                         const std::vector<std::string>& wanted) {
  std::vector<std::size_t> out;
  for (const auto& w : wanted) {
    const auto it = std::find(feature_names.begin(), feature_names.end(), w);
    if (it == feature_names.end()) throw Error(ErrorKind::UnknownFeature, "no feature named '" + w + "'");
    out.push_back(static_cast<std::size_t>(it - feature_names.begin()));
  }
  return out;
}

}  // namespace spreadlab::gbm
