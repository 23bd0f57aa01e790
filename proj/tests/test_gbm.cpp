#include <map>
#include <numeric>
#include <set>

#include "spreadlab/gbm.hpp"
#include "spreadlab/synth.hpp"
#include "support.hpp"

using namespace spreadlab;
using testing::error_kind;
using testing::rel_diff;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Problem friedman(Eigen::Index n, std::uint64_t seed) {
  Problem p;
  p.X = testing::uniform_matrix(n, 5, seed);
  p.y.resize(n);
  const auto noise = testing::normal_vector(n, seed + 1000, 0.5);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = p.X.row(i);
    p.y[i] = 10.0 * std::sin(3.14159 * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
             5.0 * x[4] + noise[i];
  }
  return p;
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).squaredNorm() / a.size(); }

struct Stump {
  int feature = -1;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
};

// Exhaustive search over every feature and every gap between distinct sorted
// values, scoring the unregularized squared-error reduction.
Stump brute_force_stump(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = X.rows();
  const double base = y.mean();
  Stump best;
  double best_gain = 0.0;
  double G = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) G += base - y[i];
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return X(a, f) < X(b, f); });
    double GL = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      GL += base - y[order[static_cast<std::size_t>(k)]];
      const double a = X(order[static_cast<std::size_t>(k)], f);
      const double b = X(order[static_cast<std::size_t>(k + 1)], f);
      if (a == b) continue;
      const double HL = static_cast<double>(k + 1);
      const double HR = static_cast<double>(n) - HL;
      const double GR = G - GL;
      const double gain = GL * GL / HL + GR * GR / HR - G * G / static_cast<double>(n);
      if (gain > best_gain * (1.0 + 1e-12)) {
        best_gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = (a + b) / 2.0;
        best.left = -GL / HL;
        best.right = -GR / HR;
      }
    }
  }
  return best;
}

void collect_paths(const gbm::Tree& t, int id, std::vector<int>& path, std::vector<std::vector<int>>& out) {
  const auto& node = t.nodes[static_cast<std::size_t>(id)];
  if (node.is_leaf()) {
    out.push_back(path);
    return;
  }
  path.push_back(node.feature);
  collect_paths(t, node.left, path, out);
  collect_paths(t, node.right, path, out);
  path.pop_back();
}

std::vector<std::vector<int>> root_to_leaf_features(const gbm::Tree& t) {
  std::vector<std::vector<int>> out;
  std::vector<int> path;
  collect_paths(t, 0, path, out);
  return out;
}

}  // namespace

TEST_CASE("default and published hyperparameters") {
  const gbm::Hyperparams d;
  CHECK(d.learning_rate == 0.3);
  CHECK(d.max_depth == 6);
  CHECK(d.lambda == 1.0);
  const auto t = gbm::Hyperparams::tuned();
  CHECK(t.learning_rate == 0.01);
  CHECK(t.max_depth == 4);
  CHECK(t.gamma == 0.00004);
  CHECK(t.min_child_weight == 5.0);
  CHECK(t.subsample == 0.9);
  CHECK(t.lambda == 400.0);
  CHECK(t.nrounds == 800);
}

TEST_CASE("hyperparameter validation") {
  auto bad = [](auto mutate) {
    gbm::Hyperparams hp;
    mutate(hp);
    return error_kind([&] { hp.validate(3); });
  };
  CHECK(bad([](gbm::Hyperparams&) {}) == "none");
  CHECK(bad([](gbm::Hyperparams& h) { h.learning_rate = 0.0; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.max_depth = 0; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.gamma = -1.0; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.subsample = 1.5; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.colsample = 0.0; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.lambda = -0.1; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.nrounds = 0; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.monotone_constraints = {1, 0}; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.monotone_constraints = {1, 0, 2}; }) == "InvalidHyperparams");
  CHECK(bad([](gbm::Hyperparams& h) { h.interaction_constraints = {{0, 3}}; }) == "InvalidHyperparams");
}

TEST_CASE("sorted columns") {
  const auto X = testing::uniform_matrix(30, 3, 4);
  const gbm::SortedColumns s(X);
  REQUIRE(s.n_features() == 3);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto order = s.order(f);
    const auto values = s.values(f);
    for (std::size_t k = 0; k < 30; ++k) CHECK(values[k] == X(order[k], static_cast<Eigen::Index>(f)));
    CHECK(std::is_sorted(values.begin(), values.end()));
  }
}

TEST_CASE("single stump matches exhaustive search") {
  gbm::Hyperparams hp;
  hp.nrounds = 1;
  hp.max_depth = 1;
  hp.lambda = 0.0;
  hp.learning_rate = 0.5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto n = static_cast<Eigen::Index>(10 + 2 * seed);
    const auto p = friedman(n, seed);
    const auto stump = brute_force_stump(p.X, p.y);
    const auto model = gbm::fit(p.X, p.y, hp);
    REQUIRE(model.trees.size() == 1);
    const auto& t = model.trees[0];
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == stump.feature);
    CHECK(t.nodes[0].threshold == stump.threshold);
    CHECK(rel_diff(t.nodes[t.nodes[0].left].weight, stump.left) < 1e-12);
    CHECK(rel_diff(t.nodes[t.nodes[0].right].weight, stump.right) < 1e-12);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = p.X(i, stump.feature) < stump.threshold ? stump.left : stump.right;
      const Eigen::VectorXd row = p.X.row(i).transpose();
      CHECK(rel_diff(model.predict(row), p.y.mean() + 0.5 * w) < 1e-12);
    }
  }
}

TEST_CASE("training error never increases without subsampling") {
  gbm::Hyperparams hp;
  hp.nrounds = 60;
  hp.max_depth = 3;
  hp.learning_rate = 0.2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = friedman(80, 100 + seed);
    const auto trace = gbm::fit_traced(p.X, p.y, hp);
    REQUIRE(trace.train_mse.size() == 61);
    for (std::size_t b = 1; b < trace.train_mse.size(); ++b) {
      CHECK(trace.train_mse[b] <= trace.train_mse[b - 1]);
    }
    CHECK(rel_diff(trace.train_mse.back(), mse(trace.model.predict(p.X), p.y)) < 1e-12);
  }
}

TEST_CASE("leaf weights are the regularized Newton step of their rows") {
  const auto p = friedman(150, 5);
  gbm::Hyperparams hp;
  hp.max_depth = 3;
  hp.lambda = 2.5;
  hp.min_child_weight = 4.0;
  std::vector<double> g(150), h(150, 1.0);
  for (std::size_t i = 0; i < 150; ++i) g[i] = 1.0 - p.y[static_cast<Eigen::Index>(i)];
  std::vector<std::size_t> rows(150), cols{0, 1, 2, 3, 4};
  std::iota(rows.begin(), rows.end(), 0);
  const auto tree = gbm::fit_tree(p.X, g, h, rows, cols, hp);
  CHECK(tree.depth() <= 3);
  std::map<int, std::pair<double, double>> sums;
  for (Eigen::Index i = 0; i < 150; ++i) {
    int id = 0;
    while (!tree.nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
      id = p.X(i, nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    sums[id].first += g[static_cast<std::size_t>(i)];
    sums[id].second += 1.0;
  }
  CHECK(sums.size() == tree.leaf_count());
  for (const auto& [id, gh] : sums) {
    const auto& leaf = tree.nodes[static_cast<std::size_t>(id)];
    CHECK(rel_diff(leaf.weight, -gh.first / (gh.second + 2.5)) < 1e-12);
    CHECK(leaf.cover == gh.second);
    CHECK(leaf.cover >= 4.0);
  }
  // Pre-order layout: children follow their parent.
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    const auto& nd = tree.nodes[k];
    if (nd.is_leaf()) continue;
    CHECK(nd.left == static_cast<int>(k) + 1);
    CHECK(nd.right > nd.left);
  }
}

TEST_CASE("gamma prunes weak splits") {
  const auto p = friedman(100, 9);
  gbm::Hyperparams hp;
  hp.nrounds = 1;
  hp.max_depth = 4;
  hp.gamma = 1e12;
  const auto m = gbm::fit(p.X, p.y, hp);
  CHECK(m.trees[0].nodes.size() == 1);
  hp.gamma = 0.0;
  const auto grown = gbm::fit(p.X, p.y, hp);
  CHECK(grown.trees[0].leaf_count() > 1);
  for (const auto& nd : grown.trees[0].nodes) {
    if (!nd.is_leaf()) CHECK(nd.gain > 0.0);
  }
}

TEST_CASE("min child weight above half the rows blocks every split") {
  const auto p = friedman(20, 2);
  gbm::Hyperparams hp;
  hp.nrounds = 3;
  hp.min_child_weight = 11.0;
  const auto m = gbm::fit(p.X, p.y, hp);
  for (const auto& t : m.trees) CHECK(t.nodes.size() == 1);
}

TEST_CASE("monotone constraint holds along a grid") {
  const auto p = friedman(300, 12);
  gbm::Hyperparams hp;
  hp.nrounds = 50;
  hp.max_depth = 4;
  hp.learning_rate = 0.3;
  hp.monotone_constraints = {0, 0, -1, 0, 1};
  const auto m = gbm::fit(p.X, p.y, hp);
  for (Eigen::Index base = 0; base < 20; ++base) {
    Eigen::VectorXd row = p.X.row(base).transpose();
    double prev_up = -std::numeric_limits<double>::infinity();
    double prev_down = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100; ++k) {
      row[4] = k / 100.0;
      const double up = m.predict(row);
      CHECK(up >= prev_up);
      prev_up = up;
    }
    row = p.X.row(base).transpose();
    for (int k = 0; k <= 100; ++k) {
      row[2] = k / 100.0;
      const double down = m.predict(row);
      CHECK(down <= prev_down);
      prev_down = down;
    }
  }
}

TEST_CASE("interaction constraints restrict every path") {
  const auto p = friedman(200, 13);
  gbm::Hyperparams hp;
  hp.nrounds = 30;
  hp.max_depth = 4;
  hp.interaction_constraints = {{0}, {1}, {2}, {3}, {4}};
  const auto singles = gbm::fit(p.X, p.y, hp);
  for (const auto& t : singles.trees) {
    for (const auto& path : root_to_leaf_features(t)) CHECK(std::set<int>(path.begin(), path.end()).size() <= 1);
  }
  hp.interaction_constraints = {{0, 1}, {2, 3}};
  std::size_t multi = 0;
  const auto pairs = gbm::fit(p.X, p.y, hp);
  for (const auto& t : pairs.trees) {
    for (const auto& path : root_to_leaf_features(t)) {
      const std::set<int> used(path.begin(), path.end());
      const bool in01 = std::all_of(used.begin(), used.end(), [](int f) { return f == 0 || f == 1; });
      const bool in23 = std::all_of(used.begin(), used.end(), [](int f) { return f == 2 || f == 3; });
      CHECK((used.size() <= 1 || in01 || in23));
      if (used.size() > 1) ++multi;
    }
  }
  CHECK(multi > 0);
}

TEST_CASE("subsampling is seeded") {
  const auto p = friedman(120, 14);
  gbm::Hyperparams hp;
  hp.nrounds = 20;
  hp.subsample = 0.7;
  hp.colsample = 0.6;
  hp.seed = 5;
  const auto a = gbm::fit(p.X, p.y, hp);
  CHECK(a == gbm::fit(p.X, p.y, hp));
  hp.seed = 6;
  CHECK_FALSE(a == gbm::fit(p.X, p.y, hp));
  hp.subsample = 0.1;
  CHECK(error_kind([&] { gbm::fit(p.X.topRows(2), p.y.head(2), hp); }) == "EmptyAfterSubsample");
}

TEST_CASE("serial and parallel fits are bit-identical") {
  const auto p = friedman(250, 15);
  gbm::Hyperparams hp;
  hp.nrounds = 25;
  hp.max_depth = 4;
  hp.subsample = 0.8;
  hp.monotone_constraints = {0, 0, 0, 1, 0};
  const int saved = max_threads();
  set_threads(4);
  const auto serial = gbm::fit(p.X, p.y, hp, {}, ExecutionPolicy::Serial);
  const auto parallel = gbm::fit(p.X, p.y, hp, {}, ExecutionPolicy::Parallel);
  set_threads(saved);
  CHECK(serial == parallel);
  CHECK(serial.predict(p.X, ExecutionPolicy::Serial) == parallel.predict(p.X, ExecutionPolicy::Parallel));
}

TEST_CASE("input checks") {
  const auto p = friedman(40, 16);
  gbm::Hyperparams hp;
  hp.nrounds = 2;
  CHECK(error_kind([&] { gbm::fit(p.X, p.y.head(10), hp); }) == "DimensionMismatch");
  CHECK(error_kind([&] { gbm::fit(p.X.topRows(1), p.y.head(1), hp); }) == "InsufficientData");
  const auto m = gbm::fit(p.X, p.y, hp);
  CHECK(m.feature_names == std::vector<std::string>{"x0", "x1", "x2", "x3", "x4"});
  const Eigen::VectorXd short_row = Eigen::VectorXd::Zero(3);
  CHECK(error_kind([&] { m.predict(short_row); }) == "SchemaMismatch");
  CHECK(gbm::feature_indices(m.feature_names, {"x3", "x1"}) == std::vector<std::size_t>{3, 1});
  CHECK(error_kind([&] { gbm::feature_indices(m.feature_names, {"EL"}); }) == "UnknownFeature");
}

TEST_CASE("dataset overload uses the spec's columns") {
  ScenarioConfig c;
  c.n = 150;
  const auto data = generate(c).data;
  gbm::Hyperparams hp;
  hp.nrounds = 5;
  const auto spec = FeatureSpec::main_effects();
  const auto m = gbm::fit(data, spec, hp);
  CHECK(m.feature_names == spec.column_names());
  const auto dm = design_matrix(data, spec);
  CHECK(m == gbm::fit(dm.X, dm.y, hp, spec.column_names()));
}

TEST_CASE("trainer seed overrides the hyperparameter seed") {
  const auto p = friedman(60, 17);
  gbm::Hyperparams hp;
  hp.nrounds = 5;
  hp.subsample = 0.5;
  hp.seed = 1;
  const auto fitted = gbm::trainer(hp)(p.X, p.y, 9);
  hp.seed = 9;
  const auto direct = gbm::fit(p.X, p.y, hp);
  CHECK(*std::dynamic_pointer_cast<const gbm::Ensemble>(fitted) == direct);
}
