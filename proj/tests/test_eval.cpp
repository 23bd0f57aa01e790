#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "spreadlab/eval.hpp"
#include "spreadlab/random.hpp"
#include "spreadlab/synth.hpp"
#include "support.hpp"

using namespace spreadlab;
using namespace spreadlab::eval;
using testing::error_kind;

namespace {

Dataset small_sample(std::size_t n, std::uint64_t seed) {
  ScenarioConfig c;
  c.n = n;
  c.seed = seed;
  return generate(c).data;
}

gbm::Hyperparams quick() {
  gbm::Hyperparams hp;
  hp.learning_rate = 0.2;
  hp.max_depth = 2;
  hp.nrounds = 15;
  hp.lambda = 1.0;
  return hp;
}

}  // namespace

TEST_CASE("fold assignment is balanced and seeded") {
  const auto f = fold_assignment(23, 5, 4);
  std::vector<int> sizes(5, 0);
  for (auto k : f) ++sizes.at(k);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  CHECK(fold_assignment(23, 5, 4) == f);
  CHECK_FALSE(fold_assignment(23, 5, 5) == f);
  CHECK(error_kind([] { fold_assignment(10, 1, 0); }) == "InvalidConfig");
  CHECK(error_kind([] { fold_assignment(3, 5, 0); }) == "InsufficientData");
}

TEST_CASE("splits partition the rows") {
  const auto s = make_split(765, 0.8, 9, 3);
  CHECK(s.train.size() == 612);
  CHECK(s.test.size() == 153);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 765);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(make_split(765, 0.8, 9, 3).test == s.test);
  CHECK_FALSE(make_split(765, 0.8, 9, 4).test == s.test);
  CHECK(error_kind([] { make_split(10, 1.0, 0, 0); }) == "InvalidConfig");
  CHECK(error_kind([] { make_split(3, 0.1, 0, 0); }) == "DegenerateSplit");
}

TEST_CASE("grid enumeration order and sizes") {
  GridSpec g;
  g.base = quick();
  g.learning_rate = {0.1, 0.2};
  g.max_depth = {1, 2, 3};
  const auto pts = g.points();
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].learning_rate == 0.1);
  CHECK(pts[2].max_depth == 3);
  CHECK(pts[3].learning_rate == 0.2);
  CHECK(pts[3].max_depth == 1);
  CHECK(pts[5].nrounds == 15);
  CHECK(GridSpec::around_tuned().points().size() == 243);
  CHECK(GridSpec::reduced(quick()).points().size() == 2);
  auto bad = g;
  bad.max_depth = {0};
  CHECK(error_kind([&] { bad.validate(3); }) == "InvalidHyperparams");
}

TEST_CASE("grid search CV error matches a hand-rolled k-fold loop") {
  const auto X = testing::uniform_matrix(60, 3, 21);
  const Eigen::VectorXd y = (X.col(0).array() * X.col(1).array()).matrix() + testing::normal_vector(60, 22, 0.05);
  GridSpec g;
  g.base = quick();
  g.max_depth = {1, 3};
  g.k = 4;
  const auto res = grid_search(X, y, g, 77);
  REQUIRE(res.table.size() == 2);

  const auto fold = fold_assignment(60, 4, derive_seed(77, 0));
  for (std::size_t p = 0; p < 2; ++p) {
    double sse = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (Eigen::Index i = 0; i < 60; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      auto hp = g.points()[p];
      hp.seed = derive_seed(77, 1 + f);
      const auto m = gbm::fit(X(tr, Eigen::all), y(tr), hp);
      const Eigen::MatrixXd Xte = X(te, Eigen::all);
      sse += (y(te) - m.predict(Xte)).squaredNorm();
    }
    CHECK(res.table[p].cv_mse == doctest::Approx(sse / 60.0).epsilon(1e-12));
  }
  const std::size_t best = res.table[0].cv_mse <= res.table[1].cv_mse ? 0 : 1;
  CHECK(res.best_index == best);
  CHECK(res.best == res.table[best].hp);
}

TEST_CASE("grid search ties go to the first point, serial equals parallel") {
  const auto X = testing::uniform_matrix(40, 2, 23);
  const Eigen::VectorXd y = X.col(0) + testing::normal_vector(40, 24, 0.1);
  GridSpec g;
  g.base = quick();
  g.gamma = {0.0, 0.0, 0.0};
  const int saved = max_threads();
  set_threads(4);
  const auto a = grid_search(X, y, g, 5, ExecutionPolicy::Serial);
  const auto b = grid_search(X, y, g, 5, ExecutionPolicy::Parallel);
  set_threads(saved);
  CHECK(a.best_index == 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.table[i].cv_mse == b.table[i].cv_mse);
}

TEST_CASE("model kinds parse") {
  CHECK(parse_model_kind("stepwise") == ModelKind::Stepwise);
  CHECK(to_string(ModelKind::Lasso) == "lasso");
  CHECK(error_kind([] { parse_model_kind("forest"); }) == "InvalidConfig");
  const auto gbm = ModelConfig::defaults(ModelKind::Gbm);
  CHECK(gbm.tune.has_value());
  CHECK(gbm.hp == gbm::Hyperparams::tuned());
  CHECK(ModelConfig::defaults(ModelKind::Stepwise).spec.interactions.size() > 0);
  CHECK_FALSE(ModelConfig::defaults(ModelKind::Lasso).intervals);
}

TEST_CASE("mean and sample standard deviation") {
  const auto [m, s] = mean_sd({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(m == 5.0);
  CHECK(s == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(mean_sd({3.0}).second == 0.0);
  CHECK(std::isnan(mean_sd({}).first));
}

TEST_CASE("Monte-Carlo CV of the mean model matches a direct computation") {
  const auto d = small_sample(90, 31);
  McConfig mc;
  mc.n_splits = 5;
  mc.seed = 8;
  const auto rep = monte_carlo_cv(d, {ModelConfig::defaults(ModelKind::Mean)}, mc);
  REQUIRE(rep.rows.size() == 5);
  std::vector<double> mses;
  for (std::size_t s = 0; s < 5; ++s) {
    const auto sp = make_split(90, 0.8, 8, s);
    double mean = 0.0;
    for (auto i : sp.train) mean += d.records[i].spread / 1e4;
    mean /= static_cast<double>(sp.train.size());
    double mse = 0.0;
    for (auto i : sp.test) mse += std::pow(d.records[i].spread / 1e4 - mean, 2);
    mse /= static_cast<double>(sp.test.size());
    CHECK(rep.rows[s].mse == doctest::Approx(mse).epsilon(1e-10));
    CHECK(std::isnan(rep.rows[s].coverage));
    mses.push_back(mse);
  }
  CHECK(rep.summary("mean").mean_mse == doctest::Approx(mean_sd(mses).first));
  CHECK(rep.complete);
}

TEST_CASE("Monte-Carlo CV is identical serial and parallel") {
  const auto d = small_sample(80, 32);
  auto gbm = ModelConfig::defaults(ModelKind::Gbm);
  gbm.hp = quick();
  gbm.hp.subsample = 0.8;
  gbm.tune.reset();
  auto ols = ModelConfig::defaults(ModelKind::Ols);
  ols.spec = FeatureSpec::main_effects();
  McConfig mc;
  mc.n_splits = 3;
  const int saved = max_threads();
  set_threads(3);
  const auto a = monte_carlo_cv(d, {gbm, ols}, mc, ExecutionPolicy::Serial);
  const auto b = monte_carlo_cv(d, {gbm, ols}, mc, ExecutionPolicy::Parallel);
  set_threads(saved);
  REQUIRE(a.rows.size() == 6);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mse == b.rows[i].mse);
    CHECK(a.rows[i].coverage == b.rows[i].coverage);
    CHECK(a.rows[i].length_bps == b.rows[i].length_bps);
  }
  CHECK(a.rows[0].model == "gbm");
  CHECK(a.rows[1].model == "ols");
  CHECK(a.rows[0].coverage >= 0.0);
  CHECK(a.rows[1].length_bps > 0.0);
  std::ostringstream csa, csb;
  write_rows_csv(a, csa);
  write_rows_csv(b, csb);
  CHECK(csa.str() == csb.str());
}

TEST_CASE("per-split failures are recorded, not thrown") {
  const auto d = small_sample(30, 33);
  auto lasso = ModelConfig::defaults(ModelKind::Lasso);
  lasso.lasso_folds = 50;
  McConfig mc;
  mc.n_splits = 2;
  const auto rep = monte_carlo_cv(d, {lasso, ModelConfig::defaults(ModelKind::Mean)}, mc);
  CHECK_FALSE(rep.complete);
  CHECK_FALSE(rep.rows[0].ok);
  CHECK(rep.rows[0].error.find("InsufficientData") == 0);
  CHECK(rep.rows[1].ok);
  CHECK(rep.summary("lasso").failed == 2);
  CHECK(rep.summary("mean").completed == 2);
  CHECK(error_kind([&] { rep.summary("gbm"); }) == "InvalidConfig");
  mc.n_splits = 0;
  CHECK(error_kind([&] { monte_carlo_cv(d, {lasso}, mc); }) == "InvalidConfig");
}
