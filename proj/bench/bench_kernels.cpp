// Serial reference vs OpenMP path for each parallel kernel. The second
// benchmark argument selects the policy (0 = serial, 1 = parallel); set
// OMP_NUM_THREADS to control the team size.

#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "spreadlab/conformal.hpp"
#include "spreadlab/detail/split_kernel.hpp"
#include "spreadlab/eval.hpp"
#include "spreadlab/gbm.hpp"
#include "spreadlab/interpret.hpp"
#include "spreadlab/synth.hpp"

using namespace spreadlab;

namespace {

ExecutionPolicy policy_of(const benchmark::State& state) {
  return state.range(1) == 0 ? ExecutionPolicy::Serial : ExecutionPolicy::Parallel;
}

const Dataset& sample(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    ScenarioConfig c;
    c.n = n;
    it = cache.emplace(n, generate(c).data).first;
  }
  return it->second;
}

gbm::Hyperparams small_boost() {
  gbm::Hyperparams hp;
  hp.learning_rate = 0.1;
  hp.max_depth = 3;
  hp.min_child_weight = 5.0;
  hp.nrounds = 50;
  return hp;
}

void BM_FindBestSplits(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dm = design_matrix(sample(n), FeatureSpec::main_effects());
  const gbm::SortedColumns sorted(dm.X);
  std::vector<double> g(n), h(n, 1.0);
  const double mean = dm.y.mean();
  for (std::size_t i = 0; i < n; ++i) g[i] = mean - dm.y[static_cast<Eigen::Index>(i)];
  std::vector<std::size_t> rows(n), features(static_cast<std::size_t>(dm.X.cols()));
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(features.begin(), features.end(), 0);
  const gbm::detail::NodePartition partition(sorted, rows, features);
  gbm::detail::NodeState root;
  for (std::size_t i = 0; i < n; ++i) root.G += g[i];
  root.H = static_cast<double>(n);
  const std::vector<gbm::detail::NodeState> slots{root};
  const std::vector<std::uint8_t> allowed(features.size(), 1);
  gbm::detail::LevelContext ctx;
  ctx.g = g;
  ctx.h = h;
  ctx.slots = slots;
  ctx.allowed = allowed;
  ctx.lambda = 1.0;
  ctx.min_child_weight = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(partition.find_best_splits(ctx, policy_of(state)));
}
BENCHMARK(BM_FindBestSplits)->ArgsProduct({{765, 10000}, {0, 1}});

void BM_GbmFit(benchmark::State& state) {
  const auto dm = design_matrix(sample(static_cast<std::size_t>(state.range(0))), FeatureSpec::main_effects());
  const auto hp = small_boost();
  for (auto _ : state) benchmark::DoNotOptimize(gbm::fit(dm.X, dm.y, hp, {}, policy_of(state)));
}
BENCHMARK(BM_GbmFit)->ArgsProduct({{765, 10000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_JackknifeArtifacts(benchmark::State& state) {
  const auto dm = design_matrix(sample(static_cast<std::size_t>(state.range(0))), FeatureSpec::main_effects());
  auto hp = small_boost();
  hp.nrounds = 20;
  for (auto _ : state) {
    benchmark::DoNotOptimize(conformal::jackknife_artifacts(gbm::trainer(hp), dm.X, dm.y, 0, policy_of(state)));
  }
}
BENCHMARK(BM_JackknifeArtifacts)->ArgsProduct({{200}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_AleSecondOrder(benchmark::State& state) {
  const auto& data = sample(static_cast<std::size_t>(state.range(0)));
  const auto spec = FeatureSpec::main_effects();
  const auto dm = design_matrix(data, spec);
  const interpret::BoundModel model{std::make_shared<gbm::Ensemble>(gbm::fit(dm.X, dm.y, small_boost())), spec};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        interpret::ale_second_order(model, data, Predictor::EL, Predictor::ROLX, 10, policy_of(state)));
  }
}
BENCHMARK(BM_AleSecondOrder)->ArgsProduct({{765}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_GridSearch(benchmark::State& state) {
  const auto dm = design_matrix(sample(static_cast<std::size_t>(state.range(0))), FeatureSpec::main_effects());
  eval::GridSpec grid;
  grid.base = small_boost();
  grid.max_depth = {2, 3};
  grid.learning_rate = {0.05, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(eval::grid_search(dm.X, dm.y, grid, 0, policy_of(state)));
}
BENCHMARK(BM_GridSearch)->ArgsProduct({{765}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_MonteCarloCv(benchmark::State& state) {
  const auto& data = sample(static_cast<std::size_t>(state.range(0)));
  auto gbm = eval::ModelConfig::defaults(eval::ModelKind::Gbm);
  gbm.hp = small_boost();
  gbm.tune.reset();
  gbm.intervals = false;
  const auto step = eval::ModelConfig::defaults(eval::ModelKind::Stepwise);
  eval::McConfig mc;
  mc.n_splits = 8;
  for (auto _ : state) benchmark::DoNotOptimize(eval::monte_carlo_cv(data, {gbm, step}, mc, policy_of(state)));
}
BENCHMARK(BM_MonteCarloCv)->ArgsProduct({{765}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
