#include "spreadlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "spreadlab/conformal.hpp"
#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string strip_kind(const Error& e) {
  const std::string what = e.what();
  const auto colon = what.find(": ");
  return colon == std::string::npos ? what : what.substr(colon + 2);
}

template <typename T>
std::vector<T> or_base(const std::vector<T>& values, T base) {
  return values.empty() ? std::vector<T>{base} : values;
}

std::string describe(const gbm::Hyperparams& hp) {
  return "eta=" + format_double(hp.learning_rate) + " depth=" + std::to_string(hp.max_depth) +
         " gamma=" + format_double(hp.gamma) + " mcw=" + format_double(hp.min_child_weight) +
         " subsample=" + format_double(hp.subsample) + " colsample=" + format_double(hp.colsample) +
         " lambda=" + format_double(hp.lambda) + " nrounds=" + std::to_string(hp.nrounds);
}

struct Outcome {
  Eigen::VectorXd point;
  std::vector<PredictionInterval> intervals;
};

}  // namespace

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "k >= 2 folds, got " + std::to_string(k));
  if (n < k) throw Error(ErrorKind::InsufficientData, std::to_string(n) + " rows for " + std::to_string(k) + " folds");
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % k;
  return fold;
}

GridSpec GridSpec::around_tuned() {
  GridSpec g;
  g.base = gbm::Hyperparams::tuned();
  g.learning_rate = {0.005, 0.01, 0.02};
  g.max_depth = {3, 4, 5};
  g.min_child_weight = {1.0, 5.0, 10.0};
  g.subsample = {0.8, 0.9, 1.0};
  g.lambda = {100.0, 400.0, 1000.0};
  return g;
}

GridSpec GridSpec::reduced(const gbm::Hyperparams& base) {
  GridSpec g;
  g.base = base;
  g.max_depth = {std::max(1, base.max_depth - 1), base.max_depth};
  if (g.max_depth[0] == g.max_depth[1]) g.max_depth.pop_back();
  return g;
}

std::vector<gbm::Hyperparams> GridSpec::points() const {
  std::vector<gbm::Hyperparams> out;
  for (double eta : or_base(learning_rate, base.learning_rate)) {
    for (int depth : or_base(max_depth, base.max_depth)) {
      for (double gam : or_base(gamma, base.gamma)) {
        for (double mcw : or_base(min_child_weight, base.min_child_weight)) {
          for (double sub : or_base(subsample, base.subsample)) {
            for (double col : or_base(colsample, base.colsample)) {
              for (double lam : or_base(lambda, base.lambda)) {
                for (int rounds : or_base(nrounds, base.nrounds)) {
                  gbm::Hyperparams hp = base;
                  hp.learning_rate = eta;
                  hp.max_depth = depth;
                  hp.gamma = gam;
                  hp.min_child_weight = mcw;
                  hp.subsample = sub;
                  hp.colsample = col;
                  hp.lambda = lam;
                  hp.nrounds = rounds;
                  out.push_back(std::move(hp));
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void GridSpec::validate(std::size_t n_features) const {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "grid search needs k >= 2 folds");
  for (const auto& hp : points()) hp.validate(n_features);
}

GridResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GridSpec& grid,
                       std::uint64_t seed, ExecutionPolicy policy) {
  grid.validate(static_cast<std::size_t>(X.cols()));
  const auto n = static_cast<std::size_t>(X.rows());
  const std::size_t k = grid.k;
  const auto fold = fold_assignment(n, k, derive_seed(seed, 0));
  const auto points = grid.points();

  std::vector<std::vector<Eigen::Index>> train(k);
  std::vector<std::vector<Eigen::Index>> test(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) (fold[i] == f ? test : train)[f].push_back(static_cast<Eigen::Index>(i));
  }

  std::vector<double> sse(points.size() * k, 0.0);
  parallel_for(policy, static_cast<std::ptrdiff_t>(sse.size()), [&](std::ptrdiff_t task) {
    const auto t = static_cast<std::size_t>(task);
    const std::size_t g = t / k;
    const std::size_t f = t % k;
    gbm::Hyperparams hp = points[g];
    hp.seed = derive_seed(seed, 1 + f);
    try {
      const auto model = gbm::fit(X(train[f], Eigen::all), y(train[f]), hp);
      const Eigen::MatrixXd Xte = X(test[f], Eigen::all);
      sse[t] = (y(test[f]) - model.predict(Xte)).squaredNorm();
    } catch (const Error& e) {
      throw Error(e.kind(), "grid point " + std::to_string(g) + " (" + describe(points[g]) + "): " + strip_kind(e));
    }
  });

  GridResult result;
  for (std::size_t g = 0; g < points.size(); ++g) {
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) total += sse[g * k + f];
    result.table.push_back({points[g], total / static_cast<double>(n)});
    if (result.table[g].cv_mse < result.table[result.best_index].cv_mse) result.best_index = g;
  }
  result.best = result.table[result.best_index].hp;
  result.best_mse = result.table[result.best_index].cv_mse;
  return result;
}

GridResult grid_search(const Dataset& data, const FeatureSpec& spec, const GridSpec& grid, std::uint64_t seed,
                       ExecutionPolicy policy) {
  spec.validate();
  const DesignMatrix dm = design_matrix(data, spec);
  return grid_search(dm.X, dm.y, grid, seed, policy);
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gbm:
      return "gbm";
    case ModelKind::Stepwise:
      return "stepwise";
    case ModelKind::Lasso:
      return "lasso";
    case ModelKind::Ols:
      return "ols";
    case ModelKind::Mean:
      return "mean";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::Gbm, ModelKind::Stepwise, ModelKind::Lasso, ModelKind::Ols, ModelKind::Mean}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown model '" + std::string(text) + "'");
}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.spec = kind == ModelKind::Gbm || kind == ModelKind::Mean ? FeatureSpec::main_effects() : FeatureSpec::full_linear();
  c.hp = gbm::Hyperparams::tuned();
  if (kind == ModelKind::Gbm) c.tune = GridSpec::reduced(c.hp);
  c.intervals = kind != ModelKind::Lasso && kind != ModelKind::Mean;
  return c;
}

Split make_split(std::size_t n, double train_frac, std::uint64_t seed, std::size_t index) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "train_frac must lie in (0, 1), got " + format_double(train_frac));
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw Error(ErrorKind::DegenerateSplit, "train_frac " + format_double(train_frac) + " of " + std::to_string(n) +
                                                " rows leaves an empty part");
  }
  Rng rng(derive_seed(seed, index));
  const auto perm = rng.permutation(n);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

const ModelSummary& CVReport::summary(std::string_view model) const {
  for (const auto& m : models) {
    if (m.model == model) return m;
  }
  throw Error(ErrorKind::InvalidConfig, "report has no model '" + std::string(model) + "'");
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace {

Outcome run_model(const ModelConfig& cfg, const DesignMatrix& tr, const DesignMatrix& te, double alpha,
                  std::uint64_t split_seed, const std::vector<std::size_t>* frozen) {
  Outcome out;
  const auto rows_of = [](const Eigen::MatrixXd& X, Eigen::Index i) { return Eigen::VectorXd(X.row(i).transpose()); };
  const auto linear = [&](const LinearModel& m) {
    out.point = m.predict(te.X);
    if (!cfg.intervals) return;
    for (Eigen::Index i = 0; i < te.X.rows(); ++i) {
      const Eigen::VectorXd row = rows_of(te.X, i);
      out.intervals.push_back(ols_predict_interval(m, std::span(row.data(), row.size()), alpha));
    }
  };

  switch (cfg.kind) {
    case ModelKind::Gbm: {
      gbm::Hyperparams hp = cfg.hp;
      if (cfg.tune) {
        GridSpec grid = *cfg.tune;
        hp = grid_search(tr.X, tr.y, grid, derive_seed(split_seed, 1)).best;
      }
      if (cfg.intervals) {
        const auto art = conformal::jackknife_artifacts(gbm::trainer(hp), tr.X, tr.y, derive_seed(split_seed, 2));
        out.point = art.full->predict(te.X);
        out.intervals = conformal::jackknife_plus_intervals(art, te.X, alpha);
      } else {
        hp.seed = derive_seed(split_seed, 2);
        out.point = gbm::fit(tr.X, tr.y, hp).predict(te.X);
      }
      break;
    }
    case ModelKind::Stepwise:
      if (frozen != nullptr) {
        linear(ols_fit_columns(tr.X, tr.y, *frozen, {true, tr.columns}));
      } else {
        linear(stepwise_select(tr.X, tr.y, cfg.direction, tr.columns));
      }
      break;
    case ModelKind::Ols:
      linear(ols_fit(tr.X, tr.y, {true, tr.columns}));
      break;
    case ModelKind::Lasso: {
      const auto grid = lasso_default_grid(tr.X, tr.y);
      const auto cv = lasso_cv(tr.X, tr.y, cfg.lasso_folds, grid, derive_seed(split_seed, 3), {},
                               ExecutionPolicy::Serial);
      out.point = cv.model.predict(te.X);
      break;
    }
    case ModelKind::Mean:
      out.point = Eigen::VectorXd::Constant(te.X.rows(), stable_mean(tr.y));
      break;
  }
  return out;
}

}  // namespace

CVReport monte_carlo_cv(const Dataset& data, const std::vector<ModelConfig>& models, const McConfig& config,
                        ExecutionPolicy policy) {
  if (config.n_splits < 1) throw Error(ErrorKind::InvalidConfig, "n_splits >= 1");
  if (models.empty()) throw Error(ErrorKind::InvalidConfig, "no models to evaluate");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
  const std::size_t n = data.n();
  make_split(n, config.train_frac, config.seed, 0);

  std::vector<std::optional<std::vector<std::size_t>>> frozen(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    models[m].spec.validate();
    design_matrix(data, models[m].spec);
    if (models[m].kind == ModelKind::Gbm) models[m].hp.validate(models[m].spec.width());
    if (models[m].kind == ModelKind::Stepwise && models[m].freeze_formula) {
      const DesignMatrix dm = design_matrix(data, models[m].spec);
      frozen[m] = stepwise_select(dm.X, dm.y, models[m].direction, dm.columns).columns;
    }
  }

  CVReport report;
  report.config = config;
  report.rows.resize(config.n_splits * models.size());
  parallel_for(policy, static_cast<std::ptrdiff_t>(config.n_splits), [&](std::ptrdiff_t si) {
    const auto s = static_cast<std::size_t>(si);
    const std::uint64_t split_seed = derive_seed(config.seed, s);
    const Split split = make_split(n, config.train_frac, config.seed, s);
    const Dataset train = subset(data, split.train);
    const Dataset test = subset(data, split.test);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const ModelConfig& cfg = models[m];
      SplitRow& row = report.rows[s * models.size() + m];
      row.split = s;
      row.model = cfg.name();
      row.n_train = split.train.size();
      row.n_test = split.test.size();
      try {
        const DesignMatrix tr = design_matrix(train, cfg.spec);
        const DesignMatrix te = design_matrix(test, cfg.spec);
        const Outcome o = run_model(cfg, tr, te, config.alpha, derive_seed(split_seed, 100 + m),
                                    frozen[m] ? &*frozen[m] : nullptr);
        row.mse = (te.y - o.point).squaredNorm() / static_cast<double>(te.y.size());
        if (o.intervals.empty()) {
          row.coverage = kNaN;
          row.length_bps = kNaN;
        } else {
          const double to_bps = cfg.spec.response_scale == ResponseScale::Decimal ? kBpsPerUnit : 1.0;
          std::size_t inside = 0;
          double width = 0.0;
          for (std::size_t i = 0; i < o.intervals.size(); ++i) {
            if (o.intervals[i].contains(te.y[static_cast<Eigen::Index>(i)])) ++inside;
            width += o.intervals[i].width();
          }
          row.coverage = static_cast<double>(inside) / static_cast<double>(o.intervals.size());
          row.length_bps = width / static_cast<double>(o.intervals.size()) * to_bps;
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        row.mse = kNaN;
        row.coverage = kNaN;
        row.length_bps = kNaN;
      }
    }
  });

  const double bound = 1.0 - 2.0 * config.alpha;
  for (std::size_t m = 0; m < models.size(); ++m) {
    ModelSummary sum;
    sum.model = models[m].name();
    std::vector<double> mse, cov, len;
    for (std::size_t s = 0; s < config.n_splits; ++s) {
      const SplitRow& row = report.rows[s * models.size() + m];
      if (!row.ok) {
        ++sum.failed;
        continue;
      }
      ++sum.completed;
      mse.push_back(row.mse);
      if (!std::isnan(row.coverage)) {
        cov.push_back(row.coverage);
        len.push_back(row.length_bps);
        if (row.coverage < bound) ++sum.below_bound;
      }
    }
    std::tie(sum.mean_mse, sum.sd_mse) = mean_sd(mse);
    std::tie(sum.mean_coverage, sum.sd_coverage) = mean_sd(cov);
    std::tie(sum.mean_length_bps, sum.sd_length_bps) = mean_sd(len);
    if (sum.failed > 0) report.complete = false;
    report.models.push_back(std::move(sum));
  }
  return report;
}

void write_rows_csv(const CVReport& report, std::ostream& out) {
  out << "split,model,ok,n_train,n_test,mse,coverage,length_bps,error\n";
  for (const auto& r : report.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    const auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    out << r.split << ',' << r.model << ',' << (r.ok ? 1 : 0) << ',' << r.n_train << ',' << r.n_test << ','
        << num(r.mse) << ',' << num(r.coverage) << ',' << num(r.length_bps) << ',' << err << '\n';
  }
}

}  // namespace spreadlab::eval
