#include "spreadlab/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab {

namespace {

std::vector<std::string> default_names(std::size_t p, const std::vector<std::string>& given) {
  if (!given.empty()) {
    if (given.size() != p) {
      throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(p) + " column names, got " +
                                                    std::to_string(given.size()));
    }
    return given;
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

double two_sided_p(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// Condition number of A'A after scaling every column of A to unit norm,
/// computed from the eigenvalues of the scaled Gram matrix.
double scaled_gram_condition(const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd d = gram.diagonal().cwiseSqrt();
  if ((d.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd c = d.asDiagonal().inverse() * gram * d.asDiagonal().inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

LinearModel fit_core(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::span<const std::size_t> columns, const OlsOptions& options) {
  const auto n = static_cast<std::size_t>(X.rows());
  const std::size_t p = columns.size();
  const std::size_t k = p + (options.intercept ? 1 : 0);
  if (static_cast<std::size_t>(y.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "X has " + std::to_string(n) + " rows but y has " +
                                                  std::to_string(y.size()));
  }
  if (k == 0) throw Error(ErrorKind::InvalidConfig, "model has no terms");
  if (n <= k) {
    throw Error(ErrorKind::InsufficientData,
                "n = " + std::to_string(n) + " observations for " + std::to_string(k) + " parameters");
  }
  const auto names = default_names(static_cast<std::size_t>(X.cols()), options.names);

  const auto ni = static_cast<Eigen::Index>(n);
  const auto ki = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd A(ni, ki);
  std::vector<std::string> labels;
  Eigen::Index c = 0;
  if (options.intercept) {
    A.col(c++).setOnes();
    labels.emplace_back("(Intercept)");
  }
  for (auto j : columns) {
    A.col(c++) = X.col(static_cast<Eigen::Index>(j));
    labels.push_back(names[j]);
  }

  // Equilibrate, then SVD; the condition number of the scaled normal
  // equations is (s_max / s_min)^2.
  const Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < ki; ++j) {
    if (scale[j] == 0.0) {
      throw Error(ErrorKind::RankDeficient, "column " + labels[static_cast<std::size_t>(j)] + " is all zeros");
    }
  }
  const Eigen::MatrixXd As = A * scale.asDiagonal().inverse();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cond = s[ki - 1] > 0.0 ? (s[0] / s[ki - 1]) * (s[0] / s[ki - 1])
                                      : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber)) {
    const Eigen::VectorXd v = svd.matrixV().col(ki - 1).cwiseAbs();
    std::ostringstream msg;
    msg << "condition number " << cond << " exceeds " << kMaxConditionNumber << "; involved columns:";
    for (Eigen::Index j = 0; j < ki; ++j) {
      if (v[j] > 0.1 * v.maxCoeff()) msg << ' ' << labels[static_cast<std::size_t>(j)];
    }
    throw Error(ErrorKind::RankDeficient, msg.str());
  }

  const Eigen::VectorXd inv_s = s.cwiseInverse();
  const Eigen::VectorXd beta_s = svd.matrixV() * (inv_s.asDiagonal() * (svd.matrixU().transpose() * y));
  const Eigen::VectorXd beta = beta_s.cwiseQuotient(scale);
  const Eigen::MatrixXd vs = svd.matrixV() * inv_s.cwiseAbs2().asDiagonal() * svd.matrixV().transpose();
  const Eigen::MatrixXd xtx_inv = scale.cwiseInverse().asDiagonal() * vs * scale.cwiseInverse().asDiagonal();

  const Eigen::VectorXd resid = y - A * beta;
  const double rss = resid.squaredNorm();
  const std::size_t df = n - k;
  const double sigma2 = rss / static_cast<double>(df);

  LinearModel m;
  m.method = FitMethod::Ols;
  m.input_width = static_cast<std::size_t>(X.cols());
  m.columns.assign(columns.begin(), columns.end());
  for (auto j : columns) m.feature_names.push_back(names[j]);
  m.has_intercept = options.intercept;
  m.n = n;
  m.df_resid = df;
  m.rss = rss;
  m.sigma2 = sigma2;
  m.xtx_inv = xtx_inv;

  const Eigen::VectorXd se = (sigma2 * xtx_inv.diagonal().array()).sqrt();
  const Eigen::Index off = options.intercept ? 1 : 0;
  m.coef = beta.tail(static_cast<Eigen::Index>(p));
  m.std_err = se.tail(static_cast<Eigen::Index>(p));
  m.t_stat.resize(static_cast<Eigen::Index>(p));
  m.p_value.resize(static_cast<Eigen::Index>(p));
  auto t_of = [](double b, double e) {
    if (e > 0.0) return b / e;
    return b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
  };
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
    m.t_stat[j] = t_of(beta[j + off], se[j + off]);
    m.p_value[j] = two_sided_p(m.t_stat[j], static_cast<double>(df));
  }
  if (options.intercept) {
    m.intercept = beta[0];
    m.intercept_se = se[0];
    m.intercept_p = two_sided_p(t_of(beta[0], se[0]), static_cast<double>(df));
  }

  double tss = 0.0;
  if (options.intercept) {
    const double ybar = stable_mean(y);
    tss = (y.array() - ybar).square().sum();
  } else {
    tss = y.squaredNorm();
  }
  if (tss > 0.0) {
    m.r2 = 1.0 - rss / tss;
  } else {
    m.r2 = rss == 0.0 ? 1.0 : 0.0;
  }
  const double dn = static_cast<double>(n);
  m.adj_r2 = 1.0 - (1.0 - m.r2) * (options.intercept ? dn - 1.0 : dn) / static_cast<double>(df);
  m.aic = dn * std::log(rss / dn) + 2.0 * static_cast<double>(k);
  return m;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

struct Standardized {
  Eigen::MatrixXd Z;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd yc;
  double ybar = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Standardized s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.Z = X.rowwise() - s.mean.transpose();
  s.sd = (s.Z.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (s.sd[j] > 0.0) {
      s.Z.col(j) /= s.sd[j];
    } else {
      s.Z.col(j).setZero();
    }
  }
  s.ybar = stable_mean(y);
  s.yc = y.array() - s.ybar;
  return s;
}

double lasso_objective(const Eigen::VectorXd& r, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(r.size());
  return 0.5 * r.squaredNorm() / n + lambda * beta.lpNorm<1>();
}

}  // namespace

std::string_view to_string(FitMethod m) {
  switch (m) {
    case FitMethod::Ols: return "ols";
    case FitMethod::Lasso: return "lasso";
    case FitMethod::Stepwise: return "stepwise";
  }
  return "ols";
}

std::string_view to_string(StepDirection d) {
  switch (d) {
    case StepDirection::Forward: return "forward";
    case StepDirection::Backward: return "backward";
    case StepDirection::Both: return "both";
  }
  return "both";
}

StepDirection parse_step_direction(std::string_view text) {
  if (text == "forward") return StepDirection::Forward;
  if (text == "backward") return StepDirection::Backward;
  if (text == "both") return StepDirection::Both;
  throw Error(ErrorKind::InvalidConfig, "unknown stepwise direction '" + std::string(text) + "'");
}

std::string_view to_string(IntervalMethod method) {
  switch (method) {
    case IntervalMethod::Naive: return "naive";
    case IntervalMethod::Split: return "split";
    case IntervalMethod::Jackknife: return "jackknife";
    case IntervalMethod::JackknifePlus: return "jackknife_plus";
    case IntervalMethod::OlsNormal: return "ols_normal";
  }
  return "naive";
}

double LinearModel::predict(std::span<const double> row) const {
  if (row.size() != input_width) {
    throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(row.size()) +
                                                  " values, model expects " + std::to_string(input_width));
  }
  double v = intercept;
  for (std::size_t j = 0; j < columns.size(); ++j) v += coef[static_cast<Eigen::Index>(j)] * row[columns[j]];
  return v;
}

double gaussian_aic(double rss, std::size_t n, std::size_t n_slopes) {
  const double dn = static_cast<double>(n);
  return dn * std::log(rss / dn) + 2.0 * (static_cast<double>(n_slopes) + 1.0);
}

LinearModel ols_fit_columns(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::span<const std::size_t> columns, const OlsOptions& options) {
  for (auto j : columns) {
    if (j >= static_cast<std::size_t>(X.cols())) {
      throw Error(ErrorKind::DimensionMismatch, "column index " + std::to_string(j) + " out of range");
    }
  }
  return fit_core(X, y, columns, options);
}

LinearModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OlsOptions& options) {
  std::vector<std::size_t> all(static_cast<std::size_t>(X.cols()));
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_core(X, y, all, options);
}

PredictionInterval ols_predict_interval(const LinearModel& model, std::span<const double> row, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
  if (row.size() != model.input_width) {
    throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(row.size()) +
                                                  " values, model expects " + std::to_string(model.input_width));
  }
  if (!model.has_inference()) {
    throw Error(ErrorKind::InvalidConfig, "model carries no inference statistics (LASSO fits do not)");
  }
  const auto k = model.xtx_inv.rows();
  Eigen::VectorXd xt(k);
  Eigen::Index c = 0;
  if (model.has_intercept) xt[c++] = 1.0;
  for (auto j : model.columns) xt[c++] = row[j];
  const double leverage = xt.dot(model.xtx_inv * xt);
  boost::math::students_t dist(static_cast<double>(model.df_resid));
  const double t = boost::math::quantile(dist, 1.0 - alpha / 2.0);
  const double half = t * std::sqrt(model.sigma2) * std::sqrt(1.0 + leverage);
  PredictionInterval pi;
  pi.point = model.predict(row);
  pi.lower = pi.point - half;
  pi.upper = pi.point + half;
  pi.alpha = alpha;
  pi.method = IntervalMethod::OlsNormal;
  return pi;
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto s = standardize(X, y);
  const double n = static_cast<double>(X.rows());
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) lmax = std::max(lmax, std::abs(s.Z.col(j).dot(s.yc) / n));
  return lmax;
}

LassoFit lasso_fit_traced(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          const LassoOptions& options) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda >= 0");
  if (y.size() != X.rows()) throw Error(ErrorKind::DimensionMismatch, "X and y row counts differ");
  if (X.rows() < 2) throw Error(ErrorKind::InsufficientData, "LASSO needs at least two rows");
  const auto names = default_names(static_cast<std::size_t>(X.cols()), options.names);
  const auto s = standardize(X, y);
  const auto p = X.cols();
  const double n = static_cast<double>(X.rows());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = s.yc;
  Eigen::VectorXd curvature(p);
  for (Eigen::Index j = 0; j < p; ++j) curvature[j] = s.Z.col(j).squaredNorm() / n;
  LassoFit fit;
  fit.objective.push_back(lasso_objective(r, beta, lambda));
  double delta = std::numeric_limits<double>::infinity();
  while (delta >= options.tolerance) {
    if (fit.sweeps >= options.max_sweeps) {
      std::ostringstream msg;
      msg << "max sweeps " << options.max_sweeps << " reached, last delta " << delta;
      throw Error(ErrorKind::NonConvergence, msg.str());
    }
    delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.sd[j] == 0.0) continue;
      const double rho = s.Z.col(j).dot(r) / n + curvature[j] * beta[j];
      const double updated = soft_threshold(rho, lambda) / curvature[j];
      const double change = updated - beta[j];
      if (change != 0.0) {
        r -= change * s.Z.col(j);
        beta[j] = updated;
      }
      delta = std::max(delta, std::abs(change));
    }
    ++fit.sweeps;
    // Incremental updates drift; refresh before scoring the sweep.
    r = s.yc - s.Z * beta;
    fit.objective.push_back(lasso_objective(r, beta, lambda));
  }

  LinearModel& m = fit.model;
  m.method = FitMethod::Lasso;
  m.lambda = lambda;
  m.input_width = static_cast<std::size_t>(p);
  m.n = static_cast<std::size_t>(X.rows());
  std::vector<double> kept;
  double intercept = s.ybar;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta[j] == 0.0) continue;
    const double b = beta[j] / s.sd[j];
    m.columns.push_back(static_cast<std::size_t>(j));
    m.feature_names.push_back(names[static_cast<std::size_t>(j)]);
    kept.push_back(b);
    intercept -= b * s.mean[j];
  }
  m.intercept = intercept;
  m.coef = Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  m.intercept_se = nan;
  m.intercept_p = nan;
  m.std_err = Eigen::VectorXd::Constant(m.coef.size(), nan);
  m.t_stat = m.std_err;
  m.p_value = m.std_err;

  const Eigen::VectorXd fitted = m.predict(X);
  m.rss = (y - fitted).squaredNorm();
  const std::size_t k = m.columns.size() + 1;
  m.df_resid = m.n > k ? m.n - k : 0;
  m.sigma2 = m.df_resid > 0 ? m.rss / static_cast<double>(m.df_resid) : nan;
  const double tss = (y.array() - s.ybar).square().sum();
  m.r2 = tss > 0.0 ? 1.0 - m.rss / tss : (m.rss == 0.0 ? 1.0 : 0.0);
  m.adj_r2 = m.df_resid > 0 ? 1.0 - (1.0 - m.r2) * (n - 1.0) / static_cast<double>(m.df_resid) : nan;
  m.aic = gaussian_aic(m.rss, m.n, m.columns.size());
  return fit;
}

LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      const LassoOptions& options) {
  return lasso_fit_traced(X, y, lambda, options).model;
}

std::vector<double> lasso_default_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t count,
                                       double ratio) {
  const double lmax = lasso_lambda_max(X, y);
  std::vector<double> grid;
  if (count == 0 || lmax == 0.0) return {0.0};
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    grid.push_back(lmax * std::pow(ratio, frac));
  }
  return grid;
}

LassoCvResult lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k,
                       std::vector<double> grid, std::uint64_t seed, const LassoOptions& options,
                       ExecutionPolicy policy) {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "k >= 2 folds");
  if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "lambda grid is empty");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2 * k) throw Error(ErrorKind::InsufficientData, "too few rows for " + std::to_string(k) + " folds");
  std::sort(grid.begin(), grid.end(), std::greater<>());

  Rng rng(derive_seed(seed, 0x1a550));
  const auto perm = rng.permutation(n);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % k;

  // sse[f][l]: squared error of fold f's held-out rows under lambda l.
  std::vector<std::vector<double>> sse(k, std::vector<double>(grid.size(), 0.0));
  parallel_for(policy, static_cast<std::ptrdiff_t>(k), [&](std::ptrdiff_t f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) {
      (fold[i] == static_cast<std::size_t>(f) ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Eigen::MatrixXd Xtr = X(train, Eigen::all);
    const Eigen::VectorXd ytr = y(train);
    const Eigen::MatrixXd Xte = X(test, Eigen::all);
    const Eigen::VectorXd yte = y(test);
    for (std::size_t l = 0; l < grid.size(); ++l) {
      const auto model = lasso_fit(Xtr, ytr, grid[l], options);
      sse[static_cast<std::size_t>(f)][l] = (yte - model.predict(Xte)).squaredNorm();
    }
  });

  LassoCvResult result;
  result.lambdas = grid;
  result.cv_mse.assign(grid.size(), 0.0);
  std::size_t best = 0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) total += sse[f][l];
    result.cv_mse[l] = total / static_cast<double>(n);
    if (result.cv_mse[l] < result.cv_mse[best]) best = l;
  }
  result.best_lambda = grid[best];
  result.model = lasso_fit(X, y, grid[best], options);
  return result;
}

namespace {

/// Gram-matrix based evaluator for candidate subsets during stepwise search.
class SubsetScorer {
 public:
  SubsetScorer(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : X_(X), y_(y) {
    const auto n = X.rows();
    const auto p = X.cols();
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = X;
    gram_ = A.transpose() * A;
    aty_ = A.transpose() * y;
  }

  /// AIC of the intercept + subset model; +inf when the subset is
  /// numerically rank deficient.
  double aic(const std::vector<bool>& in) const {
    std::vector<Eigen::Index> idx{0};
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (in[j]) idx.push_back(static_cast<Eigen::Index>(j + 1));
    }
    const Eigen::MatrixXd g = gram_(idx, idx);
    if (!(scaled_gram_condition(g) <= kMaxConditionNumber)) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd b = g.ldlt().solve(aty_(idx));
    Eigen::VectorXd r = y_.array() - b[0];
    for (std::size_t t = 1; t < idx.size(); ++t) r -= b[static_cast<Eigen::Index>(t)] * X_.col(idx[t] - 1);
    return gaussian_aic(r.squaredNorm(), static_cast<std::size_t>(X_.rows()), idx.size() - 1);
  }

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd aty_;
};

struct SearchResult {
  std::vector<bool> in;
  double aic = 0.0;
  std::vector<StepRecord> trace;
};

SearchResult greedy_search(const SubsetScorer& scorer, std::vector<bool> in, bool allow_add, bool allow_drop,
                           const std::vector<std::string>& names) {
  SearchResult res;
  double current = scorer.aic(in);
  auto count = [&] { return static_cast<std::size_t>(std::count(in.begin(), in.end(), true)); };
  res.trace.push_back({"start", "", current, count()});
  while (true) {
    std::size_t best_j = in.size();
    double best = current;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (in[j] ? !allow_drop : !allow_add) continue;
      in[j] = !in[j];
      const double a = scorer.aic(in);
      in[j] = !in[j];
      if (a < best) {
        best = a;
        best_j = j;
      }
    }
    if (best_j == in.size()) break;
    in[best_j] = !in[best_j];
    current = best;
    res.trace.push_back({in[best_j] ? "add" : "drop", names[best_j], current, count()});
  }
  res.in = std::move(in);
  res.aic = current;
  return res;
}

}  // namespace

LinearModel stepwise_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, StepDirection direction,
                            const std::vector<std::string>& names_in) {
  const auto p = static_cast<std::size_t>(X.cols());
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) throw Error(ErrorKind::DimensionMismatch, "X and y row counts differ");
  if (n <= p + 1) {
    throw Error(ErrorKind::InsufficientData,
                "n = " + std::to_string(n) + " observations for " + std::to_string(p + 1) + " parameters");
  }
  const auto names = default_names(p, names_in);
  const SubsetScorer scorer(X, y);
  const std::vector<bool> none(p, false);
  const std::vector<bool> all(p, true);

  SearchResult chosen;
  switch (direction) {
    case StepDirection::Forward:
      chosen = greedy_search(scorer, none, true, false, names);
      break;
    case StepDirection::Backward:
      if (!std::isfinite(scorer.aic(all))) ols_fit(X, y, {true, names});  // throws RankDeficient
      chosen = greedy_search(scorer, all, false, true, names);
      break;
    case StepDirection::Both: {
      chosen = greedy_search(scorer, none, true, true, names);
      if (std::isfinite(scorer.aic(all))) {
        auto from_full = greedy_search(scorer, all, true, true, names);
        if (from_full.aic < chosen.aic) chosen = std::move(from_full);
      }
      break;
    }
  }

  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < p; ++j) {
    if (chosen.in[j]) cols.push_back(j);
  }
  auto model = ols_fit_columns(X, y, cols, {true, names});
  model.method = FitMethod::Stepwise;
  model.trace = std::move(chosen.trace);
  return model;
}

Trainer ols_trainer() {
  return [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) -> RegressorPtr {
    return std::make_shared<LinearModel>(ols_fit(X, y));
  };
}

Trainer stepwise_trainer(StepDirection direction) {
  return [direction](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) -> RegressorPtr {
    return std::make_shared<LinearModel>(stepwise_select(X, y, direction));
  };
}

}  // namespace spreadlab
