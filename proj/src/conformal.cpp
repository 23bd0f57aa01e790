#include "spreadlab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spreadlab/data.hpp"
#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab::conformal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1), got " + format_double(alpha));
  }
}

PredictionInterval symmetric(double point, double radius, double alpha, IntervalMethod method) {
  return {point, point - radius, point + radius, alpha, method};
}

std::span<const double> row_span(const Eigen::MatrixXd& X, Eigen::Index i, std::vector<double>& buffer) {
  buffer.resize(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) buffer[static_cast<std::size_t>(j)] = X(i, j);
  return buffer;
}

}  // namespace

double sample_quantile(std::span<const double> values, double level) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "sample_quantile of an empty set");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "quantile level must lie in (0, 1), got " + format_double(level));
  }
  const auto n = values.size();
  // (n+1) * level is often an integer in exact arithmetic but lands a few ulps
  // above it in floating point, so tiny excesses are snapped down.
  const double t = static_cast<double>(n + 1) * level;
  const double k = std::ceil(t - 1e-9 * std::max(1.0, t));
  if (k > static_cast<double>(n)) return kInf;
  const auto rank = static_cast<std::size_t>(std::max(1.0, k));
  std::vector<double> copy(values.begin(), values.end());
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(rank - 1), copy.end());
  return copy[rank - 1];
}

std::vector<double> abs_residuals(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  ExecutionPolicy policy) {
  const Eigen::VectorXd pred = model.predict(X, policy);
  std::vector<double> r(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) r[static_cast<std::size_t>(i)] = std::abs(y[i] - pred[i]);
  return r;
}

double naive_radius(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  check_alpha(alpha);
  return sample_quantile(abs_residuals(model, X, y), 1.0 - alpha);
}

PredictionInterval naive_interval(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  std::span<const double> x_new, double alpha) {
  return symmetric(model.predict(x_new), naive_radius(model, X, y, alpha), alpha, IntervalMethod::Naive);
}

double SplitConformal::radius(double alpha) const {
  check_alpha(alpha);
  return sample_quantile(residuals, 1.0 - alpha);
}

PredictionInterval SplitConformal::interval(std::span<const double> x_new, double alpha) const {
  return symmetric(model->predict(x_new), radius(alpha), alpha, IntervalMethod::Split);
}

SplitConformal split_conformal_fit(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   double split_ratio, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "design and response lengths differ");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw Error(ErrorKind::DegenerateSplit, "split_ratio must lie in (0, 1), got " + format_double(split_ratio));
  }
  const auto n_fit = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(n)));
  if (n_fit == 0 || n_fit >= n) {
    throw Error(ErrorKind::DegenerateSplit, "split_ratio " + format_double(split_ratio) + " of " +
                                                std::to_string(n) + " rows leaves an empty part");
  }

  Rng rng(derive_seed(seed, 0x5b117));
  std::vector<std::size_t> perm = rng.permutation(n);
  SplitConformal out;
  out.fit_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_fit));
  out.calibration_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_fit), perm.end());
  std::sort(out.fit_rows.begin(), out.fit_rows.end());
  std::sort(out.calibration_rows.begin(), out.calibration_rows.end());

  const auto idx = [](const std::vector<std::size_t>& v) {
    return std::vector<Eigen::Index>(v.begin(), v.end());
  };
  const auto fit_idx = idx(out.fit_rows);
  const auto cal_idx = idx(out.calibration_rows);
  const Eigen::MatrixXd X1 = X(fit_idx, Eigen::all);
  const Eigen::VectorXd y1 = y(fit_idx);
  out.model = trainer(X1, y1, derive_seed(seed, 1));
  out.residuals = abs_residuals(*out.model, X(cal_idx, Eigen::all), y(cal_idx));
  return out;
}

PredictionInterval split_conformal(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   double split_ratio, std::span<const double> x_new, double alpha,
                                   std::uint64_t seed) {
  return split_conformal_fit(trainer, X, y, split_ratio, seed).interval(x_new, alpha);
}

Eigen::MatrixXd drop_row(const Eigen::MatrixXd& X, Eigen::Index skip) {
  Eigen::MatrixXd out(X.rows() - 1, X.cols());
  out.topRows(skip) = X.topRows(skip);
  out.bottomRows(X.rows() - skip - 1) = X.bottomRows(X.rows() - skip - 1);
  return out;
}

Eigen::VectorXd drop_row(const Eigen::VectorXd& y, Eigen::Index skip) {
  Eigen::VectorXd out(y.size() - 1);
  out.head(skip) = y.head(skip);
  out.tail(y.size() - skip - 1) = y.tail(y.size() - skip - 1);
  return out;
}

LooArtifacts jackknife_artifacts(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 std::uint64_t seed, ExecutionPolicy policy) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "design and response lengths differ");
  }
  if (n < 2) throw Error(ErrorKind::InsufficientData, "jackknife needs n >= 2, got " + std::to_string(n));

  LooArtifacts art;
  art.full = trainer(X, y, seed);
  art.loo.resize(n);
  art.residuals.resize(n);
  parallel_for(policy, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      art.loo[k] = trainer(drop_row(X, i), drop_row(y, i), derive_seed(seed, k));
    } catch (const Error& e) {
      const std::string what = e.what();
      const auto colon = what.find(": ");
      throw Error(e.kind(), "leave-one-out fit " + std::to_string(k) + ": " +
                                (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
    std::vector<double> buffer;
    art.residuals[k] = std::abs(y[i] - art.loo[k]->predict(row_span(X, i, buffer)));
  });
  return art;
}

PredictionInterval jackknife_interval(const LooArtifacts& art, std::span<const double> x_new, double alpha) {
  check_alpha(alpha);
  const double radius = sample_quantile(art.residuals, 1.0 - alpha);
  return symmetric(art.full->predict(x_new), radius, alpha, IntervalMethod::Jackknife);
}

PredictionInterval jackknife_plus_interval(const LooArtifacts& art, std::span<const double> x_new, double alpha) {
  check_alpha(alpha);
  const auto n = art.n();
  std::vector<double> plus(n);
  std::vector<double> neg_minus(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = art.loo[i]->predict(x_new);
    plus[i] = mu + art.residuals[i];
    neg_minus[i] = -(mu - art.residuals[i]);
  }
  PredictionInterval out;
  out.point = art.full->predict(x_new);
  out.lower = -sample_quantile(neg_minus, 1.0 - alpha);
  out.upper = sample_quantile(plus, 1.0 - alpha);
  out.alpha = alpha;
  out.method = IntervalMethod::JackknifePlus;
  return out;
}

std::vector<PredictionInterval> jackknife_plus_intervals(const LooArtifacts& art, const Eigen::MatrixXd& X_new,
                                                         double alpha, ExecutionPolicy policy) {
  std::vector<PredictionInterval> out(static_cast<std::size_t>(X_new.rows()));
  parallel_for(policy, X_new.rows(), [&](std::ptrdiff_t i) {
    std::vector<double> buffer;
    out[static_cast<std::size_t>(i)] = jackknife_plus_interval(art, row_span(X_new, i, buffer), alpha);
  });
  return out;
}

}  // namespace spreadlab::conformal
