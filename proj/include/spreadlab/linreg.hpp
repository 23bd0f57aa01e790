#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spreadlab/interval.hpp"
#include "spreadlab/parallel.hpp"
#include "spreadlab/regressor.hpp"

namespace spreadlab {

enum class FitMethod { Ols, Lasso, Stepwise };
enum class StepDirection { Forward, Backward, Both };

std::string_view to_string(FitMethod m);
std::string_view to_string(StepDirection d);
StepDirection parse_step_direction(std::string_view text);

inline constexpr double kMaxConditionNumber = 1e10;

struct StepRecord {
  std::string action;  // "start", "add" or "drop"
  std::string column;
  double aic = 0.0;
  std::size_t n_slopes = 0;
};

/// Linear predictor y = intercept + sum coef_j * x[columns_j]. The model keeps
/// the width of the design it was fitted on so it can score full design rows
/// even when only a subset of columns was selected.
class LinearModel final : public Regressor {
 public:
  FitMethod method = FitMethod::Ols;
  std::size_t input_width = 0;
  std::vector<std::size_t> columns;
  std::vector<std::string> feature_names;

  bool has_intercept = true;
  double intercept = 0.0;
  double intercept_se = 0.0;
  double intercept_p = 1.0;
  Eigen::VectorXd coef;
  Eigen::VectorXd std_err;
  Eigen::VectorXd t_stat;
  Eigen::VectorXd p_value;

  std::size_t n = 0;
  std::size_t df_resid = 0;
  double rss = 0.0;
  double sigma2 = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double aic = 0.0;
  /// (X'X)^-1 over [intercept, selected columns]; empty for LASSO fits.
  Eigen::MatrixXd xtx_inv;

  double lambda = 0.0;
  std::vector<StepRecord> trace;

  double predict(std::span<const double> row) const override;
  using Regressor::predict;
  std::size_t n_features() const override { return input_width; }
  bool has_inference() const { return xtx_inv.size() > 0; }
};

struct OlsOptions {
  bool intercept = true;
  /// Column names; defaults to x0, x1, ...
  std::vector<std::string> names;
};

/// Gaussian profile AIC: n ln(RSS / n) + 2 (k + 1), k = slope count.
double gaussian_aic(double rss, std::size_t n, std::size_t n_slopes);

LinearModel ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const OlsOptions& options = {});

/// Fits OLS on a subset of the columns of X; the result still scores full rows.
LinearModel ols_fit_columns(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::span<const std::size_t> columns, const OlsOptions& options = {});

/// point +- t_{1-alpha/2, df} sigma sqrt(1 + x'(X'X)^-1 x).
PredictionInterval ols_predict_interval(const LinearModel& model, std::span<const double> row, double alpha);

struct LassoOptions {
  double tolerance = 1e-7;
  int max_sweeps = 10000;
  std::vector<std::string> names;
};

struct LassoFit {
  LinearModel model;
  int sweeps = 0;
  /// Objective (1/2n) RSS + lambda |beta|_1 on the standardized problem,
  /// before the first sweep and after every sweep.
  std::vector<double> objective;
};

/// Smallest lambda that zeroes every standardized slope: max_j |x_j'y| / n.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

LassoFit lasso_fit_traced(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          const LassoOptions& options = {});
LinearModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      const LassoOptions& options = {});

struct LassoCvResult {
  double best_lambda = 0.0;
  LinearModel model;
  std::vector<double> lambdas;
  std::vector<double> cv_mse;
};

/// k-fold CV over the grid; ties go to the larger lambda; refits on all rows.
LassoCvResult lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t k,
                       std::vector<double> grid, std::uint64_t seed = 0,
                       const LassoOptions& options = {},
                       ExecutionPolicy policy = ExecutionPolicy::Parallel);

/// Log-spaced grid from lambda_max down to ratio * lambda_max.
std::vector<double> lasso_default_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       std::size_t count = 30, double ratio = 1e-3);

LinearModel stepwise_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, StepDirection direction,
                            const std::vector<std::string>& names = {});

Trainer ols_trainer();
/// Re-runs stepwise selection on every training set it is given.
Trainer stepwise_trainer(StepDirection direction = StepDirection::Both);

}  // namespace spreadlab
