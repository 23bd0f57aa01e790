#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spreadlab/interval.hpp"
#include "spreadlab/parallel.hpp"
#include "spreadlab/regressor.hpp"

namespace spreadlab::conformal {

/// The ceil((n+1) * level)-th smallest value, or +inf when that rank exceeds
/// n. Throws EmptyInput.
double sample_quantile(std::span<const double> values, double level);

/// Absolute residuals |y_i - f(x_i)|.
std::vector<double> abs_residuals(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  ExecutionPolicy policy = ExecutionPolicy::Serial);

/// Half-width from in-sample residuals of a model trained on (X, y).
double naive_radius(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha);

PredictionInterval naive_interval(const Regressor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  std::span<const double> x_new, double alpha);

struct SplitConformal {
  RegressorPtr model;
  std::vector<std::size_t> fit_rows;
  std::vector<std::size_t> calibration_rows;
  /// Absolute residuals on the calibration rows, in calibration_rows order.
  std::vector<double> residuals;

  double radius(double alpha) const;
  PredictionInterval interval(std::span<const double> x_new, double alpha) const;
};

/// Fits on a seeded fraction `split_ratio` of the rows and calibrates on the
/// rest. Throws DegenerateSplit when either part is empty.
SplitConformal split_conformal_fit(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   double split_ratio, std::uint64_t seed);

PredictionInterval split_conformal(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   double split_ratio, std::span<const double> x_new, double alpha,
                                   std::uint64_t seed);

struct LooArtifacts {
  RegressorPtr full;
  /// loo[i] was trained without row i.
  std::vector<RegressorPtr> loo;
  /// |y_i - loo[i](x_i)|.
  std::vector<double> residuals;

  std::size_t n() const { return residuals.size(); }
};

/// n leave-one-out fits plus the full fit. The full model is trained with
/// `seed`; fit i with derive_seed(seed, i). Trainer errors are rethrown with
/// the failing index in the message.
LooArtifacts jackknife_artifacts(const Trainer& trainer, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 std::uint64_t seed = 0, ExecutionPolicy policy = ExecutionPolicy::Serial);

PredictionInterval jackknife_interval(const LooArtifacts& art, std::span<const double> x_new, double alpha);

PredictionInterval jackknife_plus_interval(const LooArtifacts& art, std::span<const double> x_new, double alpha);

/// jackknife_plus_interval over every row of X_new.
std::vector<PredictionInterval> jackknife_plus_intervals(const LooArtifacts& art, const Eigen::MatrixXd& X_new,
                                                         double alpha,
                                                         ExecutionPolicy policy = ExecutionPolicy::Serial);

/// Rows of X without row `skip`.
Eigen::MatrixXd drop_row(const Eigen::MatrixXd& X, Eigen::Index skip);
Eigen::VectorXd drop_row(const Eigen::VectorXd& y, Eigen::Index skip);

}  // namespace spreadlab::conformal
