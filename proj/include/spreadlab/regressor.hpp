#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>

#include <Eigen/Dense>

#include "spreadlab/parallel.hpp"

namespace spreadlab {

/// A fitted point predictor over design rows.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> row) const = 0;
  virtual std::size_t n_features() const = 0;

  double predict(const Eigen::VectorXd& row) const { return predict(std::span(row.data(), row.size())); }
  Eigen::VectorXd predict(const Eigen::MatrixXd& X,
                          ExecutionPolicy policy = ExecutionPolicy::Serial) const;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

/// A fit procedure: (design, response, seed) -> fitted predictor. Trainers
/// must be pure functions of their arguments so leave-one-out refits can run
/// concurrently.
using Trainer = std::function<RegressorPtr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           std::uint64_t seed)>;

/// Predicts the training mean regardless of the row.
class ConstantRegressor final : public Regressor {
 public:
  ConstantRegressor(double value, std::size_t n_features) : value_(value), n_features_(n_features) {}
  double predict(std::span<const double>) const override { return value_; }
  using Regressor::predict;
  std::size_t n_features() const override { return n_features_; }
  double value() const { return value_; }

 private:
  double value_;
  std::size_t n_features_;
};

Trainer mean_trainer();

/// y0 + sum(y - y0) / n: exact for constant inputs.
double stable_mean(const Eigen::VectorXd& y);

}  // namespace spreadlab
