#include "spreadlab/regressor.hpp"

namespace spreadlab {

Eigen::VectorXd Regressor::predict(const Eigen::MatrixXd& X, ExecutionPolicy policy) const {
  Eigen::VectorXd out(X.rows());
  const Eigen::MatrixXd rows = X.transpose();
  parallel_for(policy, X.rows(), [&](std::ptrdiff_t i) {
    out[i] = predict(std::span<const double>(rows.col(i).data(), static_cast<std::size_t>(X.cols())));
  });
  return out;
}

double stable_mean(const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0.0;
  const double y0 = y[0];
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) acc += y[i] - y0;
  return y0 + acc / static_cast<double>(y.size());
}

Trainer mean_trainer() {
  return [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) -> RegressorPtr {
    return std::make_shared<ConstantRegressor>(stable_mean(y), static_cast<std::size_t>(X.cols()));
  };
}

}  // namespace spreadlab
