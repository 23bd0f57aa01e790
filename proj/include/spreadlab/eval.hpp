#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spreadlab/data.hpp"
#include "spreadlab/gbm.hpp"
#include "spreadlab/linreg.hpp"
#include "spreadlab/parallel.hpp"

namespace spreadlab::eval {

/// Fold id of each row: a seeded permutation dealt round-robin into k folds.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

/// Candidate lists per hyperparameter. Fields left empty take the value from
/// `base`. Points are enumerated with learning_rate varying slowest.
struct GridSpec {
  gbm::Hyperparams base;
  std::vector<double> learning_rate;
  std::vector<int> max_depth;
  std::vector<double> gamma;
  std::vector<double> min_child_weight;
  std::vector<double> subsample;
  std::vector<double> colsample;
  std::vector<double> lambda;
  std::vector<int> nrounds;
  std::size_t k = 5;

  /// 3^5 = 243 points around the published optimum.
  static GridSpec around_tuned();
  /// Depth-only grid used by default inside Monte-Carlo splits.
  static GridSpec reduced(const gbm::Hyperparams& base);

  std::vector<gbm::Hyperparams> points() const;
  /// Throws InvalidConfig / InvalidHyperparams.
  void validate(std::size_t n_features) const;
};

struct GridRow {
  gbm::Hyperparams hp;
  double cv_mse = 0.0;
};

struct GridResult {
  gbm::Hyperparams best;
  double best_mse = 0.0;
  std::size_t best_index = 0;
  std::vector<GridRow> table;
};

/// Exhaustive k-fold CV over the grid with one fold assignment shared by all
/// points. The first point in enumeration order wins ties.
GridResult grid_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GridSpec& grid,
                       std::uint64_t seed, ExecutionPolicy policy = ExecutionPolicy::Serial);

GridResult grid_search(const Dataset& data, const FeatureSpec& spec, const GridSpec& grid, std::uint64_t seed,
                       ExecutionPolicy policy = ExecutionPolicy::Serial);

enum class ModelKind { Gbm, Stepwise, Lasso, Ols, Mean };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelConfig {
  ModelKind kind = ModelKind::Gbm;
  FeatureSpec spec = FeatureSpec::main_effects();
  gbm::Hyperparams hp;
  /// Per-split tuning grid for gbm; none means hp is used as is.
  std::optional<GridSpec> tune;
  StepDirection direction = StepDirection::Both;
  /// Select the stepwise formula once on the full data instead of per split.
  bool freeze_formula = false;
  std::size_t lasso_folds = 5;
  /// Build prediction intervals (Jackknife+ for gbm, t-based for linear).
  bool intervals = true;

  std::string name() const { return std::string(to_string(kind)); }
  static ModelConfig defaults(ModelKind kind);
};

struct McConfig {
  std::size_t n_splits = 100;
  double train_frac = 0.8;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

/// Rows of one split; train is round(train_frac * n) rows, both sorted.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split make_split(std::size_t n, double train_frac, std::uint64_t seed, std::size_t index);

struct SplitRow {
  std::size_t split = 0;
  std::string model;
  bool ok = true;
  std::string error;
  double mse = 0.0;
  /// NaN when the model produced no intervals.
  double coverage = 0.0;
  double length_bps = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct ModelSummary {
  std::string model;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  double mean_coverage = 0.0;
  double sd_coverage = 0.0;
  double mean_length_bps = 0.0;
  double sd_length_bps = 0.0;
  /// Splits whose coverage fell below 1 - 2 alpha.
  std::size_t below_bound = 0;
};

struct CVReport {
  McConfig config;
  std::vector<ModelSummary> models;
  /// Split-major, then model order.
  std::vector<SplitRow> rows;
  bool complete = true;

  const ModelSummary& summary(std::string_view model) const;
};

/// Repeated random train/test splits. Splits run under `policy`; everything
/// inside a split is serial. Per-split failures are recorded in the rows.
CVReport monte_carlo_cv(const Dataset& data, const std::vector<ModelConfig>& models, const McConfig& config,
                        ExecutionPolicy policy = ExecutionPolicy::Parallel);

void write_rows_csv(const CVReport& report, std::ostream& out);

/// Mean and sample standard deviation (n - 1); SD is 0 for one value.
std::pair<double, double> mean_sd(const std::vector<double>& v);

}  // namespace spreadlab::eval
