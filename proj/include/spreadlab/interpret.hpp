#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spreadlab/conformal.hpp"
#include "spreadlab/data.hpp"
#include "spreadlab/gbm.hpp"
#include "spreadlab/parallel.hpp"
#include "spreadlab/regressor.hpp"

namespace spreadlab::interpret {

/// A fitted model together with the layout of its design rows, so effects can
/// be computed by editing one predictor of a bond record.
struct BoundModel {
  RegressorPtr model;
  FeatureSpec spec;

  double predict(const BondRecord& record) const;
  Eigen::VectorXd row(const BondRecord& record) const { return design_row(record, spec); }
};

struct ImportanceEntry {
  std::string feature;
  double gain = 0.0;
  double share = 0.0;
  std::size_t rank = 0;  // 1 = most important
};

struct ImportanceReport {
  /// In model feature order.
  std::vector<ImportanceEntry> entries;
  bool no_splits = true;

  /// Entries sorted by rank.
  std::vector<ImportanceEntry> ranked() const;
};

/// Total retained split gain per feature, normalized to shares.
ImportanceReport feature_importance(const gbm::Ensemble& model);

struct AleCurve {
  Predictor feature = Predictor::EL;
  std::vector<double> edges;
  /// Centered accumulated effect at each edge.
  std::vector<double> effects;
  /// Instances per bin; bin j spans (edges[j], edges[j+1]].
  std::vector<std::size_t> counts;
};

struct AleSurface {
  Predictor feature_a = Predictor::EL;
  Predictor feature_b = Predictor::SIZE;
  std::vector<double> edges_a;
  std::vector<double> edges_b;
  /// (edges_a.size()) x (edges_b.size()) second-order effects.
  Eigen::MatrixXd effects;
  /// Mean mixed difference per cell after empty-cell filling.
  Eigen::MatrixXd local;
  /// Instances per cell.
  Eigen::MatrixXi counts;
};

/// Type-1 empirical quantiles at 0, 1/k, ..., 1 with duplicates merged.
/// Throws ConstantFeature.
std::vector<double> quantile_edges(const Dataset& data, Predictor feature, std::size_t k_bins);

AleCurve ale_first_order(const BoundModel& model, const Dataset& data, Predictor feature,
                         std::size_t k_bins = 20, ExecutionPolicy policy = ExecutionPolicy::Serial);

AleSurface ale_second_order(const BoundModel& model, const Dataset& data, Predictor feature_a,
                            Predictor feature_b, std::size_t k_bins = 10,
                            ExecutionPolicy policy = ExecutionPolicy::Serial);

/// Median of each continuous predictor, most common value of each binary one.
BondRecord median_profile(const Dataset& data);

struct ConditionalCurve {
  Predictor feature = Predictor::EL;
  BondRecord profile;
  std::vector<double> grid;
  std::vector<double> point;
  /// Empty unless Jackknife+ artifacts were supplied.
  std::vector<PredictionInterval> intervals;
  /// Grid values outside the observed range of the feature.
  std::vector<bool> extrapolated;
  std::optional<Predictor> scenario_feature;
  std::optional<double> scenario_value;
  std::string scenario_label;
};

ConditionalCurve conditional_curve(const BoundModel& model, const Dataset& data, Predictor feature,
                                   const std::vector<double>& grid,
                                   const conformal::LooArtifacts* intervals = nullptr, double alpha = 0.05);

struct ScenarioValue {
  std::string label;
  double value = 0.0;
};

/// hard = mean of the top decile, normal = median, soft = mean of the bottom
/// decile; deciles hold ceil(n/10) observations.
std::vector<ScenarioValue> scenario_anchors(const Dataset& data, Predictor feature);

std::vector<ConditionalCurve> conditional_curve_by_scenario(
    const BoundModel& model, const Dataset& data, Predictor feature, const std::vector<double>& grid,
    Predictor scenario_feature, const std::vector<ScenarioValue>& scenarios,
    const conformal::LooArtifacts* intervals = nullptr, double alpha = 0.05);

/// max - min over the grid of a.point - b.point; 0 for parallel curves.
double gap_variation(const ConditionalCurve& a, const ConditionalCurve& b);

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

void write_importance_csv(const ImportanceReport& report, std::ostream& out);
void write_ale_csv(const AleCurve& curve, std::ostream& out);
void write_ale2_csv(const AleSurface& surface, std::ostream& out);
void write_curves_csv(const std::vector<ConditionalCurve>& curves, std::ostream& out,
                      ResponseScale scale = ResponseScale::Decimal);

}  // namespace spreadlab::interpret
