#include "spreadlab/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "spreadlab/error.hpp"

namespace spreadlab::interpret {

namespace {

void require_continuous(const Dataset& data, Predictor feature) {
  if (!data.has(feature)) throw Error(ErrorKind::UnknownFeature, std::string(name(feature)) + " is not in the data");
  if (is_binary(feature)) {
    throw Error(ErrorKind::InvalidConfig, "ALE applies to continuous predictors; " + std::string(name(feature)) +
                                              " is binary");
  }
}

std::vector<double> column(const Dataset& data, Predictor feature) {
  std::vector<double> v;
  v.reserve(data.n());
  for (const auto& r : data.records) v.push_back(r[feature]);
  return v;
}

// Bin j covers (edges[j], edges[j+1]]; the lowest edge belongs to bin 0.
std::size_t bin_of(const std::vector<double>& edges, double x) {
  const auto it = std::lower_bound(edges.begin(), edges.end(), x);
  const auto j = static_cast<std::size_t>(it - edges.begin());
  const std::size_t k = edges.size() - 1;
  if (j == 0) return 0;
  return std::min(j, k) - 1;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double BoundModel::predict(const BondRecord& record) const { return model->predict(design_row(record, spec)); }

std::vector<ImportanceEntry> ImportanceReport::ranked() const {
  std::vector<ImportanceEntry> out = entries;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

ImportanceReport feature_importance(const gbm::Ensemble& model) {
  const std::size_t p = model.feature_names.size();
  ImportanceReport report;
  report.entries.resize(p);
  for (std::size_t f = 0; f < p; ++f) report.entries[f].feature = model.feature_names[f];
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) report.entries[static_cast<std::size_t>(node.feature)].gain += node.gain;
    }
  }
  double total = 0.0;
  for (const auto& e : report.entries) total += e.gain;
  report.no_splits = !(total > 0.0);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.entries[a].gain > report.entries[b].gain;
  });
  for (std::size_t r = 0; r < p; ++r) {
    auto& e = report.entries[order[r]];
    e.rank = r + 1;
    e.share = report.no_splits ? 0.0 : e.gain / total;
  }
  return report;
}

std::vector<double> quantile_edges(const Dataset& data, Predictor feature, std::size_t k_bins) {
  if (k_bins < 1) throw Error(ErrorKind::InvalidConfig, "k_bins must be >= 1");
  if (data.n() == 0) throw Error(ErrorKind::EmptyInput, "no observations");
  std::vector<double> x = column(data, feature);
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  std::vector<double> edges;
  edges.reserve(k_bins + 1);
  for (std::size_t q = 0; q <= k_bins; ++q) {
    const std::size_t idx = q == 0 ? 0 : (n * q + k_bins - 1) / k_bins - 1;
    edges.push_back(x[idx]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.size() < 2) {
    throw Error(ErrorKind::ConstantFeature, std::string(name(feature)) + " takes a single value");
  }
  return edges;
}

AleCurve ale_first_order(const BoundModel& model, const Dataset& data, Predictor feature, std::size_t k_bins,
                         ExecutionPolicy policy) {
  require_continuous(data, feature);
  AleCurve curve;
  curve.feature = feature;
  curve.edges = quantile_edges(data, feature, k_bins);
  const std::size_t k = curve.edges.size() - 1;
  const std::size_t n = data.n();

  std::vector<std::size_t> bin(n);
  std::vector<double> diff(n);
  parallel_for(policy, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    BondRecord r = data.records[idx];
    const std::size_t j = bin_of(curve.edges, r[feature]);
    r[feature] = curve.edges[j + 1];
    const double hi = model.predict(r);
    r[feature] = curve.edges[j];
    const double lo = model.predict(r);
    bin[idx] = j;
    diff[idx] = hi - lo;
  });

  std::vector<double> sum(k, 0.0);
  curve.counts.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[bin[i]] += diff[i];
    ++curve.counts[bin[i]];
  }
  curve.effects.assign(k + 1, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double mean = curve.counts[j] > 0 ? sum[j] / static_cast<double>(curve.counts[j]) : 0.0;
    curve.effects[j + 1] = curve.effects[j] + mean;
  }
  double centre = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    centre += static_cast<double>(curve.counts[j]) * 0.5 * (curve.effects[j] + curve.effects[j + 1]);
  }
  centre /= static_cast<double>(n);
  for (auto& e : curve.effects) e -= centre;
  return curve;
}

AleSurface ale_second_order(const BoundModel& model, const Dataset& data, Predictor feature_a,
                            Predictor feature_b, std::size_t k_bins, ExecutionPolicy policy) {
  require_continuous(data, feature_a);
  require_continuous(data, feature_b);
  if (feature_a == feature_b) throw Error(ErrorKind::InvalidConfig, "second-order ALE needs two distinct features");
  AleSurface s;
  s.feature_a = feature_a;
  s.feature_b = feature_b;
  s.edges_a = quantile_edges(data, feature_a, k_bins);
  s.edges_b = quantile_edges(data, feature_b, k_bins);
  const auto ka = static_cast<Eigen::Index>(s.edges_a.size() - 1);
  const auto kb = static_cast<Eigen::Index>(s.edges_b.size() - 1);
  const std::size_t n = data.n();

  std::vector<std::size_t> cell_a(n);
  std::vector<std::size_t> cell_b(n);
  std::vector<double> mixed(n);
  parallel_for(policy, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    BondRecord r = data.records[idx];
    const std::size_t j = bin_of(s.edges_a, r[feature_a]);
    const std::size_t l = bin_of(s.edges_b, r[feature_b]);
    const auto at = [&](std::size_t ja, std::size_t lb) {
      r[feature_a] = s.edges_a[ja];
      r[feature_b] = s.edges_b[lb];
      return model.predict(r);
    };
    const double d = at(j + 1, l + 1) - at(j, l + 1) - at(j + 1, l) + at(j, l);
    cell_a[idx] = j;
    cell_b[idx] = l;
    mixed[idx] = d;
  });

  s.counts = Eigen::MatrixXi::Zero(ka, kb);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(cell_a[i]);
    const auto l = static_cast<Eigen::Index>(cell_b[i]);
    sum(j, l) += mixed[i];
    ++s.counts(j, l);
  }

  s.local = Eigen::MatrixXd::Zero(ka, kb);
  for (Eigen::Index j = 0; j < ka; ++j) {
    for (Eigen::Index l = 0; l < kb; ++l) {
      if (s.counts(j, l) > 0) s.local(j, l) = sum(j, l) / s.counts(j, l);
    }
  }
  // Empty cells copy the closest populated cell (index distance scaled by grid
  // size); the first such cell in row-major order wins ties.
  const Eigen::MatrixXd raw = s.local;
  for (Eigen::Index j = 0; j < ka; ++j) {
    for (Eigen::Index l = 0; l < kb; ++l) {
      if (s.counts(j, l) > 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index jj = 0; jj < ka; ++jj) {
        for (Eigen::Index ll = 0; ll < kb; ++ll) {
          if (s.counts(jj, ll) == 0) continue;
          const double da = static_cast<double>(j - jj) / static_cast<double>(ka);
          const double db = static_cast<double>(l - ll) / static_cast<double>(kb);
          const double dist = da * da + db * db;
          if (dist < best) {
            best = dist;
            s.local(j, l) = raw(jj, ll);
          }
        }
      }
    }
  }

  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ka + 1, kb + 1);
  for (Eigen::Index j = 1; j <= ka; ++j) {
    for (Eigen::Index l = 1; l <= kb; ++l) {
      f(j, l) = s.local(j - 1, l - 1) + f(j - 1, l) + f(j, l - 1) - f(j - 1, l - 1);
    }
  }

  const Eigen::MatrixXd counts = s.counts.cast<double>();
  Eigen::VectorXd fa = Eigen::VectorXd::Zero(ka + 1);
  for (Eigen::Index j = 1; j <= ka; ++j) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index l = 0; l < kb; ++l) {
      const double step = 0.5 * ((f(j, l) - f(j - 1, l)) + (f(j, l + 1) - f(j - 1, l + 1)));
      num += counts(j - 1, l) * step;
      den += counts(j - 1, l);
    }
    fa[j] = fa[j - 1] + (den > 0.0 ? num / den : 0.0);
  }
  Eigen::VectorXd fb = Eigen::VectorXd::Zero(kb + 1);
  for (Eigen::Index l = 1; l <= kb; ++l) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < ka; ++j) {
      const double step = 0.5 * ((f(j, l) - f(j, l - 1)) + (f(j + 1, l) - f(j + 1, l - 1)));
      num += counts(j, l - 1) * step;
      den += counts(j, l - 1);
    }
    fb[l] = fb[l - 1] + (den > 0.0 ? num / den : 0.0);
  }
  for (Eigen::Index j = 0; j <= ka; ++j) {
    for (Eigen::Index l = 0; l <= kb; ++l) f(j, l) -= fa[j] + fb[l];
  }

  double centre = 0.0;
  for (Eigen::Index j = 0; j < ka; ++j) {
    for (Eigen::Index l = 0; l < kb; ++l) {
      centre += counts(j, l) * 0.25 * (f(j, l) + f(j + 1, l) + f(j, l + 1) + f(j + 1, l + 1));
    }
  }
  centre /= static_cast<double>(n);
  s.effects = f.array() - centre;
  return s;
}

BondRecord median_profile(const Dataset& data) {
  if (data.n() == 0) throw Error(ErrorKind::EmptyInput, "no observations");
  BondRecord profile;
  for (auto p : all_predictors()) {
    if (!data.has(p)) continue;
    const std::vector<double> v = column(data, p);
    if (is_binary(p)) {
      const auto ones = static_cast<std::size_t>(std::count(v.begin(), v.end(), 1.0));
      profile[p] = 2 * ones > v.size() ? 1.0 : 0.0;
    } else {
      profile[p] = median_of(v);
    }
  }
  profile.spread = median_of([&] {
    std::vector<double> s;
    for (const auto& r : data.records) s.push_back(r.spread);
    return s;
  }());
  return profile;
}

namespace {

ConditionalCurve curve_from_profile(const BoundModel& model, const Dataset& data, Predictor feature,
                                    const std::vector<double>& grid, BondRecord profile,
                                    const conformal::LooArtifacts* intervals, double alpha) {
  if (!data.has(feature)) throw Error(ErrorKind::UnknownFeature, std::string(name(feature)) + " is not in the data");
  const std::vector<double> observed = column(data, feature);
  const auto [lo, hi] = std::minmax_element(observed.begin(), observed.end());

  ConditionalCurve c;
  c.feature = feature;
  c.profile = profile;
  c.grid = grid;
  for (double v : grid) {
    BondRecord r = profile;
    r[feature] = v;
    c.point.push_back(model.predict(r));
    c.extrapolated.push_back(v < *lo || v > *hi);
    if (intervals != nullptr) {
      const Eigen::VectorXd row = model.row(r);
      c.intervals.push_back(conformal::jackknife_plus_interval(*intervals, std::span(row.data(), row.size()), alpha));
    }
  }
  return c;
}

}  // namespace

ConditionalCurve conditional_curve(const BoundModel& model, const Dataset& data, Predictor feature,
                                   const std::vector<double>& grid, const conformal::LooArtifacts* intervals,
                                   double alpha) {
  return curve_from_profile(model, data, feature, grid, median_profile(data), intervals, alpha);
}

std::vector<ScenarioValue> scenario_anchors(const Dataset& data, Predictor feature) {
  if (!data.has(feature)) throw Error(ErrorKind::UnknownFeature, std::string(name(feature)) + " is not in the data");
  if (data.n() == 0) throw Error(ErrorKind::EmptyInput, "no observations");
  std::vector<double> v = column(data, feature);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const std::size_t d = (n + 9) / 10;
  const double bottom = std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d), 0.0) /
                        static_cast<double>(d);
  const double top = std::accumulate(v.end() - static_cast<std::ptrdiff_t>(d), v.end(), 0.0) /
                     static_cast<double>(d);
  return {{"hard", top}, {"normal", median_of(v)}, {"soft", bottom}};
}

std::vector<ConditionalCurve> conditional_curve_by_scenario(
    const BoundModel& model, const Dataset& data, Predictor feature, const std::vector<double>& grid,
    Predictor scenario_feature, const std::vector<ScenarioValue>& scenarios,
    const conformal::LooArtifacts* intervals, double alpha) {
  if (!data.has(scenario_feature)) {
    throw Error(ErrorKind::UnknownFeature, std::string(name(scenario_feature)) + " is not in the data");
  }
  const BondRecord base = median_profile(data);
  std::vector<ConditionalCurve> out;
  for (const auto& sc : scenarios) {
    BondRecord profile = base;
    profile[scenario_feature] = sc.value;
    ConditionalCurve c = curve_from_profile(model, data, feature, grid, profile, intervals, alpha);
    c.scenario_feature = scenario_feature;
    c.scenario_value = sc.value;
    c.scenario_label = sc.label;
    out.push_back(std::move(c));
  }
  return out;
}

double gap_variation(const ConditionalCurve& a, const ConditionalCurve& b) {
  if (a.point.size() != b.point.size() || a.point.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "curves must share a non-empty grid");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < a.point.size(); ++i) {
    const double gap = a.point[i] - b.point[i];
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  return hi - lo;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g.back() = hi;
  return g;
}

void write_importance_csv(const ImportanceReport& report, std::ostream& out) {
  out << "rank,feature,gain,share\n";
  for (const auto& e : report.ranked()) {
    out << e.rank << ',' << e.feature << ',' << format_double(e.gain) << ',' << format_double(e.share) << '\n';
  }
}

void write_ale_csv(const AleCurve& curve, std::ostream& out) {
  out << "feature,edge,effect,count\n";
  for (std::size_t j = 0; j < curve.edges.size(); ++j) {
    // Edge j closes bin j-1; the lowest edge reports the first bin's count.
    const std::size_t count = curve.counts[j == 0 ? 0 : j - 1];
    out << name(curve.feature) << ',' << format_double(curve.edges[j]) << ',' << format_double(curve.effects[j])
        << ',' << count << '\n';
  }
}

void write_ale2_csv(const AleSurface& s, std::ostream& out) {
  out << "feature_a,feature_b,edge_a,edge_b,effect,count\n";
  for (Eigen::Index j = 0; j < s.effects.rows(); ++j) {
    for (Eigen::Index l = 0; l < s.effects.cols(); ++l) {
      const int count = s.counts(std::max<Eigen::Index>(j - 1, 0), std::max<Eigen::Index>(l - 1, 0));
      out << name(s.feature_a) << ',' << name(s.feature_b) << ',' << format_double(s.edges_a[static_cast<std::size_t>(j)])
          << ',' << format_double(s.edges_b[static_cast<std::size_t>(l)]) << ',' << format_double(s.effects(j, l))
          << ',' << count << '\n';
    }
  }
}

void write_curves_csv(const std::vector<ConditionalCurve>& curves, std::ostream& out, ResponseScale scale) {
  const double to_bps = scale == ResponseScale::Decimal ? kBpsPerUnit : 1.0;
  out << "scenario,scenario_value,feature,value,point_bps,lower_bps,upper_bps,extrapolated\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      out << (c.scenario_label.empty() ? "profile" : c.scenario_label) << ','
          << (c.scenario_value ? format_double(*c.scenario_value) : "") << ',' << name(c.feature) << ','
          << format_double(c.grid[i]) << ',' << format_double(c.point[i] * to_bps) << ',';
      if (c.intervals.empty()) {
        out << ",";
      } else {
        out << format_double(c.intervals[i].lower * to_bps) << ','
            << format_double(c.intervals[i].upper * to_bps);
      }
      out << ',' << (c.extrapolated[i] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace spreadlab::interpret
