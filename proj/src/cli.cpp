#include "spreadlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "spreadlab/conformal.hpp"
#include "spreadlab/data.hpp"
#include "spreadlab/error.hpp"
#include "spreadlab/eval.hpp"
#include "spreadlab/gbm.hpp"
#include "spreadlab/interpret.hpp"
#include "spreadlab/linreg.hpp"
#include "spreadlab/random.hpp"
#include "spreadlab/serialize.hpp"
#include "spreadlab/synth.hpp"

namespace spreadlab::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

struct Global {
  std::uint64_t seed = 0;
  int threads = 0;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

ResponseScale parse_scale(const std::string& text) {
  if (text == "decimal") return ResponseScale::Decimal;
  if (text == "bps") return ResponseScale::BasisPoints;
  throw Error(ErrorKind::InvalidConfig, "scale must be decimal or bps, got '" + text + "'");
}

double to_bps(double v, ResponseScale scale) { return scale == ResponseScale::Decimal ? v * kBpsPerUnit : v; }

Predictor predictor_arg(const std::string& text) {
  const auto p = parse_predictor(text);
  if (!p) throw Error(ErrorKind::UnknownPredictor, text);
  return *p;
}

/// --features replaces the predictor list and drops the default interaction
/// terms; --interactions "none" clears them explicitly.
FeatureSpec build_spec(FeatureSpec spec, const std::string& features, const std::string& interactions,
                       const std::string& scale) {
  if (!features.empty()) {
    spec.predictors = parse_predictor_list(features);
    spec.interactions.clear();
  }
  if (interactions == "none") {
    spec.interactions.clear();
  } else if (!interactions.empty()) {
    spec.interactions = parse_interaction_list(interactions);
  }
  spec.response_scale = parse_scale(scale);
  spec.validate();
  return spec;
}

gbm::Hyperparams load_params(const std::string& path, const std::vector<std::string>& names) {
  if (path.empty()) return gbm::Hyperparams::tuned();
  return io::hyperparams_from_json(io::read_json(path), names, gbm::Hyperparams::tuned());
}

template <typename T>
std::vector<T> json_list(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw Error(ErrorKind::InvalidConfig, "grid." + key + " must be a non-empty array");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidConfig, "grid." + key + " has a value of the wrong type");
  }
}

eval::GridSpec grid_from_json(const json& j, const gbm::Hyperparams& base) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "grid file must hold a JSON object");
  eval::GridSpec g;
  g.base = base;
  for (const auto& [key, v] : j.items()) {
    if (key == "learning_rate" || key == "eta") {
      g.learning_rate = json_list<double>(v, key);
    } else if (key == "max_depth") {
      g.max_depth = json_list<int>(v, key);
    } else if (key == "gamma") {
      g.gamma = json_list<double>(v, key);
    } else if (key == "min_child_weight") {
      g.min_child_weight = json_list<double>(v, key);
    } else if (key == "subsample") {
      g.subsample = json_list<double>(v, key);
    } else if (key == "colsample" || key == "colsample_bytree") {
      g.colsample = json_list<double>(v, key);
    } else if (key == "lambda") {
      g.lambda = json_list<double>(v, key);
    } else if (key == "nrounds") {
      g.nrounds = json_list<int>(v, key);
    } else if (key == "k") {
      if (!v.is_number_unsigned()) throw Error(ErrorKind::InvalidConfig, "grid.k must be a positive integer");
      g.k = v.get<std::size_t>();
    } else {
      throw Error(ErrorKind::InvalidConfig, "unknown grid key '" + key + "'");
    }
  }
  return g;
}

Trainer trainer_for(const io::SavedModel& saved) {
  if (saved.ensemble) return gbm::trainer(saved.ensemble->hyperparams);
  const auto& lm = *saved.linear;
  const auto names = saved.spec.column_names();
  switch (lm.method) {
    case FitMethod::Lasso:
      return [lambda = lm.lambda, names](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                         std::uint64_t) -> RegressorPtr {
        LassoOptions opts;
        opts.names = names;
        return std::make_shared<LinearModel>(lasso_fit(X, y, lambda, opts));
      };
    case FitMethod::Stepwise:
      return [names](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) -> RegressorPtr {
        return std::make_shared<LinearModel>(stepwise_select(X, y, StepDirection::Both, names));
      };
    case FitMethod::Ols:
      break;
  }
  return [names](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t) -> RegressorPtr {
    return std::make_shared<LinearModel>(ols_fit(X, y, {true, names}));
  };
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(6) << v;
  return s.str();
}

// synth -----------------------------------------------------------------------

struct SynthOptions {
  std::size_t n = 765;
  double noise_sd = 0.010;
  std::string truth = "nonlinear_interactive";
  std::string out;
  std::string meta;
};

void cmd_synth(const SynthOptions& o, const Global& g, std::ostream& log) {
  ScenarioConfig config;
  config.n = o.n;
  config.seed = g.seed;
  config.noise_sd = o.noise_sd;
  config.truth = parse_truth_kind(o.truth);
  config.validate();
  const auto sample = generate(config);
  save_csv(sample.data, o.out);
  const std::string meta = o.meta.empty() ? o.out + ".meta.json" : o.meta;
  io::write_text(meta, metadata(config).dump(2));
  log << "wrote " << sample.data.n() << " rows to " << o.out << " and metadata to " << meta << '\n';
}

// fit -------------------------------------------------------------------------

struct FitOptions {
  std::string data;
  std::string model = "gbm";
  std::string params;
  std::string grid;
  bool tune = false;
  std::string features;
  std::string interactions;
  std::string scale = "decimal";
  std::string direction = "both";
  std::optional<double> lambda;
  std::size_t folds = 5;
  std::string out;
  std::string report;
};

void linear_report(const LinearModel& m, std::ostream& r) {
  r << "method " << to_string(m.method) << '\n';
  r << "rows " << m.n << '\n';
  r << "selected " << m.columns.size() << " of " << m.input_width << " columns\n";
  if (m.method == FitMethod::Lasso) r << "lambda " << sci(m.lambda) << '\n';
  r << "r2 " << fixed(m.r2, 6) << '\n';
  if (m.has_inference()) {
    r << "adj_r2 " << fixed(m.adj_r2, 6) << '\n';
    r << "sigma " << sci(std::sqrt(m.sigma2)) << '\n';
    r << "df_resid " << m.df_resid << '\n';
  }
  r << "aic " << fixed(m.aic, 4) << "\n\n";

  r << std::left << std::setw(16) << "term" << std::right << std::setw(15) << "estimate";
  if (m.has_inference()) r << std::setw(15) << "std_err" << std::setw(11) << "t" << std::setw(11) << "p";
  r << '\n';
  auto row = [&](const std::string& term, double est, double se, double t, double p) {
    r << std::left << std::setw(16) << term << std::right << std::setw(15) << sci(est);
    if (m.has_inference()) {
      r << std::setw(15) << sci(se) << std::setw(11) << fixed(t, 3) << std::setw(11) << fixed(p, 4);
    }
    r << '\n';
  };
  if (m.has_intercept) {
    const double t = m.intercept_se > 0.0 ? m.intercept / m.intercept_se : 0.0;
    row("(intercept)", m.intercept, m.intercept_se, t, m.intercept_p);
  }
  for (std::size_t j = 0; j < m.columns.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    const bool inf = m.has_inference();
    row(m.feature_names[j], m.coef[k], inf ? m.std_err[k] : 0.0, inf ? m.t_stat[k] : 0.0,
        inf ? m.p_value[k] : 1.0);
  }
  if (!m.trace.empty()) {
    r << "\nstep  action  term             aic  slopes\n";
    for (std::size_t i = 0; i < m.trace.size(); ++i) {
      const auto& s = m.trace[i];
      r << std::left << std::setw(6) << i << std::setw(8) << s.action << std::setw(12)
        << (s.column.empty() ? "-" : s.column) << std::right << std::setw(12) << fixed(s.aic, 4)
        << std::setw(8) << s.n_slopes << '\n';
    }
  }
}

void cmd_fit(const FitOptions& o, const Global& g, std::ostream& log) {
  const auto kind = eval::parse_model_kind(o.model);
  if (kind == eval::ModelKind::Mean) {
    throw Error(ErrorKind::InvalidConfig, "fit supports gbm, ols, lasso and stepwise");
  }
  const auto spec = build_spec(eval::ModelConfig::defaults(kind).spec, o.features, o.interactions, o.scale);
  const auto data = load_csv(o.data, spec);
  const auto dm = design_matrix(data, spec);
  const auto names = spec.column_names();

  io::SavedModel saved;
  saved.spec = spec;
  std::ostringstream report;
  report << "data " << o.data << '\n';

  if (kind == eval::ModelKind::Gbm) {
    auto hp = load_params(o.params, names);
    hp.seed = g.seed;
    if (o.tune || !o.grid.empty()) {
      const auto grid = o.grid.empty() ? [&] {
        auto t = eval::GridSpec::around_tuned();
        t.base = hp;
        return t;
      }()
                                       : grid_from_json(io::read_json(o.grid), hp);
      const auto res = eval::grid_search(dm.X, dm.y, grid, derive_seed(g.seed, 1), ExecutionPolicy::Parallel);
      hp = res.best;
      hp.seed = g.seed;
      report << "grid_points " << res.table.size() << '\n';
      report << "grid_best_index " << res.best_index << '\n';
      report << "grid_best_cv_mse " << sci(res.best_mse) << '\n';
    }
    auto trace = gbm::fit_traced(dm.X, dm.y, hp, names, ExecutionPolicy::Parallel);
    report << "model gbm\n";
    report << "rows " << data.n() << '\n';
    report << "features " << names.size() << '\n';
    report << "rounds " << trace.model.trees.size() << '\n';
    report << "base_score " << sci(trace.model.base_score) << '\n';
    report << "final_train_mse " << sci(trace.train_mse.back()) << '\n';
    report << "hyperparams " << io::to_json(hp, names).dump() << '\n';
    saved.kind = "gbm";
    saved.ensemble = std::make_shared<const gbm::Ensemble>(std::move(trace.model));
  } else {
    LinearModel m;
    if (kind == eval::ModelKind::Ols) {
      m = ols_fit(dm.X, dm.y, {true, names});
    } else if (kind == eval::ModelKind::Lasso) {
      LassoOptions opts;
      opts.names = names;
      if (o.lambda) {
        m = lasso_fit(dm.X, dm.y, *o.lambda, opts);
      } else {
        auto cv = lasso_cv(dm.X, dm.y, o.folds, lasso_default_grid(dm.X, dm.y), g.seed, opts,
                           ExecutionPolicy::Parallel);
        m = std::move(cv.model);
      }
    } else {
      m = stepwise_select(dm.X, dm.y, parse_step_direction(o.direction), names);
    }
    report << "model " << o.model << '\n';
    linear_report(m, report);
    saved.kind = "linear";
    saved.linear = std::make_shared<const LinearModel>(std::move(m));
  }

  io::save_model(saved, o.out);
  if (o.report.empty()) {
    log << report.str();
  } else {
    auto text = report.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    io::write_text(o.report, text);
    log << "wrote model to " << o.out << " and report to " << o.report << '\n';
  }
}

// predict ---------------------------------------------------------------------

struct PredictOptions {
  std::string model;
  std::string data;
  std::string train;
  std::string method = "auto";
  double alpha = 0.05;
  double split_ratio = 0.5;
  std::string out;
  std::string summary;
};

void cmd_predict(const PredictOptions& o, const Global& g, std::ostream& log) {
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
  const auto saved = io::load_model(o.model);
  const auto& spec = saved.spec;
  const auto model = saved.regressor();
  const auto data = load_csv(o.data, spec);
  const auto dm = design_matrix(data, spec);
  const auto n = static_cast<std::size_t>(dm.X.rows());

  std::string method = o.method;
  if (method == "auto") {
    if (saved.linear && saved.linear->has_inference()) {
      method = "ols";
    } else {
      method = o.train.empty() ? "none" : "jackknife_plus";
    }
  }

  std::vector<PredictionInterval> pis(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (method == "none") {
    const Eigen::VectorXd p = model->predict(dm.X, ExecutionPolicy::Parallel);
    for (std::size_t i = 0; i < n; ++i) pis[i] = {p[static_cast<Eigen::Index>(i)], nan, nan, o.alpha};
  } else if (method == "ols") {
    if (!saved.linear || !saved.linear->has_inference()) {
      throw Error(ErrorKind::InvalidConfig, "method ols needs a linear model with inference (ols or stepwise)");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::VectorXd x = dm.X.row(static_cast<Eigen::Index>(i)).transpose();
      pis[i] = ols_predict_interval(*saved.linear, std::span(x.data(), x.size()), o.alpha);
    }
  } else if (method == "naive" || method == "split" || method == "jackknife" || method == "jackknife_plus") {
    if (o.train.empty()) throw Error(ErrorKind::InvalidConfig, "method " + method + " needs --train");
    const auto train = load_csv(o.train, spec);
    const auto tm = design_matrix(train, spec);
    const auto trainer = trainer_for(saved);
    if (method == "jackknife_plus") {
      auto art = conformal::jackknife_artifacts(trainer, tm.X, tm.y, g.seed, ExecutionPolicy::Parallel);
      art.full = model;
      pis = conformal::jackknife_plus_intervals(art, dm.X, o.alpha, ExecutionPolicy::Parallel);
    } else if (method == "jackknife") {
      auto art = conformal::jackknife_artifacts(trainer, tm.X, tm.y, g.seed, ExecutionPolicy::Parallel);
      art.full = model;
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = dm.X.row(static_cast<Eigen::Index>(i)).transpose();
        pis[i] = conformal::jackknife_interval(art, std::span(x.data(), x.size()), o.alpha);
      }
    } else if (method == "split") {
      const auto sc = conformal::split_conformal_fit(trainer, tm.X, tm.y, o.split_ratio, g.seed);
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = dm.X.row(static_cast<Eigen::Index>(i)).transpose();
        pis[i] = sc.interval(std::span(x.data(), x.size()), o.alpha);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = dm.X.row(static_cast<Eigen::Index>(i)).transpose();
        pis[i] = conformal::naive_interval(*model, tm.X, tm.y, std::span(x.data(), x.size()), o.alpha);
      }
    }
  } else {
    throw Error(ErrorKind::InvalidConfig,
                "method must be auto, none, ols, naive, split, jackknife or jackknife_plus, got '" + method + "'");
  }

  const auto scale = spec.response_scale;
  const bool has_bounds = method != "none";
  std::size_t covered = 0;
  std::size_t finite = 0;
  double width_sum = 0.0;
  auto out = open_output(o.out);
  out << "row,point_bps,lower_bps,upper_bps,width_bps,spread_bps,covered\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = pis[i];
    const double y = dm.y[static_cast<Eigen::Index>(i)];
    out << i + 1 << ',' << format_double(to_bps(pi.point, scale));
    if (has_bounds) {
      const bool hit = pi.contains(y);
      covered += hit ? 1 : 0;
      const double w = to_bps(pi.width(), scale);
      if (std::isfinite(w)) {
        ++finite;
        width_sum += w;
      }
      out << ',' << format_double(to_bps(pi.lower, scale)) << ',' << format_double(to_bps(pi.upper, scale)) << ','
          << format_double(w) << ',' << format_double(data.records[i].spread) << ',' << (hit ? 1 : 0) << '\n';
    } else {
      out << ",,,," << format_double(data.records[i].spread) << ",\n";
    }
  }
  finish(out, o.out);

  json s;
  s["rows"] = n;
  s["method"] = method;
  s["alpha"] = o.alpha;
  if (has_bounds) {
    s["covered"] = covered;
    s["coverage"] = static_cast<double>(covered) / static_cast<double>(n);
    s["finite_intervals"] = finite;
    s["mean_width_bps"] = finite > 0 ? json(width_sum / static_cast<double>(finite)) : json(nullptr);
  }
  if (!o.summary.empty()) io::write_text(o.summary, s.dump(2));
  log << "rows " << n << " method " << method << " alpha " << format_double(o.alpha);
  if (has_bounds) {
    log << " coverage " << fixed(s["coverage"].get<double>(), 4) << " (" << covered << '/' << n << ')';
    if (finite > 0) log << " mean_width_bps " << fixed(width_sum / static_cast<double>(finite), 2);
  }
  log << '\n';
}

// interpret -------------------------------------------------------------------

struct InterpretOptions {
  std::string model;
  std::string data;
  std::string prefix;
  bool importance = false;
  std::vector<std::string> ale;
  std::vector<std::string> ale2;
  std::size_t bins = 20;
  std::size_t bins2 = 10;
  std::string conditional;
  std::string scenario;
  std::size_t grid_points = 50;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  bool intervals = false;
  double alpha = 0.05;
};

std::string sanitize(std::string_view name) {
  std::string s(name);
  for (auto& c : s) {
    if (c == '.') c = '_';
  }
  return s;
}

void write_pair(const std::string& stem, const std::string& csv, const json& j, std::ostream& log) {
  const std::string csv_path = stem + ".csv";
  const std::string json_path = stem + ".json";
  auto out = open_output(csv_path);
  out << csv;
  finish(out, csv_path);
  io::write_text(json_path, j.dump(2));
  log << "wrote " << csv_path << " and " << json_path << '\n';
}

void cmd_interpret(const InterpretOptions& o, const Global& g, std::ostream& log) {
  if (!o.importance && o.ale.empty() && o.ale2.empty() && o.conditional.empty()) {
    throw Error(ErrorKind::InvalidConfig, "nothing to do: pass --importance, --ale, --ale2 or --conditional");
  }
  if (!o.scenario.empty() && o.conditional.empty()) {
    throw Error(ErrorKind::InvalidConfig, "--scenario needs --conditional");
  }
  const auto saved = io::load_model(o.model);
  const auto data = load_csv(o.data, saved.spec);
  const interpret::BoundModel bound{saved.regressor(), saved.spec};

  if (o.importance) {
    if (!saved.ensemble) throw Error(ErrorKind::InvalidConfig, "--importance needs a gbm model");
    const auto rep = interpret::feature_importance(*saved.ensemble);
    std::ostringstream csv;
    interpret::write_importance_csv(rep, csv);
    write_pair(o.prefix + "_importance", csv.str(), io::to_json(rep), log);
  }
  for (const auto& f : o.ale) {
    const auto p = predictor_arg(f);
    const auto curve = interpret::ale_first_order(bound, data, p, o.bins, ExecutionPolicy::Parallel);
    std::ostringstream csv;
    interpret::write_ale_csv(curve, csv);
    write_pair(o.prefix + "_ale_" + sanitize(name(p)), csv.str(), io::to_json(curve), log);
  }
  if (!o.ale2.empty()) {
    const auto a = predictor_arg(o.ale2.at(0));
    const auto b = predictor_arg(o.ale2.at(1));
    const auto surface = interpret::ale_second_order(bound, data, a, b, o.bins2, ExecutionPolicy::Parallel);
    std::ostringstream csv;
    interpret::write_ale2_csv(surface, csv);
    write_pair(o.prefix + "_ale2_" + sanitize(name(a)) + "_" + sanitize(name(b)), csv.str(), io::to_json(surface),
               log);
  }
  if (!o.conditional.empty()) {
    const auto f = predictor_arg(o.conditional);
    if (!data.has(f)) throw Error(ErrorKind::UnknownFeature, std::string(name(f)));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : data.records) {
      lo = std::min(lo, r[f]);
      hi = std::max(hi, r[f]);
    }
    const auto grid = interpret::linear_grid(o.grid_lo.value_or(lo), o.grid_hi.value_or(hi), o.grid_points);

    std::optional<conformal::LooArtifacts> art;
    if (o.intervals) {
      const auto dm = design_matrix(data, saved.spec);
      art = conformal::jackknife_artifacts(trainer_for(saved), dm.X, dm.y, g.seed, ExecutionPolicy::Parallel);
      art->full = bound.model;
    }
    const auto* art_ptr = art ? &*art : nullptr;

    std::vector<interpret::ConditionalCurve> curves;
    std::string stem = o.prefix + "_conditional_" + sanitize(name(f));
    json j;
    if (o.scenario.empty()) {
      curves.push_back(interpret::conditional_curve(bound, data, f, grid, art_ptr, o.alpha));
    } else {
      const auto s = predictor_arg(o.scenario);
      const auto anchors = interpret::scenario_anchors(data, s);
      curves = interpret::conditional_curve_by_scenario(bound, data, f, grid, s, anchors, art_ptr, o.alpha);
      stem += "_by_" + sanitize(name(s));
      json gaps = json::array();
      for (std::size_t a = 0; a < curves.size(); ++a) {
        for (std::size_t b = a + 1; b < curves.size(); ++b) {
          const double gv = interpret::gap_variation(curves[a], curves[b]);
          gaps.push_back({{"a", curves[a].scenario_label},
                          {"b", curves[b].scenario_label},
                          {"gap_variation_bps", to_bps(gv, saved.spec.response_scale)}});
          log << "gap_variation " << curves[a].scenario_label << '-' << curves[b].scenario_label << ' '
              << sci(to_bps(gv, saved.spec.response_scale)) << " bps\n";
        }
      }
      j["gap_variation"] = gaps;
    }
    json arr = json::array();
    for (const auto& c : curves) arr.push_back(io::to_json(c));
    j["curves"] = arr;
    j["response_scale"] = saved.spec.response_scale == ResponseScale::Decimal ? "decimal" : "bps";
    std::ostringstream csv;
    interpret::write_curves_csv(curves, csv, saved.spec.response_scale);
    write_pair(stem, csv.str(), j, log);
  }
}

// evaluate --------------------------------------------------------------------

struct EvaluateOptions {
  std::string data;
  std::string models = "gbm,stepwise";
  std::string params;
  std::string grid;
  bool no_tune = false;
  bool freeze_formula = false;
  std::string direction = "both";
  std::size_t splits = 100;
  double train_frac = 0.8;
  double alpha = 0.05;
  std::string out;
  std::string rows;
};

void cmd_evaluate(const EvaluateOptions& o, const Global& g, std::ostream& log) {
  std::vector<eval::ModelConfig> configs;
  std::stringstream list(o.models);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item.empty()) continue;
    auto c = eval::ModelConfig::defaults(eval::parse_model_kind(item));
    if (c.kind == eval::ModelKind::Gbm) {
      c.hp = load_params(o.params, c.spec.column_names());
      if (o.no_tune) {
        c.tune.reset();
      } else if (!o.grid.empty()) {
        c.tune = grid_from_json(io::read_json(o.grid), c.hp);
      } else {
        c.tune = eval::GridSpec::reduced(c.hp);
      }
    }
    c.direction = parse_step_direction(o.direction);
    c.freeze_formula = o.freeze_formula;
    configs.push_back(std::move(c));
  }
  if (configs.empty()) throw Error(ErrorKind::InvalidConfig, "--models lists no model");

  const auto data = load_csv(o.data, FeatureSpec{});
  eval::McConfig mc;
  mc.n_splits = o.splits;
  mc.train_frac = o.train_frac;
  mc.alpha = o.alpha;
  mc.seed = g.seed;
  if (mc.n_splits == 0) throw Error(ErrorKind::InvalidConfig, "splits >= 1");
  if (!(mc.alpha > 0.0 && mc.alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");

  const auto report = eval::monte_carlo_cv(data, configs, mc, ExecutionPolicy::Parallel);
  io::write_text(o.out, io::to_json(report).dump(2));
  if (!o.rows.empty()) {
    auto out = open_output(o.rows);
    eval::write_rows_csv(report, out);
    finish(out, o.rows);
  }

  log << std::left << std::setw(10) << "model" << std::right << std::setw(6) << "ok" << std::setw(14) << "mean_mse"
      << std::setw(14) << "sd_mse" << std::setw(10) << "coverage" << std::setw(12) << "length_bps" << '\n';
  for (const auto& m : report.models) {
    log << std::left << std::setw(10) << m.model << std::right << std::setw(6) << m.completed << std::setw(14)
        << sci(m.mean_mse) << std::setw(14) << sci(m.sd_mse) << std::setw(10)
        << (std::isnan(m.mean_coverage) ? std::string("-") : fixed(m.mean_coverage, 4)) << std::setw(12)
        << (std::isnan(m.mean_length_bps) ? std::string("-") : fixed(m.mean_length_bps, 2)) << '\n';
  }
  if (!report.complete) log << "some splits failed; see the report for details\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CAT bond spread pricing lab", "spreadlab"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or INI file; keys mirror the long flags, one [section] per subcommand");
  app.get_formatter()->column_width(34);

  Global g;
  app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic bond sample");
  synth->add_option("--n", so.n, "Number of bonds")->capture_default_str();
  synth->add_option("--noise-sd", so.noise_sd, "Noise SD in decimal-spread units")->capture_default_str();
  synth->add_option("--truth", so.truth, "linear or nonlinear_interactive")->capture_default_str();
  synth->add_option("--out", so.out, "Output CSV")->required();
  synth->add_option("--meta", so.meta, "Metadata JSON (default: <out>.meta.json)");

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Fit a model and save it as JSON");
  fit->add_option("--data", fo.data, "Training CSV")->required();
  fit->add_option("--model", fo.model, "gbm, ols, lasso or stepwise")->capture_default_str();
  fit->add_option("--params", fo.params, "Hyperparameter JSON for gbm (missing keys take the tuned defaults)");
  fit->add_flag("--tune", fo.tune, "Grid-search gbm hyperparameters by 5-fold CV first");
  fit->add_option("--grid", fo.grid, "Grid JSON for --tune (default: 243 points around the tuned defaults)");
  fit->add_option("--features", fo.features, "Comma-separated predictors (drops default interactions)");
  fit->add_option("--interactions", fo.interactions, "Interaction terms like US:GC.US, or none");
  fit->add_option("--scale", fo.scale, "Response scale: decimal or bps")->capture_default_str();
  fit->add_option("--direction", fo.direction, "Stepwise direction: forward, backward or both")
      ->capture_default_str();
  fit->add_option("--lambda", fo.lambda, "LASSO penalty (default: chosen by CV)");
  fit->add_option("--folds", fo.folds, "LASSO CV folds")->capture_default_str();
  fit->add_option("--out", fo.out, "Model JSON")->required();
  fit->add_option("--report", fo.report, "Fit report text file (default: stdout)");

  PredictOptions po;
  auto* predict = app.add_subcommand("predict", "Point predictions and prediction intervals");
  predict->add_option("--model", po.model, "Model JSON")->required();
  predict->add_option("--data", po.data, "CSV to score")->required();
  predict->add_option("--train", po.train, "Training CSV for conformal intervals");
  predict->add_option("--method", po.method, "auto, none, ols, naive, split, jackknife or jackknife_plus")
      ->capture_default_str();
  predict->add_option("--alpha", po.alpha, "Miscoverage level")->capture_default_str();
  predict->add_option("--split-ratio", po.split_ratio, "Fit fraction for split conformal")->capture_default_str();
  predict->add_option("--out", po.out, "Interval CSV")->required();
  predict->add_option("--summary", po.summary, "Coverage summary JSON");

  InterpretOptions io_;
  auto* interp = app.add_subcommand("interpret", "Importance, ALE and conditional curves");
  interp->add_option("--model", io_.model, "Model JSON")->required();
  interp->add_option("--data", io_.data, "Reference CSV (also the training set for --intervals)")->required();
  interp->add_option("--out", io_.prefix, "Output path prefix")->required();
  interp->add_flag("--importance", io_.importance, "Gain-based feature importance (gbm only)");
  interp->add_option("--ale", io_.ale, "First-order ALE for these predictors")->allow_extra_args(false);
  interp->add_option("--ale2", io_.ale2, "Second-order ALE for a predictor pair")->expected(2);
  interp->add_option("--bins", io_.bins, "Quantile bins for first-order ALE")->capture_default_str();
  interp->add_option("--bins2", io_.bins2, "Quantile bins per axis for second-order ALE")->capture_default_str();
  interp->add_option("--conditional", io_.conditional, "Conditional-mean curve over this predictor");
  interp->add_option("--scenario", io_.scenario, "Market predictor for hard/normal/soft curve families");
  interp->add_option("--grid-points", io_.grid_points, "Grid size for conditional curves")->capture_default_str();
  interp->add_option("--grid-lo", io_.grid_lo, "Grid start (default: observed minimum)");
  interp->add_option("--grid-hi", io_.grid_hi, "Grid end (default: observed maximum)");
  interp->add_flag("--intervals", io_.intervals, "Add Jackknife+ bands to conditional curves");
  interp->add_option("--alpha", io_.alpha, "Miscoverage level for --intervals")->capture_default_str();

  EvaluateOptions eo;
  auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo cross-validation across models");
  evaluate->add_option("--data", eo.data, "Bond CSV")->required();
  evaluate->add_option("--models", eo.models, "Comma-separated: gbm, stepwise, lasso, ols, mean")
      ->capture_default_str();
  evaluate->add_option("--params", eo.params, "Hyperparameter JSON for gbm");
  evaluate->add_option("--grid", eo.grid, "Per-split tuning grid JSON for gbm (default: depth only)");
  evaluate->add_flag("--no-tune", eo.no_tune, "Use the gbm hyperparameters as given in every split");
  evaluate->add_flag("--freeze-formula", eo.freeze_formula, "Select the stepwise formula once on all rows");
  evaluate->add_option("--direction", eo.direction, "Stepwise direction")->capture_default_str();
  evaluate->add_option("--splits", eo.splits, "Number of random splits")->capture_default_str();
  evaluate->add_option("--train-frac", eo.train_frac, "Training fraction per split")->capture_default_str();
  evaluate->add_option("--alpha", eo.alpha, "Miscoverage level")->capture_default_str();
  evaluate->add_option("--out", eo.out, "Report JSON")->required();
  evaluate->add_option("--rows", eo.rows, "Per-split rows CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g.threads > 0) omp_set_num_threads(g.threads);
    if (synth->parsed()) cmd_synth(so, g, out);
    if (fit->parsed()) cmd_fit(fo, g, out);
    if (predict->parsed()) cmd_predict(po, g, out);
    if (interp->parsed()) cmd_interpret(io_, g, out);
    if (evaluate->parsed()) cmd_evaluate(eo, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace spreadlab::cli
