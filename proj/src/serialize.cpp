#include "spreadlab/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spreadlab/error.hpp"

namespace spreadlab::io {

namespace {

// JSON has no NaN or infinity: NaN is written as null, infinities as strings.
json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::ParseError, "expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Eigen::VectorXd read_vec(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_num(j[i]);
  return v;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

Eigen::MatrixXd read_mat(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = read_vec(j[i]).transpose();
  return m;
}

json stats(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

template <typename F>
auto guarded(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

Predictor predictor_from(const std::string& text) {
  const auto p = parse_predictor(text);
  if (!p) throw Error(ErrorKind::UnknownPredictor, text);
  return *p;
}

}  // namespace

json to_json(const FeatureSpec& spec) {
  json j;
  j["predictors"] = json::array();
  for (auto p : spec.predictors) j["predictors"].push_back(std::string(name(p)));
  j["interactions"] = json::array();
  for (const auto& [a, b] : spec.interactions) j["interactions"].push_back({std::string(name(a)), std::string(name(b))});
  j["response_scale"] = spec.response_scale == ResponseScale::Decimal ? "decimal" : "bps";
  return j;
}

FeatureSpec feature_spec_from_json(const json& j) {
  return guarded("feature spec", [&] {
    FeatureSpec spec;
    for (const auto& p : j.at("predictors")) spec.predictors.push_back(predictor_from(p.get<std::string>()));
    for (const auto& t : j.at("interactions")) {
      spec.interactions.emplace_back(predictor_from(t.at(0).get<std::string>()),
                                     predictor_from(t.at(1).get<std::string>()));
    }
    const auto scale = j.value("response_scale", std::string("decimal"));
    if (scale != "decimal" && scale != "bps") throw Error(ErrorKind::ParseError, "response_scale " + scale);
    spec.response_scale = scale == "decimal" ? ResponseScale::Decimal : ResponseScale::BasisPoints;
    spec.validate();
    return spec;
  });
}

json to_json(const gbm::Hyperparams& hp, const std::vector<std::string>& feature_names) {
  json j;
  j["learning_rate"] = hp.learning_rate;
  j["max_depth"] = hp.max_depth;
  j["gamma"] = hp.gamma;
  j["min_child_weight"] = hp.min_child_weight;
  j["subsample"] = hp.subsample;
  j["colsample"] = hp.colsample;
  j["lambda"] = hp.lambda;
  j["nrounds"] = hp.nrounds;
  j["seed"] = hp.seed;
  j["monotone_constraints"] = hp.monotone_constraints;
  j["interaction_constraints"] = json::array();
  for (const auto& group : hp.interaction_constraints) {
    json g = json::array();
    for (auto f : group) g.push_back(f < feature_names.size() ? json(feature_names[f]) : json(f));
    j["interaction_constraints"].push_back(g);
  }
  return j;
}

gbm::Hyperparams hyperparams_from_json(const json& j, const std::vector<std::string>& feature_names,
                                       gbm::Hyperparams hp) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "hyperparameters must be a JSON object");
  const auto index_of = [&](const json& v) -> std::size_t {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (!v.is_string()) throw Error(ErrorKind::InvalidConfig, "feature reference must be a name or index");
    try {
      return gbm::feature_indices(feature_names, {v.get<std::string>()}).front();
    } catch (const Error&) {
      throw Error(ErrorKind::UnknownFeature, "no feature named '" + v.get<std::string>() + "'");
    }
  };
  return guarded("hyperparameters", [&] {
    for (const auto& [key, v] : j.items()) {
      if (key == "learning_rate" || key == "eta") {
        hp.learning_rate = v.get<double>();
      } else if (key == "max_depth") {
        hp.max_depth = v.get<int>();
      } else if (key == "gamma") {
        hp.gamma = v.get<double>();
      } else if (key == "min_child_weight") {
        hp.min_child_weight = v.get<double>();
      } else if (key == "subsample") {
        hp.subsample = v.get<double>();
      } else if (key == "colsample" || key == "colsample_bytree") {
        hp.colsample = v.get<double>();
      } else if (key == "lambda") {
        hp.lambda = v.get<double>();
      } else if (key == "nrounds") {
        hp.nrounds = v.get<int>();
      } else if (key == "seed") {
        hp.seed = v.get<std::uint64_t>();
      } else if (key == "monotone_constraints") {
        if (v.is_array()) {
          hp.monotone_constraints = v.get<std::vector<int>>();
        } else {
          hp.monotone_constraints.assign(feature_names.size(), 0);
          for (const auto& [fname, dir] : v.items()) hp.monotone_constraints[index_of(json(fname))] = dir.get<int>();
        }
      } else if (key == "interaction_constraints") {
        hp.interaction_constraints.clear();
        for (const auto& group : v) {
          std::vector<std::size_t> g;
          for (const auto& f : group) g.push_back(index_of(f));
          hp.interaction_constraints.push_back(std::move(g));
        }
      } else {
        throw Error(ErrorKind::InvalidConfig, "unknown hyperparameter '" + key + "'");
      }
    }
    return hp;
  });
}

json to_json(const gbm::Ensemble& model) {
  json j;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["feature_names"] = model.feature_names;
  j["hyperparams"] = to_json(model.hyperparams, model.feature_names);
  j["trees"] = json::array();
  for (const auto& tree : model.trees) {
    json t;
    std::vector<int> feature, left, right;
    json threshold = json::array(), gain = json::array(), weight = json::array(), cover = json::array();
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      left.push_back(node.left);
      right.push_back(node.right);
      threshold.push_back(num(node.threshold));
      gain.push_back(num(node.gain));
      weight.push_back(num(node.weight));
      cover.push_back(num(node.cover));
    }
    t["feature"] = feature;
    t["threshold"] = threshold;
    t["left"] = left;
    t["right"] = right;
    t["gain"] = gain;
    t["weight"] = weight;
    t["cover"] = cover;
    j["trees"].push_back(std::move(t));
  }
  return j;
}

gbm::Ensemble ensemble_from_json(const json& j) {
  return guarded("gbm model", [&] {
    gbm::Ensemble m;
    m.base_score = read_num(j.at("base_score"));
    m.learning_rate = read_num(j.at("learning_rate"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.hyperparams = hyperparams_from_json(j.at("hyperparams"), m.feature_names);
    for (const auto& t : j.at("trees")) {
      gbm::Tree tree;
      const auto& feature = t.at("feature");
      for (std::size_t i = 0; i < feature.size(); ++i) {
        gbm::TreeNode node;
        node.feature = feature[i].get<int>();
        node.left = t.at("left")[i].get<int>();
        node.right = t.at("right")[i].get<int>();
        node.threshold = read_num(t.at("threshold")[i]);
        node.gain = read_num(t.at("gain")[i]);
        node.weight = read_num(t.at("weight")[i]);
        node.cover = read_num(t.at("cover")[i]);
        const auto size = static_cast<int>(feature.size());
        const bool ok = node.is_leaf() ? true
                                       : node.feature < static_cast<int>(m.feature_names.size()) && node.left > 0 &&
                                             node.left < size && node.right > 0 && node.right < size;
        if (!ok) throw Error(ErrorKind::SchemaMismatch, "tree node " + std::to_string(i) + " is malformed");
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw Error(ErrorKind::SchemaMismatch, "empty tree");
      m.trees.push_back(std::move(tree));
    }
    return m;
  });
}

json to_json(const LinearModel& m) {
  json j;
  j["method"] = std::string(to_string(m.method));
  j["input_width"] = m.input_width;
  j["columns"] = m.columns;
  j["feature_names"] = m.feature_names;
  j["has_intercept"] = m.has_intercept;
  j["intercept"] = num(m.intercept);
  j["intercept_se"] = num(m.intercept_se);
  j["intercept_p"] = num(m.intercept_p);
  j["coef"] = vec(m.coef);
  j["std_err"] = vec(m.std_err);
  j["t_stat"] = vec(m.t_stat);
  j["p_value"] = vec(m.p_value);
  j["n"] = m.n;
  j["df_resid"] = m.df_resid;
  j["rss"] = num(m.rss);
  j["sigma2"] = num(m.sigma2);
  j["r2"] = num(m.r2);
  j["adj_r2"] = num(m.adj_r2);
  j["aic"] = num(m.aic);
  j["xtx_inv"] = mat(m.xtx_inv);
  j["lambda"] = m.lambda;
  j["trace"] = json::array();
  for (const auto& s : m.trace) {
    j["trace"].push_back({{"action", s.action}, {"column", s.column}, {"aic", num(s.aic)}, {"n_slopes", s.n_slopes}});
  }
  return j;
}

LinearModel linear_model_from_json(const json& j) {
  return guarded("linear model", [&] {
    LinearModel m;
    const auto method = j.at("method").get<std::string>();
    if (method == "ols") {
      m.method = FitMethod::Ols;
    } else if (method == "lasso") {
      m.method = FitMethod::Lasso;
    } else if (method == "stepwise") {
      m.method = FitMethod::Stepwise;
    } else {
      throw Error(ErrorKind::SchemaMismatch, "unknown fit method " + method);
    }
    m.input_width = j.at("input_width").get<std::size_t>();
    m.columns = j.at("columns").get<std::vector<std::size_t>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.has_intercept = j.at("has_intercept").get<bool>();
    m.intercept = read_num(j.at("intercept"));
    m.intercept_se = read_num(j.at("intercept_se"));
    m.intercept_p = read_num(j.at("intercept_p"));
    m.coef = read_vec(j.at("coef"));
    m.std_err = read_vec(j.at("std_err"));
    m.t_stat = read_vec(j.at("t_stat"));
    m.p_value = read_vec(j.at("p_value"));
    m.n = j.at("n").get<std::size_t>();
    m.df_resid = j.at("df_resid").get<std::size_t>();
    m.rss = read_num(j.at("rss"));
    m.sigma2 = read_num(j.at("sigma2"));
    m.r2 = read_num(j.at("r2"));
    m.adj_r2 = read_num(j.at("adj_r2"));
    m.aic = read_num(j.at("aic"));
    m.xtx_inv = read_mat(j.at("xtx_inv"));
    m.lambda = j.at("lambda").get<double>();
    for (const auto& s : j.at("trace")) {
      m.trace.push_back({s.at("action").get<std::string>(), s.at("column").get<std::string>(), read_num(s.at("aic")),
                         s.at("n_slopes").get<std::size_t>()});
    }
    if (m.columns.size() != static_cast<std::size_t>(m.coef.size())) {
      throw Error(ErrorKind::SchemaMismatch, "coefficient count does not match column count");
    }
    for (auto c : m.columns) {
      if (c >= m.input_width) throw Error(ErrorKind::SchemaMismatch, "column index beyond input width");
    }
    return m;
  });
}

RegressorPtr SavedModel::regressor() const {
  if (ensemble) return ensemble;
  return linear;
}

json to_json(const SavedModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = model.kind;
  j["spec"] = to_json(model.spec);
  j["model"] = model.ensemble ? to_json(*model.ensemble) : to_json(*model.linear);
  return j;
}

SavedModel saved_model_from_json(const json& j) {
  return guarded("model file", [&] {
    if (j.value("format", std::string()) != kModelFormat) {
      throw Error(ErrorKind::SchemaMismatch, "not a " + std::string(kModelFormat) + " document");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorKind::SchemaMismatch, "unsupported model version " + std::to_string(version));
    }
    SavedModel m;
    m.kind = j.at("kind").get<std::string>();
    m.spec = feature_spec_from_json(j.at("spec"));
    if (m.kind == "gbm") {
      m.ensemble = std::make_shared<const gbm::Ensemble>(ensemble_from_json(j.at("model")));
    } else if (m.kind == "linear") {
      m.linear = std::make_shared<const LinearModel>(linear_model_from_json(j.at("model")));
    } else {
      throw Error(ErrorKind::SchemaMismatch, "unknown model kind " + m.kind);
    }
    if (m.regressor()->n_features() != m.spec.width()) {
      throw Error(ErrorKind::SchemaMismatch, "model width does not match its feature spec");
    }
    return m;
  });
}

void save_model(const SavedModel& model, const std::filesystem::path& path) {
  write_text(path, to_json(model).dump(1));
}

SavedModel load_model(const std::filesystem::path& path) { return saved_model_from_json(read_json(path)); }

json to_json(const PredictionInterval& pi) {
  return {{"point", num(pi.point)},
          {"lower", num(pi.lower)},
          {"upper", num(pi.upper)},
          {"alpha", pi.alpha},
          {"method", std::string(to_string(pi.method))}};
}

PredictionInterval interval_from_json(const json& j) {
  return guarded("interval", [&] {
    PredictionInterval pi;
    pi.point = read_num(j.at("point"));
    pi.lower = read_num(j.at("lower"));
    pi.upper = read_num(j.at("upper"));
    pi.alpha = j.at("alpha").get<double>();
    const auto m = j.at("method").get<std::string>();
    bool found = false;
    for (auto k : {IntervalMethod::Naive, IntervalMethod::Split, IntervalMethod::Jackknife,
                   IntervalMethod::JackknifePlus, IntervalMethod::OlsNormal}) {
      if (m == to_string(k)) {
        pi.method = k;
        found = true;
      }
    }
    if (!found) throw Error(ErrorKind::ParseError, "unknown interval method " + m);
    return pi;
  });
}

json to_json(const eval::CVReport& report) {
  json j;
  j["n_splits"] = report.config.n_splits;
  j["train_frac"] = report.config.train_frac;
  j["alpha"] = report.config.alpha;
  j["seed"] = report.config.seed;
  j["complete"] = report.complete;
  j["models"] = json::array();
  for (const auto& m : report.models) {
    j["models"].push_back({{"model", m.model},
                           {"completed", m.completed},
                           {"failed", m.failed},
                           {"mean_mse", num(m.mean_mse)},
                           {"sd_mse", num(m.sd_mse)},
                           {"mean_coverage", num(m.mean_coverage)},
                           {"sd_coverage", num(m.sd_coverage)},
                           {"mean_length_bps", num(m.mean_length_bps)},
                           {"sd_length_bps", num(m.sd_length_bps)},
                           {"splits_below_1_minus_2alpha", m.below_bound}});
  }
  j["failures"] = json::array();
  for (const auto& r : report.rows) {
    if (!r.ok) j["failures"].push_back({{"split", r.split}, {"model", r.model}, {"error", r.error}});
  }
  return j;
}

json to_json(const eval::GridResult& result, const std::vector<std::string>& feature_names) {
  json j;
  j["best"] = to_json(result.best, feature_names);
  j["best_index"] = result.best_index;
  j["best_cv_mse"] = num(result.best_mse);
  j["table"] = json::array();
  for (const auto& row : result.table) {
    j["table"].push_back({{"hyperparams", to_json(row.hp, feature_names)}, {"cv_mse", num(row.cv_mse)}});
  }
  return j;
}

json to_json(const interpret::ImportanceReport& report) {
  json j;
  j["no_splits"] = report.no_splits;
  j["features"] = json::array();
  for (const auto& e : report.ranked()) {
    j["features"].push_back({{"feature", e.feature}, {"gain", num(e.gain)}, {"share", num(e.share)}, {"rank", e.rank}});
  }
  return j;
}

json to_json(const interpret::AleCurve& curve) {
  return {{"feature", std::string(name(curve.feature))},
          {"edges", stats(curve.edges)},
          {"effects", stats(curve.effects)},
          {"counts", curve.counts}};
}

json to_json(const interpret::AleSurface& s) {
  json counts = json::array();
  for (Eigen::Index i = 0; i < s.counts.rows(); ++i) {
    std::vector<int> row;
    for (Eigen::Index k = 0; k < s.counts.cols(); ++k) row.push_back(s.counts(i, k));
    counts.push_back(row);
  }
  return {{"feature_a", std::string(name(s.feature_a))},
          {"feature_b", std::string(name(s.feature_b))},
          {"edges_a", stats(s.edges_a)},
          {"edges_b", stats(s.edges_b)},
          {"effects", mat(s.effects)},
          {"counts", counts}};
}

json to_json(const interpret::ConditionalCurve& c) {
  json j;
  j["feature"] = std::string(name(c.feature));
  j["grid"] = stats(c.grid);
  j["point"] = stats(c.point);
  j["extrapolated"] = c.extrapolated;
  j["intervals"] = json::array();
  for (const auto& pi : c.intervals) j["intervals"].push_back(to_json(pi));
  if (c.scenario_feature) {
    j["scenario"] = {{"feature", std::string(name(*c.scenario_feature))},
                     {"value", num(*c.scenario_value)},
                     {"label", c.scenario_label}};
  }
  json profile;
  for (auto p : all_predictors()) profile[std::string(name(p))] = num(c.profile[p]);
  j["profile"] = profile;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw Error(ErrorKind::Io, "write to " + path.string() + " failed");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace spreadlab::io
