#include "spreadlab/synth.hpp"

#include <algorithm>
#include <cmath>

#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab {

namespace {

// Expected-loss response (bps) for EL in percentage points: slope 200 up to
// 5%, then a saturating branch with a residual slope of 40 bps per point.
double el_curve(double el) {
  if (el <= 5.0) return 200.0 * el;
  const double excess = el - 5.0;
  return 1000.0 + 210.0 * (1.0 - std::exp(-excess / 1.5)) + 40.0 * excess;
}

// Fraction of the EL premium given up by large issues; increasing in SIZE.
double size_discount(double size) { return 0.3 * std::min(size, 600.0) / 600.0; }

double nonlinear_bps(const BondRecord& x) {
  using P = Predictor;
  double s = 200.0;
  s += el_curve(x[P::EL]) * (1.0 - size_discount(x[P::SIZE]));
  s += 60.0 * (1.0 - std::exp(-x[P::PFL] / 2.0));
  s += 0.3 * std::min(x[P::SIZE], 500.0);
  s -= 3.0 * (x[P::TERM] - 37.0);
  s += x[P::TERM] < 24.0 ? 90.0 : 0.0;
  s += 15.0 * x[P::INDEM] - 175.0 * x[P::EQ] - 68.0 * x[P::SR] - 200.0 * x[P::IG];
  s += 150.0 * x[P::JP] - 100.0 * x[P::EU];
  s += 2.0 * (x[P::ROLX] - 116.0) + 12.0 * std::max(0.0, x[P::ROLX] - 120.0);
  s += 1.2 * x[P::EL] * std::max(0.0, x[P::ROLX] - 116.0);
  s += 0.3 * (x[P::BBSPR] - 600.0);
  s += 1.0 * (x[P::GC_EU] - 140.0) + 6.0 * std::max(0.0, x[P::GC_EU] - 150.0);
  s += 1.5 * (x[P::GC_GLOB] - 175.0);
  return s;
}

double linear_bps(const BondRecord& x) {
  using P = Predictor;
  double s = 620.0;
  s += 150.0 * x[P::EL] + 10.0 * x[P::PFL] + 0.1 * x[P::SIZE];
  s -= 1.5 * (x[P::TERM] - 37.0);
  s += -120.0 * x[P::EQ] - 50.0 * x[P::SR] - 100.0 * x[P::IG] - 40.0 * x[P::EU];
  s += 2.0 * (x[P::ROLX] - 116.0);
  s += 0.15 * (x[P::BBSPR] - 600.0);
  s += 0.8 * (x[P::GC_GLOB] - 175.0);
  return s;
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::string_view to_string(TruthKind kind) {
  return kind == TruthKind::Linear ? "linear" : "nonlinear_interactive";
}

TruthKind parse_truth_kind(std::string_view text) {
  if (text == "linear") return TruthKind::Linear;
  if (text == "nonlinear_interactive" || text == "nonlinear") return TruthKind::NonlinearInteractive;
  throw Error(ErrorKind::InvalidConfig, "unknown truth kind '" + std::string(text) + "'");
}

void ScenarioConfig::validate() const {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "n >= 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw Error(ErrorKind::InvalidConfig, "noise_sd >= 0");
  }
  const auto& m = marginals;
  if (!(m.el_mean_bps > m.el_median_bps && m.el_median_bps > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "EL mean must exceed its median (log-normal)");
  }
  if (!(m.size_mean > m.size_median && m.size_median > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "SIZE mean must exceed its median (log-normal)");
  }
  if (!(std::abs(m.el_pfl_log_corr) < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "EL/PFL correlation must lie in (-1, 1)");
  }
  if (m.p_us + m.p_eu + m.p_jp > 1.0 || m.p_wind + m.p_eq > 1.0) {
    throw Error(ErrorKind::InvalidConfig, "category probabilities exceed 1");
  }
}

double truth_bps(TruthKind kind, const BondRecord& x) {
  return kind == TruthKind::Linear ? linear_bps(x) : nonlinear_bps(x);
}

double GroundTruth::operator()(const BondRecord& x) const { return truth_bps(kind, x) / kBpsPerUnit; }

SyntheticSample generate(const ScenarioConfig& config) {
  config.validate();
  const auto& m = config.marginals;
  Rng rng(derive_seed(config.seed, 0));

  // Log-normal parameters from median and mean: mu = ln(median),
  // sigma^2 = 2 ln(mean / median).
  const double el_mu = std::log(m.el_median_bps);
  const double el_sigma = std::sqrt(2.0 * std::log(m.el_mean_bps / m.el_median_bps));
  const double pfl_mu = std::log(m.pfl_median_bps);
  const double size_mu = std::log(m.size_median);
  const double size_sigma = std::sqrt(2.0 * std::log(m.size_mean / m.size_median));
  const double rho = m.el_pfl_log_corr;

  SyntheticSample out;
  out.truth.kind = config.truth;
  out.data.feature_names.reserve(kNumPredictors);
  for (auto p : all_predictors()) out.data.feature_names.emplace_back(name(p));
  out.data.records.reserve(config.n);

  using P = Predictor;
  for (std::size_t i = 0; i < config.n; ++i) {
    BondRecord r;
    const double z1 = rng.normal();
    const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
    r[P::EL] = clip(std::exp(el_mu + el_sigma * z1), m.el_min_bps, m.el_max_bps) / 100.0;
    r[P::PFL] = clip(std::exp(pfl_mu + m.pfl_log_sd * z2), m.pfl_min_bps, m.pfl_max_bps) / 100.0;
    r[P::SIZE] = clip(std::exp(size_mu + size_sigma * rng.normal()), m.size_min, m.size_max);
    r[P::TERM] = clip(std::round(m.term_mean + m.term_sd * rng.normal()), m.term_min, m.term_max);

    r[P::INDEM] = rng.uniform() < m.p_indem ? 1.0 : 0.0;
    switch (rng.categorical({m.p_wind, m.p_eq, 1.0 - m.p_wind - m.p_eq})) {
      case 0: r[P::WIND] = 1.0; break;
      case 1: r[P::EQ] = 1.0; break;
      default: break;
    }
    switch (rng.categorical({m.p_us, m.p_eu, m.p_jp, 1.0 - m.p_us - m.p_eu - m.p_jp})) {
      case 0: r[P::US] = 1.0; break;
      case 1: r[P::EU] = 1.0; break;
      case 2: r[P::JP] = 1.0; break;
      default: break;
    }
    r[P::SR] = rng.uniform() < m.p_sr ? 1.0 : 0.0;
    r[P::IG] = rng.uniform() < m.p_ig ? 1.0 : 0.0;

    r[P::ROLX] = rng.uniform(m.rolx_lo, m.rolx_hi);
    r[P::BBSPR] = rng.uniform(m.bbspr_lo, m.bbspr_hi);
    r[P::GC_GLOB] = rng.uniform(m.gc_glob_lo, m.gc_glob_hi);
    r[P::GC_US] = rng.uniform(m.gc_us_lo, m.gc_us_hi);
    r[P::GC_AP] = rng.uniform(m.gc_ap_lo, m.gc_ap_hi);
    r[P::GC_EU] = rng.uniform(m.gc_eu_lo, m.gc_eu_hi);
    r[P::GC_UK] = rng.uniform(m.gc_uk_lo, m.gc_uk_hi);

    const double noise = rng.normal();
    const double truth = truth_bps(config.truth, r);
    const double spread = truth + config.noise_sd * kBpsPerUnit * noise;
    r.spread = config.noise_sd == 0.0 ? std::max(truth, kSpreadFloorBps)
                                      : std::max(spread, kSpreadFloorBps);
    out.data.records.push_back(r);
  }
  return out;
}

nlohmann::json metadata(const ScenarioConfig& config) {
  const auto& m = config.marginals;
  nlohmann::json j;
  j["generator"] = kGeneratorVersion;
  j["rng"] = kRngName;
  j["seed"] = config.seed;
  j["n"] = config.n;
  j["noise_sd"] = config.noise_sd;
  j["truth"] = to_string(config.truth);
  j["spread_floor_bps"] = kSpreadFloorBps;
  j["marginals"] = {
      {"el_median_bps", m.el_median_bps}, {"el_mean_bps", m.el_mean_bps},
      {"el_min_bps", m.el_min_bps},       {"el_max_bps", m.el_max_bps},
      {"pfl_median_bps", m.pfl_median_bps}, {"pfl_log_sd", m.pfl_log_sd},
      {"pfl_min_bps", m.pfl_min_bps},     {"pfl_max_bps", m.pfl_max_bps},
      {"el_pfl_log_corr", m.el_pfl_log_corr},
      {"size_median", m.size_median},     {"size_mean", m.size_mean},
      {"size_min", m.size_min},           {"size_max", m.size_max},
      {"term_mean", m.term_mean},         {"term_sd", m.term_sd},
      {"term_min", m.term_min},           {"term_max", m.term_max},
      {"p_us", m.p_us}, {"p_eu", m.p_eu}, {"p_jp", m.p_jp},
      {"p_wind", m.p_wind}, {"p_eq", m.p_eq}, {"p_indem", m.p_indem},
      {"p_sr", m.p_sr}, {"p_ig", m.p_ig},
      {"rolx", {m.rolx_lo, m.rolx_hi}},   {"bbspr", {m.bbspr_lo, m.bbspr_hi}},
      {"gc_glob", {m.gc_glob_lo, m.gc_glob_hi}}, {"gc_us", {m.gc_us_lo, m.gc_us_hi}},
      {"gc_ap", {m.gc_ap_lo, m.gc_ap_hi}}, {"gc_eu", {m.gc_eu_lo, m.gc_eu_hi}},
      {"gc_uk", {m.gc_uk_lo, m.gc_uk_hi}},
  };
  return j;
}

}  // namespace spreadlab
