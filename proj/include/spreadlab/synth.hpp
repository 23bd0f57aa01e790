#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "spreadlab/data.hpp"

namespace spreadlab {

inline constexpr std::string_view kGeneratorVersion = "spreadlab-synth/1";
inline constexpr double kSpreadFloorBps = 66.0;

enum class TruthKind { Linear, NonlinearInteractive };

std::string_view to_string(TruthKind kind);
TruthKind parse_truth_kind(std::string_view text);

/// Marginal targets. Defaults are the sample statistics of the 765-bond
/// primary-market sample; see docs/synthetic_truth.md for the derivation.
struct Marginals {
  // Expected loss and probability of first loss, in basis points.
  double el_median_bps = 160.0;
  double el_mean_bps = 244.01;
  double el_min_bps = 1.0;
  double el_max_bps = 1484.0;
  double pfl_median_bps = 350.0;
  double pfl_log_sd = 0.8;
  double pfl_min_bps = 1.0;
  double pfl_max_bps = 4000.0;
  double el_pfl_log_corr = 0.95;

  double size_median = 100.0;
  double size_mean = 134.48;
  double size_min = 1.8;
  double size_max = 1500.0;

  double term_mean = 37.36;
  double term_sd = 12.13;
  double term_min = 5.0;
  double term_max = 73.0;

  // Territory: multi-territory/other is the reference level.
  double p_us = 0.5935;
  double p_eu = 0.0667;
  double p_jp = 0.0641;
  // Peril: multi-peril/other is the reference level.
  double p_wind = 0.2157;
  double p_eq = 0.1582;
  double p_indem = 0.4275;
  double p_sr = 0.3307;
  double p_ig = 0.05;

  // Market index ranges (uniform draws).
  double rolx_lo = 82.0, rolx_hi = 150.0;
  double bbspr_lo = 200.0, bbspr_hi = 1000.0;
  double gc_glob_lo = 100.0, gc_glob_hi = 250.0;
  double gc_us_lo = 120.0, gc_us_hi = 300.0;
  double gc_ap_lo = 100.0, gc_ap_hi = 300.0;
  double gc_eu_lo = 90.0, gc_eu_hi = 190.0;
  double gc_uk_lo = 80.0, gc_uk_hi = 160.0;
};

struct ScenarioConfig {
  std::size_t n = 765;
  std::uint64_t seed = 1;
  /// Standard deviation of the additive Gaussian noise, decimal-spread units.
  double noise_sd = 0.010;
  TruthKind truth = TruthKind::NonlinearInteractive;
  Marginals marginals{};

  void validate() const;
};

/// The noiseless spread function the generator samples around. Values are
/// decimal fractions of notional (bps / 10000).
struct GroundTruth {
  TruthKind kind = TruthKind::NonlinearInteractive;

  double operator()(const BondRecord& x) const;
  double bps(const BondRecord& x) const { return (*this)(x) * kBpsPerUnit; }
};

/// Ground-truth spread in basis points.
double truth_bps(TruthKind kind, const BondRecord& x);

struct SyntheticSample {
  Dataset data;
  GroundTruth truth;
};

SyntheticSample generate(const ScenarioConfig& config);

/// Sidecar metadata: seed, config, generator version and RNG identity.
nlohmann::json metadata(const ScenarioConfig& config);

}  // namespace spreadlab
