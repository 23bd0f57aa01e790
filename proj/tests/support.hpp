#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>
#include <doctest.h>

#include "spreadlab/error.hpp"
#include "spreadlab/random.hpp"

namespace spreadlab::testing {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double lo = 0.0,
                                      double hi = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.uniform(lo, hi);
  }
  return X;
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = sd * rng.normal();
  return v;
}

/// Kind of the spreadlab::Error thrown by f, or "none".
inline std::string error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return std::string(to_string(e.kind()));
  }
  return "none";
}

inline std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace spreadlab::testing
