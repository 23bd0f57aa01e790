#pragma once

#include <string_view>

namespace spreadlab {

enum class IntervalMethod { Naive, Split, Jackknife, JackknifePlus, OlsNormal };

std::string_view to_string(IntervalMethod method);

/// Bounds may be infinite when the residual quantile overflows.
struct PredictionInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  IntervalMethod method = IntervalMethod::Naive;

  double width() const { return upper - lower; }
  bool contains(double y) const { return lower <= y && y <= upper; }
};

}  // namespace spreadlab
