#pragma once

#include <span>
#include <utility>
#include <vector>

namespace remap {

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double r_squared = 0.0;  ///< NaN when the observations have zero variance
  double p25 = 0.0;        ///< percentiles of |error|
  double p50 = 0.0;
  double p75 = 0.0;
  std::size_t n = 0;
};

/// Throws std::invalid_argument on empty or mismatched inputs.
EvalReport evaluate(std::span<const double> pred, std::span<const double> obs);

/// Percentile (q in [0, 1]) of sorted data, linear interpolation between
/// closest ranks: position q (n - 1).
double percentile_sorted(std::span<const double> sorted, double q);

/// Right-continuous empirical CDF: one (value, fraction <= value) pair per
/// distinct value, ascending, ending at 1.
std::vector<std::pair<double, double>> ecdf(std::span<const double> abs_errors);

}  // namespace remap
