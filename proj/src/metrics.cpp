#include "remap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace remap {

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

EvalReport evaluate(std::span<const double> pred, std::span<const double> obs) {
  if (pred.empty()) throw std::invalid_argument("evaluate: empty input");
  if (pred.size() != obs.size()) throw std::invalid_argument("evaluate: length mismatch");
  const auto n = static_cast<double>(pred.size());

  double obs_mean = 0.0;
  for (double o : obs) obs_mean += o;
  obs_mean /= n;

  double sse = 0.0, sae = 0.0, sst = 0.0;
  std::vector<double> abs_err(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - obs[i];
    sse += e * e;
    sae += std::abs(e);
    sst += (obs[i] - obs_mean) * (obs[i] - obs_mean);
    abs_err[i] = std::abs(e);
  }
  std::sort(abs_err.begin(), abs_err.end());

  EvalReport r;
  r.n = pred.size();
  r.rmse = std::sqrt(sse / n);
  r.mae = sae / n;
  r.r_squared = sst > 0.0 ? 1.0 - sse / sst : std::numeric_limits<double>::quiet_NaN();
  r.p25 = percentile_sorted(abs_err, 0.25);
  r.p50 = percentile_sorted(abs_err, 0.50);
  r.p75 = percentile_sorted(abs_err, 0.75);
  return r;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> abs_errors) {
  if (abs_errors.empty()) throw std::invalid_argument("ecdf: empty input");
  std::vector<double> v(abs_errors.begin(), abs_errors.end());
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.emplace_back(v[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

}  // namespace remap
