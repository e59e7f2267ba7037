#include "remap/baselines.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace remap {

VariogramKind parse_variogram_kind(std::string_view name) {
  if (name == "exponential") return VariogramKind::exponential;
  if (name == "spherical") return VariogramKind::spherical;
  if (name == "gaussian") return VariogramKind::gaussian;
  throw std::invalid_argument("unknown variogram kind: " + std::string(name));
}

std::string_view to_string(VariogramKind k) {
  switch (k) {
    case VariogramKind::exponential: return "exponential";
    case VariogramKind::spherical: return "spherical";
    case VariogramKind::gaussian: return "gaussian";
  }
  return "exponential";
}

namespace {

double shape(VariogramKind kind, double t) {
  switch (kind) {
    case VariogramKind::exponential: return 1.0 - std::exp(-t);
    case VariogramKind::spherical: return t >= 1.0 ? 1.0 : 1.5 * t - 0.5 * t * t * t;
    case VariogramKind::gaussian: return 1.0 - std::exp(-t * t);
  }
  return 0.0;
}

}  // namespace

double VariogramModel::gamma(double h) const {
  if (h <= 0.0) return 0.0;
  return nugget + (sill - nugget) * shape(kind, h / range);
}

void VariogramModel::validate() const {
  if (!(nugget >= 0.0)) throw std::invalid_argument("variogram nugget must be >= 0");
  if (!(sill > 0.0) || sill < nugget) throw std::invalid_argument("variogram sill must be positive and >= nugget");
  if (!(range > 0.0) || !std::isfinite(range)) throw std::invalid_argument("variogram range must be positive");
}

EmpiricalVariogram empirical_variogram(std::span<const Measurement> data, int bins) {
  if (bins < 1) throw std::invalid_argument("empirical_variogram: bins must be >= 1");
  const std::size_t n = data.size();
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dmax = std::max(dmax, distance(data[i].location, data[j].location));
  const double cutoff = 0.5 * dmax;
  std::vector<double> lag_sum(bins, 0.0), g_sum(bins, 0.0);
  std::vector<std::size_t> cnt(bins, 0);
  if (cutoff > 0.0) {
    const double width = cutoff / bins;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = distance(data[i].location, data[j].location);
        if (d > cutoff || d <= 0.0) continue;
        const int b = std::min(bins - 1, static_cast<int>(d / width));
        const double diff = data[i].rssi_db - data[j].rssi_db;
        lag_sum[b] += d;
        g_sum[b] += 0.5 * diff * diff;
        ++cnt[b];
      }
  }
  EmpiricalVariogram ev;
  for (int b = 0; b < bins; ++b)
    if (cnt[b] > 0) {
      ev.lag.push_back(lag_sum[b] / static_cast<double>(cnt[b]));
      ev.gamma.push_back(g_sum[b] / static_cast<double>(cnt[b]));
      ev.pairs.push_back(cnt[b]);
    }
  return ev;
}

VariogramModel fit_variogram(std::span<const Measurement> data, VariogramKind kind) {
  if (data.size() < 10)
    throw DataError("fit_variogram needs at least 10 samples, got " + std::to_string(data.size()));
  const EmpiricalVariogram ev = empirical_variogram(data);
  if (ev.lag.empty()) throw DataError("fit_variogram: all samples share one location");

  const double max_lag = *std::max_element(ev.lag.begin(), ev.lag.end());
  const double min_lag = *std::min_element(ev.lag.begin(), ev.lag.end());
  constexpr double kSillFloor = 1e-12;

  VariogramModel best{kind, 0.0, kSillFloor, max_lag};
  double best_sse = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 200;
  const double lo = std::log(0.1 * min_lag), hi = std::log(10.0 * max_lag);
  for (int g = 0; g < kGrid; ++g) {
    const double a = std::exp(lo + (hi - lo) * g / (kGrid - 1));
    // Weighted normal equations for gamma = c0 + c1 f.
    double s11 = 0, s1f = 0, sff = 0, s1y = 0, sfy = 0;
    for (std::size_t k = 0; k < ev.lag.size(); ++k) {
      const double w = static_cast<double>(ev.pairs[k]);
      const double f = shape(kind, ev.lag[k] / a);
      const double y = ev.gamma[k];
      s11 += w;
      s1f += w * f;
      sff += w * f * f;
      s1y += w * y;
      sfy += w * f * y;
    }
    auto sse = [&](double c0, double c1) {
      double s = 0.0;
      for (std::size_t k = 0; k < ev.lag.size(); ++k) {
        const double r = ev.gamma[k] - c0 - c1 * shape(kind, ev.lag[k] / a);
        s += static_cast<double>(ev.pairs[k]) * r * r;
      }
      return s;
    };
    // Candidates: unconstrained, nugget only, partial sill only.
    std::vector<std::pair<double, double>> cands{{std::max(0.0, s1y / s11), 0.0}};
    if (sff > 0.0) cands.emplace_back(0.0, std::max(0.0, sfy / sff));
    const double det = s11 * sff - s1f * s1f;
    if (det > 1e-12 * s11 * sff) {
      const double c0 = (sff * s1y - s1f * sfy) / det;
      const double c1 = (s11 * sfy - s1f * s1y) / det;
      if (c0 >= 0.0 && c1 >= 0.0) cands.emplace_back(c0, c1);
    }
    for (const auto& [c0, c1] : cands) {
      const double e = sse(c0, c1);
      if (e < best_sse) {
        best_sse = e;
        best = {kind, c0, std::max(c0 + c1, kSillFloor), a};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

OrdinaryKriging::OrdinaryKriging(std::span<const Measurement> data, const VariogramModel& model)
    : model_(model), pts_(locations(data)) {
  model.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n < 1) throw DataError("kriging needs at least one sample");
  z_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) z_(i) = data[static_cast<std::size_t>(i)].rssi_db;
  for (std::size_t i = 0; i < pts_.size(); ++i)
    for (std::size_t j = i + 1; j < pts_.size(); ++j)
      if (pts_[i] == pts_[j]) throw DataError("kriging needs pairwise distinct sample locations");

  Eigen::MatrixXd a(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = model.covariance(0.0);
    for (Eigen::Index j = i + 1; j < n; ++j)
      a(i, j) = a(j, i) = model.covariance(distance(pts_[static_cast<std::size_t>(i)], pts_[static_cast<std::size_t>(j)]));
    a(i, n) = a(n, i) = 1.0;
  }
  a(n, n) = 0.0;

  a_ = a;
  lu_.compute(a);
  rcond_ = lu_.rcond();
  if (!(rcond_ > 1e-14)) {
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += 1e-10 * model.sill;
    lu_.compute(a);
    rcond_ = lu_.rcond();
    jittered_ = true;
  }
  if (!(rcond_ > 1e-16)) {
    std::ostringstream msg;
    msg << "kriging system is singular (reciprocal condition estimate " << rcond_ << ")";
    throw NumericalError(msg.str());
  }
}

Eigen::VectorXd OrdinaryKriging::rhs(Point p) const {
  const auto n = static_cast<Eigen::Index>(pts_.size());
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = model_.covariance(distance(p, pts_[static_cast<std::size_t>(i)]));
  b(n) = 1.0;
  return b;
}

// Iterative refinement against the unjittered system, with the (possibly
// jittered) LU as preconditioner. Ill-conditioned covariance matrices lose
// several digits in a plain solve.
Eigen::VectorXd OrdinaryKriging::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = lu_.solve(b);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 20; ++it) {
    const Eigen::VectorXd r = b - a_ * x;
    const double norm = r.lpNorm<Eigen::Infinity>();
    if (!(norm < prev) || norm == 0.0) break;
    prev = norm;
    x += lu_.solve(r);
  }
  return x;
}

KrigingPrediction OrdinaryKriging::predict(Point p) const {
  const auto n = static_cast<Eigen::Index>(pts_.size());
  const Eigen::VectorXd b = rhs(p);
  const Eigen::VectorXd sol = solve(b);
  KrigingPrediction out;
  out.mean = sol.head(n).dot(z_);
  out.variance = std::max(0.0, model_.covariance(0.0) - sol.head(n).dot(b.head(n)) - sol(n));
  return out;
}

std::vector<KrigingPrediction> OrdinaryKriging::predict(std::span<const Point> pts) const {
  std::vector<KrigingPrediction> out;
  out.reserve(pts.size());
  for (const Point& p : pts) out.push_back(predict(p));
  return out;
}

Eigen::VectorXd OrdinaryKriging::weights(Point p) const {
  return solve(rhs(p)).head(static_cast<Eigen::Index>(pts_.size()));
}

// ---------------------------------------------------------------------------

TrainResult fcnn_train(std::span<const Measurement> data, const TrainConfig& config) {
  TrainConfig c = config;
  c.lambda = 0.0;
  c.train_transmitters = false;
  c.train_eta = false;
  return train(data, c);
}

double LogDistanceModel::predict(Point p) const {
  const double r = std::max(distance(p, tx), r_min);
  return p0_db - 10.0 * eta * std::log10(r / d0);
}

LogDistanceModel logdistance_fit(std::span<const Measurement> data, Point assumed_tx, double d0, double r_min) {
  if (data.size() < 3) throw DataError("logdistance_fit needs at least 3 samples");
  if (!(d0 > 0.0) || !(r_min > 0.0)) throw std::invalid_argument("logdistance_fit: d0 and r_min must be positive");
  const double n = static_cast<double>(data.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> xs;
  for (const auto& m : data) {
    xs.push_back(-10.0 * std::log10(std::max(distance(m.location, assumed_tx), r_min) / d0));
    mx += xs.back();
    my += m.rssi_db;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (data[i].rssi_db - my);
  }
  if (!(sxx > 1e-12 * n)) throw DataError("logdistance_fit: samples lie at (nearly) one distance from the transmitter");
  LogDistanceModel m;
  m.tx = assumed_tx;
  m.eta = sxy / sxx;
  m.p0_db = my - m.eta * mx;
  m.d0 = d0;
  m.r_min = r_min;
  return m;
}

}  // namespace remap
