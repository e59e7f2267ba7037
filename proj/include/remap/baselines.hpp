#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>
#include <vector>

#include "remap/dataset.hpp"
#include "remap/trainer.hpp"

namespace remap {

enum class VariogramKind { exponential, spherical, gaussian };

VariogramKind parse_variogram_kind(std::string_view name);
std::string_view to_string(VariogramKind k);

/// gamma(h) = nugget + (sill - nugget) f(h / range) for h > 0, gamma(0) = 0.
/// `sill` is the total sill, so sill >= nugget.
struct VariogramModel {
  VariogramKind kind = VariogramKind::exponential;
  double nugget = 0.0;
  double sill = 1.0;
  double range = 1.0;

  double gamma(double h) const;
  double covariance(double h) const { return sill - gamma(h); }
  void validate() const;
};

struct EmpiricalVariogram {
  std::vector<double> lag;    ///< mean pair distance per non-empty bin
  std::vector<double> gamma;  ///< half mean squared difference
  std::vector<std::size_t> pairs;
};

/// 15 equal-width bins up to half the largest pairwise distance.
EmpiricalVariogram empirical_variogram(std::span<const Measurement> data, int bins = 15);

/// Pair-count weighted least squares: nugget and partial sill by a
/// non-negative linear solve for each range on a log grid, best range kept.
/// Needs at least 10 samples.
VariogramModel fit_variogram(std::span<const Measurement> data, VariogramKind kind = VariogramKind::exponential);

struct KrigingPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Ordinary kriging with one factorization of the bordered covariance system
///   [C 1; 1^T 0] [w; mu] = [c0; 1].
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::span<const Measurement> data, const VariogramModel& model);

  KrigingPrediction predict(Point p) const;
  std::vector<KrigingPrediction> predict(std::span<const Point> pts) const;
  /// Kriging weights (size n) for prediction at p.
  Eigen::VectorXd weights(Point p) const;

  double rcond() const { return rcond_; }
  bool jittered() const { return jittered_; }
  const VariogramModel& model() const { return model_; }

 private:
  Eigen::VectorXd rhs(Point p) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  VariogramModel model_;
  std::vector<Point> pts_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd a_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double rcond_ = 0.0;
  bool jittered_ = false;
};

/// The plain network baseline: the trainer with lambda = 0 and no
/// transmitter parameters.
TrainResult fcnn_train(std::span<const Measurement> data, const TrainConfig& config);

struct LogDistanceModel {
  Point tx;
  double p0_db = 0.0;  ///< power at d0
  double eta = 0.0;
  double d0 = 1.0;
  double r_min = 1.0;

  double predict(Point p) const;
};

/// Ordinary least squares of RSSI against -10 log10(r / d0) from `assumed_tx`.
LogDistanceModel logdistance_fit(std::span<const Measurement> data, Point assumed_tx, double d0 = 1.0,
                                 double r_min = 1.0);

}  // namespace remap
