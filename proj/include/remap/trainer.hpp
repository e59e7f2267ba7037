#pragma once

// Joint training of the network and the unknown transmitter parameters.
//
// Each optimizer step evaluates
//
//   L_d = mean |P_pred - P_obs|                        (training sensors, dropout on)
//   L_p = mean |lap P_pred - pde_rhs(transmitters)|    (collocation points, dropout off)
//   L   = (1 - lambda) L_d + lambda L_p
//
// and updates network weights together with transmitter positions, powers
// and (optionally) eta. L_p is expressed in dB per residual_length_unit^2.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "remap/dataset.hpp"
#include "remap/field_model.hpp"
#include "remap/net.hpp"

namespace remap {

enum class CollocationMode {
  domain,   ///< fresh uniform points over the domain each step
  sensors,  ///< the training sensor locations only
};

CollocationMode parse_collocation_mode(std::string_view name);
std::string_view to_string(CollocationMode m);

struct TrainConfig {
  double lambda = 0.459;
  double learning_rate = 0.00369;
  int max_epochs = 5000;
  int batch_size = 0;  ///< 0 = full batch
  int patience = 200;  ///< epochs without val-MAE improvement before stopping; 0 disables
  double min_delta = 0.01;
  int collocation_count = 256;
  CollocationMode collocation = CollocationMode::domain;
  std::optional<Bounds> domain;  ///< collocation domain; defaults to the data bounding box
  int num_transmitters = 1;
  /// Optional starting transmitters (size num_transmitters); entries with
  /// trainable = false stay fixed. Empty = initial_transmitters().
  std::vector<Transmitter> initial_transmitters;
  PropagationParams propagation;  ///< eta, d0, r_min used by the physics kernel
  bool train_eta = false;
  bool train_transmitters = true;
  double validation_fraction = 0.2;
  double stencil_step = 0.0;  ///< m; 0 = default_stencil_step(domain)
  double residual_length_unit = 1000.0;
  NetSpec net;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double data_loss = 0.0;
  double physics_loss = 0.0;
  double total_loss = 0.0;
  double val_mae = 0.0;
};

enum class StopReason { max_epochs, early_stop };
std::string_view to_string(StopReason r);

struct TrainReport {
  std::vector<EpochRecord> history;
  std::vector<Transmitter> transmitters;  ///< final estimates
  double eta = 0.0;
  int best_epoch = 0;
  double seconds = 0.0;
  StopReason stop = StopReason::max_epochs;
};

struct TrainResult {
  NetModel model;
  std::vector<Transmitter> transmitters;
  PropagationParams propagation;
  TrainReport report;
};

/// Mean absolute error of the dropout-off model on a batch.
double data_loss(const NetModel& model, std::span<const Measurement> batch);

/// Mean |lap f - pde_rhs| (dB / m^2) over collocation points, Laplacian by
/// the five-point stencil with step h. Empty input gives 0 and a warning.
double physics_loss(const std::function<double(Point)>& field, const FieldScene& scene_estimate,
                    std::span<const Point> collocation, double h);
double physics_loss(const NetModel& model, const FieldScene& scene_estimate, std::span<const Point> collocation,
                    double h);

/// (1 - lambda) L_d + lambda L_p.
double total_loss(double ld, double lp, double lambda);

/// Transmitter initialization: positions at the M highest-RSSI samples kept
/// at least 10% of the data diagonal apart when possible, powers at the
/// maximum observation + 20 dB.
std::vector<Transmitter> initial_transmitters(std::span<const Measurement> data, int m);

/// Seeded 80/20 style split: returns (train indices, validation indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(std::size_t n, double fraction,
                                                                                    std::uint64_t seed);

/// Throws DataError for too few or coincident samples, NumericalError when a
/// loss turns non-finite.
TrainResult train(std::span<const Measurement> dataset, const TrainConfig& config);

struct RemRaster {
  Bounds bounds;
  int nx = 0;  ///< I, cells along x
  int ny = 0;  ///< J, cells along y
  std::vector<double> value;        ///< row-major from the south-west corner
  std::vector<double> std;          ///< optional per-cell uncertainty
  std::vector<unsigned char> mask;  ///< optional; 1 where std exceeds the threshold

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  Point cell_center(std::size_t k) const;
  std::vector<Point> cell_centers() const;
};

RemRaster make_raster(const Bounds& bounds, int nx, int ny);

RemRaster predict_raster(const NetModel& model, const Bounds& bounds, int nx, int ny);

/// MC-dropout standard deviation per cell; mask = std > threshold_db.
RemRaster uncertainty_raster(const NetModel& model, const Bounds& bounds, int nx, int ny, int passes = 50,
                             double threshold_db = 3.0, std::uint64_t seed = 0);

}  // namespace remap
