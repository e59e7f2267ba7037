#pragma once

// Compact fully-connected regressor (x, y) -> received power (dB).
//
// Inputs are mapped affinely to [-1, 1] from a bounding box, the raw scalar
// output is de-normalized as out_mean + out_std * y. Hidden layers use
// inverted dropout: kept activations are scaled by 1 / (1 - rate).
//
// Gradients are computed by a hand-written reverse pass over a recorded
// forward (a Tape), batched with points as matrix columns.

#include <Eigen/Core>
#include <random>
#include <span>
#include <vector>

#include "remap/common.hpp"

namespace remap {

enum class Activation { tanh, relu, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

struct NetSpec {
  int input_dim = 2;
  int hidden_layers = 3;
  int hidden_width = 304;
  Activation activation = Activation::tanh;
  double dropout_rate = 0.2;
  int output_dim = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Normalization {
  Bounds input{-1.0, -1.0, 1.0, 1.0};
  double out_mean = 0.0;
  double out_std = 1.0;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  ///< out x in
  Eigen::VectorXd bias;
};

/// Gradients with the same shapes as the model layers.
struct ParamGrads {
  std::vector<DenseLayer> layers;

  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double s);
  double squared_norm() const;
};

/// Dropout masks per hidden layer (width x batch), entries 0 or 1/(1-rate).
using DropoutMasks = std::vector<Eigen::MatrixXd>;

/// Everything the reverse pass needs from one batched forward.
struct Tape {
  Eigen::Matrix2Xd input;                  ///< normalized inputs
  std::vector<Eigen::MatrixXd> activated;  ///< per hidden layer, before the mask
  DropoutMasks masks;                      ///< empty when dropout was off
  Eigen::RowVectorXd output;               ///< de-normalized predictions, dB
};

class NetModel {
 public:
  /// Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
  /// weights and biases, drawn from spec.seed.
  explicit NetModel(const NetSpec& spec);

  const NetSpec& spec() const { return spec_; }
  const Normalization& normalization() const { return norm_; }
  void set_normalization(const Normalization& n);

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  Eigen::Matrix2Xd normalize(std::span<const Point> pts) const;

  /// Deterministic (dropout off) prediction.
  double forward(Point p) const;
  double forward(Point p, bool dropout_on, std::mt19937_64& rng) const;

  /// Batched prediction; `masks` (if nonempty) must match the batch size.
  Eigen::RowVectorXd forward_batch(std::span<const Point> pts, const DropoutMasks& masks = {}) const;

  /// Forward pass that keeps intermediates for backward().
  Tape record(std::span<const Point> pts, const DropoutMasks& masks = {}) const;

  /// Reverse pass: d_output holds dL/dP (dB) per tape column; returns dL/dtheta.
  ParamGrads backward(const Tape& tape, const Eigen::RowVectorXd& d_output) const;

  ParamGrads zero_grads() const;

  /// Fresh inverted-dropout masks for a batch, drawn from rng in layer,
  /// column, row order.
  DropoutMasks sample_masks(Eigen::Index batch, std::mt19937_64& rng) const;

 private:
  NetSpec spec_;
  Normalization norm_;
  std::vector<DenseLayer> layers_;  ///< hidden layers followed by the output layer
};

/// Five-point Laplacian (f(x+h,y) + f(x-h,y) + f(x,y+h) + f(x,y-h) - 4 f) / h^2.
template <class F>
double stencil_laplacian(F&& f, Point p, double h) {
  const double c = f(p);
  return ((f(Point{p.x + h, p.y}) - c) + (f(Point{p.x - h, p.y}) - c) + (f(Point{p.x, p.y + h}) - c) +
          (f(Point{p.x, p.y - h}) - c)) /
         (h * h);
}

/// Default stencil step: 1% of the half-diagonal of the input box, i.e. 1% of
/// the normalized [-1, 1] span mapped back to meters.
double default_stencil_step(const Bounds& domain);

/// Physical-unit Laplacian (dB / m^2) of the dropout-off network.
///
/// The stencil is taken with step h in meters; because the input map is
/// affine, this equals the normalized-coordinate stencil rescaled by the
/// squared input scale.
double laplacian(const NetModel& model, Point p, double h);

/// Stencil points for a batch: column 5k + {0: center, 1: +x, 2: -x, 3: +y, 4: -y}.
std::vector<Point> stencil_points(std::span<const Point> centers, double h);

/// Combine stencil outputs laid out by stencil_points() into Laplacians.
Eigen::VectorXd stencil_combine(const Eigen::RowVectorXd& values, double h);

struct McEstimate {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
};

/// Mean and population std over `passes` dropout-on forwards seeded by `seed`.
McEstimate mc_forward(const NetModel& model, Point p, int passes, std::uint64_t seed);

}  // namespace remap
