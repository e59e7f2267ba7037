#pragma once

// Closed-form multi-transmitter log-distance propagation in the dB domain.
//
// Each transmitter i contributes the exponent
//
//   a_i(p) = (P_T,i - 10 eta log10(r_i / d0) + Z_i(p)) / 10
//
// so that its linear power is 10^a_i. Powers add in the linear domain and
// the total is 10 log10(sum_i 10^a_i). The Laplacian of that total is
//
//   10 sum_i w_i lap(a_i) + 10 ln10 (sum_i w_i |grad a_i|^2 - |sum_i w_i grad a_i|^2)
//
// with softmax weights w_i = 10^a_i / sum_j 10^a_j. pde_rhs() evaluates this
// with the shadowing term held at zero, where lap(a_i) vanishes.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "remap/common.hpp"

namespace remap {

inline constexpr double kLn10 = 2.302585092994045684;

struct Transmitter {
  Point position;
  double power_db = 0.0;  ///< transmit power referenced to d0
  bool trainable = true;
};

struct PropagationParams {
  double eta = 3.0;    ///< path-loss exponent
  double d0 = 1.0;     ///< reference distance, m
  double r_min = 1.0;  ///< distances are clamped to at least this, m

  void validate() const;
};

struct ShadowFieldSpec {
  double sigma_db = 0.0;
  double corr_length = 500.0;  ///< e-folding distance of the correlation, m
  std::uint64_t seed = 0;

  void validate() const;
};

struct FieldScene {
  std::vector<Transmitter> transmitters;
  PropagationParams params;
  /// Empty, or one entry per transmitter (nullopt = no shadowing).
  std::vector<std::optional<ShadowFieldSpec>> shadow;

  std::size_t size() const { return transmitters.size(); }
  void validate() const;
};

using Vec2 = std::array<double, 2>;

double db_to_linear(double p_db);
/// Throws std::domain_error for s <= 0.
double linear_to_db(double s);

/// Euclidean distance from transmitter i, clamped below at r_min.
double clamped_distance(const FieldScene& scene, std::size_t i, Point p);

double exponent_term(const FieldScene& scene, std::size_t i, Point p, double shadow_db = 0.0);

/// Softmax in base 10 with max-shift: w_i = 10^a_i / sum_j 10^a_j.
std::vector<double> weights_from_exponents(std::span<const double> a);

/// Shadow-free weights at p.
std::vector<double> weights(const FieldScene& scene, Point p);

/// 10 log10(sum_i 10^a_i), evaluated as a base-10 log-sum-exp.
double log_sum_db(std::span<const double> a);

/// Shadow-free aggregate power at p.
double total_power_db(const FieldScene& scene, Point p);

/// Aggregate power with per-transmitter shadowing values (dB) at p.
double total_power_db(const FieldScene& scene, Point p, std::span<const double> shadow_db);

/// Shadow-free gradient of a_i: -(eta / ln10) (p - p_i) / r_i^2 with r_i clamped.
Vec2 grad_a(const FieldScene& scene, std::size_t i, Point p);

/// Shadow-free Laplacian of a_i. log r is harmonic in the plane, so this is
/// zero wherever r_i > r_min; inside the clamp disc a_i is constant and the
/// Laplacian is zero there as well.
double laplacian_a(const FieldScene& scene, std::size_t i, Point p);

/// Exact Laplacian (dB / m^2) of the shadow-free aggregate power.
double pde_rhs(const FieldScene& scene, Point p);

/// Partial derivatives of pde_rhs with respect to the transmitter parameters.
struct PdeRhsGradient {
  double value = 0.0;
  std::vector<double> d_power;  ///< d rhs / d P_T,i
  std::vector<Vec2> d_position;  ///< d rhs / d (x_i, y_i)
  double d_eta = 0.0;
};

PdeRhsGradient pde_rhs_with_gradient(const FieldScene& scene, Point p);

}  // namespace remap
