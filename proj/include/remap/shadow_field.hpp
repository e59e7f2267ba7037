#pragma once

#include <vector>

#include "remap/field_model.hpp"

namespace remap {

/// One realization of zero-mean Gaussian shadowing with covariance
/// sigma^2 exp(-d / corr_length).
///
/// Values live on a square lattice (spacing corr_length / 4, capped at 1024
/// nodes per axis) covering the domain plus a one-node margin. The lattice is
/// drawn once at construction by circulant embedding and sampled with
/// bilinear interpolation; points outside the lattice clamp to its edge.
class ShadowField {
 public:
  ShadowField(const ShadowFieldSpec& spec, const Bounds& domain);

  double sample(Point p) const;

  const ShadowFieldSpec& spec() const { return spec_; }
  double spacing() const { return spacing_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double node(std::size_t ix, std::size_t iy) const { return values_[iy * nx_ + ix]; }
  /// Most negative circulant eigenvalue that was clipped to zero, relative to
  /// the largest one. Zero when the embedding is exactly nonnegative.
  double clipped_fraction() const { return clipped_; }

 private:
  ShadowFieldSpec spec_;
  Point origin_;
  double spacing_ = 1.0;
  std::size_t nx_ = 1;
  std::size_t ny_ = 1;
  std::vector<double> values_;
  double clipped_ = 0.0;
};

double shadow_field_sample(const ShadowField& field, Point p);

/// A scene plus its domain and one shadow realization per transmitter;
/// the synthetic ground truth.
class SyntheticField {
 public:
  SyntheticField(FieldScene scene, const Bounds& domain);

  const FieldScene& scene() const { return scene_; }
  const Bounds& domain() const { return domain_; }

  /// Aggregate received power including shadowing.
  double power_db(Point p) const;
  /// Per-transmitter shadowing at p (zeros where unshadowed).
  std::vector<double> shadow_db(Point p) const;

 private:
  FieldScene scene_;
  Bounds domain_;
  std::vector<std::optional<ShadowField>> fields_;
};

}  // namespace remap
