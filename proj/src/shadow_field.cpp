#include "remap/shadow_field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <random>

namespace remap {

namespace {

constexpr std::size_t kMaxNodes = 1024;

// Forward 2D DFT, row-major with `cols` fastest.
void dft2(std::vector<std::complex<double>>& data, std::size_t rows, std::size_t cols) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

}  // namespace

ShadowField::ShadowField(const ShadowFieldSpec& spec, const Bounds& domain) : spec_(spec) {
  spec.validate();
  if (domain.degenerate()) throw std::invalid_argument("shadow field needs a nondegenerate domain");

  spacing_ = spec.corr_length / 4.0;
  const double extent = std::max(domain.width(), domain.height());
  if (extent / spacing_ + 3.0 > static_cast<double>(kMaxNodes)) spacing_ = extent / static_cast<double>(kMaxNodes - 3);
  origin_ = {domain.xmin - spacing_, domain.ymin - spacing_};
  nx_ = static_cast<std::size_t>(std::ceil(domain.width() / spacing_)) + 3;
  ny_ = static_cast<std::size_t>(std::ceil(domain.height() / spacing_)) + 3;
  values_.assign(nx_ * ny_, 0.0);
  if (spec.sigma_db == 0.0) return;

  // Embedding torus: at least twice the lattice plus a few correlation lengths
  // so the wrapped exponential stays close to nonnegative definite.
  const auto pad = static_cast<std::size_t>(std::ceil(2.0 * spec.corr_length / spacing_));
  const std::size_t mx = 2 * (nx_ + pad);
  const std::size_t my = 2 * (ny_ + pad);
  const double var = spec.sigma_db * spec.sigma_db;

  std::vector<std::complex<double>> buf(mx * my);
  for (std::size_t iy = 0; iy < my; ++iy) {
    const double dy = static_cast<double>(std::min(iy, my - iy)) * spacing_;
    for (std::size_t ix = 0; ix < mx; ++ix) {
      const double dx = static_cast<double>(std::min(ix, mx - ix)) * spacing_;
      buf[iy * mx + ix] = var * std::exp(-std::hypot(dx, dy) / spec.corr_length);
    }
  }
  dft2(buf, my, mx);

  double lmax = 0.0;
  double lneg = 0.0;
  for (const auto& v : buf) {
    lmax = std::max(lmax, v.real());
    lneg = std::min(lneg, v.real());
  }
  clipped_ = lmax > 0.0 ? -lneg / lmax : 0.0;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const double norm = 1.0 / static_cast<double>(mx * my);
  for (auto& v : buf) {
    const double lambda = std::max(v.real(), 0.0);
    const double s = std::sqrt(lambda * norm);
    const double re = normal(rng);
    const double im = normal(rng);
    v = {s * re, s * im};
  }
  dft2(buf, my, mx);

  for (std::size_t iy = 0; iy < ny_; ++iy)
    for (std::size_t ix = 0; ix < nx_; ++ix) values_[iy * nx_ + ix] = buf[iy * mx + ix].real();
}

double ShadowField::sample(Point p) const {
  if (spec_.sigma_db == 0.0) return 0.0;
  const double fx = std::clamp((p.x - origin_.x) / spacing_, 0.0, static_cast<double>(nx_ - 1));
  const double fy = std::clamp((p.y - origin_.y) / spacing_, 0.0, static_cast<double>(ny_ - 1));
  const auto ix = std::min(static_cast<std::size_t>(fx), nx_ - 2);
  const auto iy = std::min(static_cast<std::size_t>(fy), ny_ - 2);
  const double tx = fx - static_cast<double>(ix);
  const double ty = fy - static_cast<double>(iy);
  const double v00 = node(ix, iy);
  const double v10 = node(ix + 1, iy);
  const double v01 = node(ix, iy + 1);
  const double v11 = node(ix + 1, iy + 1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

double shadow_field_sample(const ShadowField& field, Point p) { return field.sample(p); }

SyntheticField::SyntheticField(FieldScene scene, const Bounds& domain) : scene_(std::move(scene)), domain_(domain) {
  scene_.validate();
  fields_.resize(scene_.size());
  for (std::size_t i = 0; i < scene_.shadow.size(); ++i)
    if (scene_.shadow[i] && scene_.shadow[i]->sigma_db > 0.0) fields_[i].emplace(*scene_.shadow[i], domain_);
}

std::vector<double> SyntheticField::shadow_db(Point p) const {
  std::vector<double> z(scene_.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i)
    if (fields_[i]) z[i] = fields_[i]->sample(p);
  return z;
}

double SyntheticField::power_db(Point p) const { return total_power_db(scene_, p, shadow_db(p)); }

}  // namespace remap
