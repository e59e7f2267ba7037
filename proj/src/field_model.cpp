#include "remap/field_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace remap {

void PropagationParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
  if (!(d0 > 0.0) || !std::isfinite(d0)) throw std::invalid_argument("d0 must be positive");
  if (!(r_min > 0.0) || r_min < d0 / 100.0) throw std::invalid_argument("r_min must be positive and >= d0/100");
}

void ShadowFieldSpec::validate() const {
  if (!(sigma_db >= 0.0) || !std::isfinite(sigma_db)) throw std::invalid_argument("sigma_db must be >= 0");
  if (!(corr_length > 0.0) || !std::isfinite(corr_length)) throw std::invalid_argument("corr_length must be > 0");
}

void FieldScene::validate() const {
  if (transmitters.empty()) throw std::invalid_argument("scene needs at least one transmitter");
  params.validate();
  for (const auto& t : transmitters) {
    if (!std::isfinite(t.power_db) || !std::isfinite(t.position.x) || !std::isfinite(t.position.y))
      throw std::invalid_argument("transmitter fields must be finite");
  }
  if (!shadow.empty() && shadow.size() != transmitters.size())
    throw std::invalid_argument("shadow list must be empty or match the transmitter count");
  for (const auto& s : shadow)
    if (s) s->validate();
}

double db_to_linear(double p_db) { return std::pow(10.0, p_db / 10.0); }

double linear_to_db(double s) {
  if (!(s > 0.0)) throw std::domain_error("linear_to_db: input must be positive");
  return 10.0 * std::log10(s);
}

double clamped_distance(const FieldScene& scene, std::size_t i, Point p) {
  return std::max(distance(p, scene.transmitters[i].position), scene.params.r_min);
}

double exponent_term(const FieldScene& scene, std::size_t i, Point p, double shadow_db) {
  const auto& prm = scene.params;
  const double r = clamped_distance(scene, i, p);
  return 0.1 * (scene.transmitters[i].power_db - 10.0 * prm.eta * std::log10(r / prm.d0) + shadow_db);
}

std::vector<double> weights_from_exponents(std::span<const double> a) {
  const double amax = *std::max_element(a.begin(), a.end());
  std::vector<double> w(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    w[i] = std::pow(10.0, a[i] - amax);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

namespace {

std::vector<double> shadow_free_exponents(const FieldScene& scene, Point p) {
  std::vector<double> a(scene.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = exponent_term(scene, i, p);
  return a;
}

}  // namespace

std::vector<double> weights(const FieldScene& scene, Point p) {
  return weights_from_exponents(shadow_free_exponents(scene, p));
}

double log_sum_db(std::span<const double> a) {
  const double amax = *std::max_element(a.begin(), a.end());
  double sum = 0.0;
  for (double v : a) sum += std::pow(10.0, v - amax);
  return 10.0 * (amax + std::log10(sum));
}

double total_power_db(const FieldScene& scene, Point p) { return log_sum_db(shadow_free_exponents(scene, p)); }

double total_power_db(const FieldScene& scene, Point p, std::span<const double> shadow_db) {
  if (shadow_db.size() != scene.size()) throw std::invalid_argument("one shadow value per transmitter required");
  std::vector<double> a(scene.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = exponent_term(scene, i, p, shadow_db[i]);
  return log_sum_db(a);
}

Vec2 grad_a(const FieldScene& scene, std::size_t i, Point p) {
  const Point q = scene.transmitters[i].position;
  const double r = clamped_distance(scene, i, p);
  const double k = scene.params.eta / kLn10;
  return {-k * (p.x - q.x) / (r * r), -k * (p.y - q.y) / (r * r)};
}

double laplacian_a(const FieldScene&, std::size_t, Point) { return 0.0; }

double pde_rhs(const FieldScene& scene, Point p) {
  const auto w = weights(scene, p);
  double mean_sq = 0.0;
  Vec2 mean{0.0, 0.0};
  double lap = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec2 g = grad_a(scene, i, p);
    mean_sq += w[i] * (g[0] * g[0] + g[1] * g[1]);
    mean[0] += w[i] * g[0];
    mean[1] += w[i] * g[1];
    lap += w[i] * laplacian_a(scene, i, p);
  }
  return 10.0 * lap + 10.0 * kLn10 * (mean_sq - (mean[0] * mean[0] + mean[1] * mean[1]));
}

PdeRhsGradient pde_rhs_with_gradient(const FieldScene& scene, Point p) {
  const std::size_t m = scene.size();
  const auto& prm = scene.params;
  const double k = prm.eta / kLn10;

  std::vector<double> a(m);
  std::vector<double> r(m);
  std::vector<Vec2> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = exponent_term(scene, i, p);
    r[i] = clamped_distance(scene, i, p);
    g[i] = grad_a(scene, i, p);
  }
  const auto w = weights_from_exponents(a);

  Vec2 gbar{0.0, 0.0};
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    gbar[0] += w[i] * g[i][0];
    gbar[1] += w[i] * g[i][1];
    mean_sq += w[i] * (g[i][0] * g[i][0] + g[i][1] * g[i][1]);
  }

  // c_i = |g_i|^2 - 2 gbar.g_i is d(rhs / (10 ln10)) / d w_i with g held fixed.
  std::vector<double> c(m);
  double cbar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    c[i] = g[i][0] * g[i][0] + g[i][1] * g[i][1] - 2.0 * (gbar[0] * g[i][0] + gbar[1] * g[i][1]);
    cbar += w[i] * c[i];
  }

  PdeRhsGradient out;
  const double scale = 10.0 * kLn10;
  out.value = scale * (mean_sq - (gbar[0] * gbar[0] + gbar[1] * gbar[1]));
  out.d_power.resize(m);
  out.d_position.resize(m);

  for (std::size_t i = 0; i < m; ++i) {
    const double softmax_term = kLn10 * w[i] * (c[i] - cbar);  // times da_i
    out.d_power[i] = scale * softmax_term * 0.1;

    const Vec2 dev{g[i][0] - gbar[0], g[i][1] - gbar[1]};
    const Point q = scene.transmitters[i].position;
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    const bool clamped = std::hypot(dx, dy) < prm.r_min;
    const double r2 = r[i] * r[i];

    // d g_i / d p_i, symmetric.
    double jxx = k / r2, jyy = k / r2, jxy = 0.0;
    Vec2 da_dpos{0.0, 0.0};
    if (!clamped) {
      const double r4 = r2 * r2;
      jxx -= 2.0 * k * dx * dx / r4;
      jyy -= 2.0 * k * dy * dy / r4;
      jxy = -2.0 * k * dx * dy / r4;
      da_dpos = {-g[i][0], -g[i][1]};
    }
    out.d_position[i][0] = scale * (softmax_term * da_dpos[0] + 2.0 * w[i] * (jxx * dev[0] + jxy * dev[1]));
    out.d_position[i][1] = scale * (softmax_term * da_dpos[1] + 2.0 * w[i] * (jxy * dev[0] + jyy * dev[1]));

    const double da_deta = -std::log10(r[i] / prm.d0);
    out.d_eta += scale * (softmax_term * da_deta + 2.0 * w[i] * (dev[0] * g[i][0] + dev[1] * g[i][1]) / prm.eta);
  }
  return out;
}

}  // namespace remap
