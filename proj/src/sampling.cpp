#include "remap/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "remap/dataset.hpp"

namespace remap {

void CandidatePool::validate() const {
  if (points.empty()) throw std::invalid_argument("candidate pool is empty");
  if (!weights.empty()) {
    if (weights.size() != points.size()) throw std::invalid_argument("pool weights must match the point count");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("pool weights must be finite and >= 0");
  }
}

namespace {

void check_n(const CandidatePool& pool, std::size_t n) {
  pool.validate();
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (n > pool.size())
    throw std::invalid_argument("sample size " + std::to_string(n) + " exceeds pool size " +
                                std::to_string(pool.size()));
}

Bounds padded_box(std::span<const Point> pts) {
  Bounds b = bounding_box(pts);
  const double span = std::max({b.width(), b.height(), 1.0});
  if (!(b.width() > 0.0)) {
    b.xmin -= 0.5 * span;
    b.xmax += 0.5 * span;
  }
  if (!(b.height() > 0.0)) {
    b.ymin -= 0.5 * span;
    b.ymax += 0.5 * span;
  }
  return b;
}

double dist2(Point a, Point b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

std::vector<double> inclusion_probabilities(const CandidatePool& pool, std::size_t n) {
  check_n(pool, n);
  const std::size_t big_n = pool.size();
  std::vector<double> pi(big_n, static_cast<double>(n) / static_cast<double>(big_n));
  if (pool.weights.empty()) return pi;

  // Proportional to weight, with units that would exceed 1 fixed at 1 and the
  // remainder redistributed over the rest.
  std::vector<bool> capped(big_n, false);
  double remaining = static_cast<double>(n);
  for (;;) {
    double wsum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < big_n; ++i)
      if (!capped[i]) {
        wsum += pool.weights[i];
        ++free_count;
      }
    if (free_count == 0) break;
    bool changed = false;
    for (std::size_t i = 0; i < big_n; ++i) {
      if (capped[i]) continue;
      pi[i] = wsum > 0.0 ? remaining * pool.weights[i] / wsum : remaining / static_cast<double>(free_count);
      if (pi[i] >= 1.0) {
        pi[i] = 1.0;
        capped[i] = true;
        remaining -= 1.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return pi;
}

// ---------------------------------------------------------------------------

GridIndex::GridIndex(std::span<const Point> pts, double points_per_cell) : pts_(pts) {
  if (pts.empty()) throw std::invalid_argument("GridIndex: no points");
  box_ = padded_box(pts);
  const double area = box_.width() * box_.height();
  cell_ = std::sqrt(area * points_per_cell / static_cast<double>(pts.size()));
  if (!(cell_ > 0.0)) cell_ = 1.0;
  nx_ = std::max<long>(1, static_cast<long>(box_.width() / cell_) + 1);
  ny_ = std::max<long>(1, static_cast<long>(box_.height() / cell_) + 1);
  cells_.resize(static_cast<std::size_t>(nx_ * ny_));
  slot_.resize(pts.size());
  cell_of_.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t c = cell_id(cell_x(pts[i].x), cell_y(pts[i].y));
    cell_of_[i] = c;
    slot_[i] = static_cast<long>(cells_[c].size());
    cells_[c].push_back(i);
  }
  n_active_ = pts.size();
}

long GridIndex::cell_x(double x) const {
  return std::clamp(static_cast<long>(std::floor((x - box_.xmin) / cell_)), 0L, nx_ - 1);
}

long GridIndex::cell_y(double y) const {
  return std::clamp(static_cast<long>(std::floor((y - box_.ymin) / cell_)), 0L, ny_ - 1);
}

void GridIndex::deactivate(std::size_t i) {
  if (slot_[i] < 0) return;
  auto& cell = cells_[cell_of_[i]];
  const auto pos = static_cast<std::size_t>(slot_[i]);
  const std::size_t last = cell.back();
  cell[pos] = last;
  slot_[last] = static_cast<long>(pos);
  cell.pop_back();
  slot_[i] = -1;
  --n_active_;
}

// Lower bound on the distance from q to any point in cells at Chebyshev ring
// r around q's cell: the distance to the edge of the inner block.
double GridIndex::ring_lower_bound(Point q, long r) const {
  if (r == 0) return 0.0;
  const long cx = cell_x(q.x), cy = cell_y(q.y);
  const double left = box_.xmin + static_cast<double>(cx - r + 1) * cell_;
  const double right = box_.xmin + static_cast<double>(cx + r) * cell_;
  const double bottom = box_.ymin + static_cast<double>(cy - r + 1) * cell_;
  const double top = box_.ymin + static_cast<double>(cy + r) * cell_;
  const double d = std::min({q.x - left, right - q.x, q.y - bottom, top - q.y});
  return std::max(d, 0.0);
}

std::optional<std::size_t> GridIndex::nearest(Point q, std::optional<std::size_t> exclude,
                                              std::mt19937_64* rng) const {
  const long cx = cell_x(q.x), cy = cell_y(q.y);
  const long max_r = std::max(nx_, ny_);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (long r = 0; r <= max_r; ++r) {
    if (!ties.empty()) {
      const double lb = ring_lower_bound(q, r);
      if (lb * lb > best) break;
    }
    for (long yy = cy - r; yy <= cy + r; ++yy) {
      if (yy < 0 || yy >= ny_) continue;
      const bool edge_row = (yy == cy - r || yy == cy + r);
      for (long xx = cx - r; xx <= cx + r; xx += (edge_row ? 1 : 2 * r)) {
        if (xx >= 0 && xx < nx_) {
          for (std::size_t i : cells_[cell_id(xx, yy)]) {
            if (exclude && i == *exclude) continue;
            const double d = dist2(q, pts_[i]);
            if (d < best) {
              best = d;
              ties.assign(1, i);
            } else if (d == best) {
              ties.push_back(i);
            }
          }
        }
        if (r == 0) break;
      }
    }
  }
  if (ties.empty()) return std::nullopt;
  if (ties.size() == 1) return ties.front();
  if (rng) {
    std::sort(ties.begin(), ties.end());
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(*rng)];
  }
  return *std::min_element(ties.begin(), ties.end());
}

std::vector<std::size_t> GridIndex::k_nearest(Point q, std::size_t k, std::optional<std::size_t> exclude) const {
  const long cx = cell_x(q.x), cy = cell_y(q.y);
  const long max_r = std::max(nx_, ny_);
  std::vector<std::pair<double, std::size_t>> found;
  auto kth = [&]() {
    std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k - 1), found.end());
    return found[k - 1].first;
  };
  for (long r = 0; r <= max_r && k > 0; ++r) {
    if (found.size() >= k) {
      const double lb = ring_lower_bound(q, r);
      if (lb * lb > kth()) break;
    }
    for (long yy = cy - r; yy <= cy + r; ++yy) {
      if (yy < 0 || yy >= ny_) continue;
      const bool edge_row = (yy == cy - r || yy == cy + r);
      for (long xx = cx - r; xx <= cx + r; xx += (edge_row ? 1 : 2 * r)) {
        if (xx >= 0 && xx < nx_)
          for (std::size_t i : cells_[cell_id(xx, yy)])
            if (!(exclude && i == *exclude)) found.emplace_back(dist2(q, pts_[i]), i);
        if (r == 0) break;
      }
    }
  }
  std::sort(found.begin(), found.end());
  if (found.size() > k) found.resize(k);
  std::vector<std::size_t> out;
  out.reserve(found.size());
  for (const auto& f : found) out.push_back(f.second);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> lpm_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  std::vector<double> pi = inclusion_probabilities(pool, n);
  const std::size_t big_n = pool.size();
  constexpr double eps = 1e-10;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  GridIndex index(pool.points);
  std::vector<std::size_t> open;
  std::vector<long> open_pos(big_n, -1);
  auto close = [&](std::size_t i) {
    index.deactivate(i);
    const auto p = static_cast<std::size_t>(open_pos[i]);
    open[p] = open.back();
    open_pos[open[p]] = static_cast<long>(p);
    open.pop_back();
    open_pos[i] = -1;
  };
  for (std::size_t i = 0; i < big_n; ++i) {
    if (pi[i] <= eps || pi[i] >= 1.0 - eps) {
      pi[i] = pi[i] >= 1.0 - eps ? 1.0 : 0.0;
      index.deactivate(i);
    } else {
      open_pos[i] = static_cast<long>(open.size());
      open.push_back(i);
    }
  }

  while (open.size() >= 2) {
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const std::size_t i = open[pick(rng)];
    const std::size_t j = *index.nearest(pool.points[i], i, &rng);
    const double s = pi[i] + pi[j];
    const double u = unif(rng);
    if (s < 1.0) {
      if (u < pi[j] / s) {
        pi[i] = 0.0;
        pi[j] = s;
      } else {
        pi[i] = s;
        pi[j] = 0.0;
      }
    } else {
      if (u < (1.0 - pi[j]) / (2.0 - s)) {
        pi[i] = 1.0;
        pi[j] = s - 1.0;
      } else {
        pi[i] = s - 1.0;
        pi[j] = 1.0;
      }
    }
    for (std::size_t k : {i, j}) {
      if (pi[k] <= eps) {
        pi[k] = 0.0;
        close(k);
      } else if (pi[k] >= 1.0 - eps) {
        pi[k] = 1.0;
        close(k);
      }
    }
  }
  // A lone leftover only carries rounding error; round it.
  if (open.size() == 1) pi[open.front()] = pi[open.front()] > 0.5 ? 1.0 : 0.0;

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < big_n; ++i)
    if (pi[i] == 1.0) out.push_back(i);
  return out;
}

std::vector<std::size_t> random_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  check_n(pool, n);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

// Greedy: each target takes its nearest still-unused candidate.
std::vector<std::size_t> nearest_unused(const CandidatePool& pool, const std::vector<Point>& targets) {
  GridIndex index(pool.points);
  std::vector<std::size_t> out;
  out.reserve(targets.size());
  for (const Point& t : targets) {
    const std::size_t k = *index.nearest(t);
    out.push_back(k);
    index.deactivate(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> uniform_grid_sample(const CandidatePool& pool, std::size_t n) {
  check_n(pool, n);
  const Bounds b = bounding_box(std::span<const Point>(pool.points));
  const double w = std::max(b.width(), 0.0), h = std::max(b.height(), 0.0);
  const double dn = static_cast<double>(n);
  std::size_t gx;
  if (w <= 0.0 && h <= 0.0) gx = 1;
  else if (h <= 0.0) gx = n;
  else if (w <= 0.0) gx = 1;
  else gx = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::sqrt(dn * w / h))), 1, n);
  const std::size_t gy = (n + gx - 1) / gx;
  const std::size_t total = gx * gy;
  auto coord = [](double lo, double span, std::size_t k, std::size_t g) {
    return g == 1 ? lo + 0.5 * span : lo + span * static_cast<double>(k) / static_cast<double>(g - 1);
  };
  std::vector<Point> targets;
  targets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = k * total / n;
    targets.push_back({coord(b.xmin, w, t % gx, gx), coord(b.ymin, h, t / gx, gy)});
  }
  return nearest_unused(pool, targets);
}

std::vector<std::size_t> lhs_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  check_n(pool, n);
  const Bounds b = bounding_box(std::span<const Point>(pool.points));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double dn = static_cast<double>(n);
  std::vector<Point> targets;
  targets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = (static_cast<double>(k) + unif(rng)) / dn;
    const double v = (static_cast<double>(perm[k]) + unif(rng)) / dn;
    targets.push_back({b.xmin + u * b.width(), b.ymin + v * b.height()});
  }
  return nearest_unused(pool, targets);
}

std::vector<std::size_t> density_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  check_n(pool, n);
  const std::size_t big_n = pool.size();
  const std::size_t k = std::min<std::size_t>(10, big_n - 1);
  std::vector<double> density(big_n, 1.0);
  if (k > 0) {
    GridIndex index(pool.points);
    const double floor2 = std::pow(1e-9 * padded_box(pool.points).diagonal(), 2);
    for (std::size_t i = 0; i < big_n; ++i) {
      const auto nb = index.k_nearest(pool.points[i], k, i);
      const double rk2 = dist2(pool.points[i], pool.points[nb.back()]);
      density[i] = 1.0 / (rk2 + floor2);
    }
    const double dmax = *std::max_element(density.begin(), density.end());
    for (double& d : density) d /= dmax;
  }
  // Efraimidis-Spirakis: keep the n largest log(u) / w.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys(big_n);
  for (std::size_t i = 0; i < big_n; ++i) {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    keys[i] = {std::log(u) / density[i], i};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(keys[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> cluster_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  check_n(pool, n);
  const auto& pts = pool.points;
  const std::size_t big_n = pts.size();
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  std::vector<Point> centers;
  centers.reserve(n);
  std::uniform_int_distribution<std::size_t> first(0, big_n - 1);
  centers.push_back(pts[first(rng)]);
  std::vector<double> d2(big_n, std::numeric_limits<double>::infinity());
  while (centers.size() < n) {
    double total = 0.0;
    for (std::size_t i = 0; i < big_n; ++i) {
      d2[i] = std::min(d2[i], dist2(pts[i], centers.back()));
      total += d2[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (chosen = 0; chosen + 1 < big_n; ++chosen) {
        r -= d2[chosen];
        if (r < 0.0) break;
      }
    } else {
      chosen = first(rng);
    }
    centers.push_back(pts[chosen]);
  }

  std::vector<std::size_t> assign(big_n, n);
  for (int iter = 0; iter < 100; ++iter) {
    bool moved = false;
    for (std::size_t i = 0; i < big_n; ++i) {
      std::size_t best = 0;
      double bd = dist2(pts[i], centers[0]);
      for (std::size_t c = 1; c < n; ++c) {
        const double d = dist2(pts[i], centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        moved = true;
      }
    }
    if (!moved) break;
    std::vector<double> sx(n, 0.0), sy(n, 0.0);
    std::vector<std::size_t> cnt(n, 0);
    for (std::size_t i = 0; i < big_n; ++i) {
      sx[assign[i]] += pts[i].x;
      sy[assign[i]] += pts[i].y;
      ++cnt[assign[i]];
    }
    for (std::size_t c = 0; c < n; ++c)
      if (cnt[c] > 0) centers[c] = {sx[c] / static_cast<double>(cnt[c]), sy[c] / static_cast<double>(cnt[c])};
  }
  return nearest_unused(pool, centers);
}

std::vector<std::size_t> sample_by_name(const std::string& strategy, const CandidatePool& pool, std::size_t n,
                                        std::uint64_t seed) {
  if (strategy == "lpm") return lpm_sample(pool, n, seed);
  if (strategy == "random") return random_sample(pool, n, seed);
  if (strategy == "uniform" || strategy == "uniform_grid") return uniform_grid_sample(pool, n);
  if (strategy == "lhs") return lhs_sample(pool, n, seed);
  if (strategy == "density") return density_sample(pool, n, seed);
  if (strategy == "cluster") return cluster_sample(pool, n, seed);
  throw UsageError("unknown sampling strategy: " + strategy);
}

std::map<std::string, std::vector<std::size_t>> compare_samplers(const CandidatePool& pool, std::size_t n,
                                                                 std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& name : sampler_names()) out[name] = sample_by_name(name, pool, n, seed);
  return out;
}

double balance_metric(std::span<const Point> pts) {
  if (pts.size() < 2) throw std::invalid_argument("balance_metric needs at least 2 points");
  std::vector<double> nn(pts.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = distance(pts[i], pts[j]);
      nn[i] = std::min(nn[i], d);
      nn[j] = std::min(nn[j], d);
    }
  const double n = static_cast<double>(pts.size());
  const double mean = std::accumulate(nn.begin(), nn.end(), 0.0) / n;
  if (!(mean > 0.0)) return std::numeric_limits<double>::infinity();
  double var = 0.0;
  for (double d : nn) var += (d - mean) * (d - mean);
  return std::sqrt(var / n) / mean;
}

}  // namespace remap
