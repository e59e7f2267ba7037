#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "remap/common.hpp"

namespace remap {

struct CandidatePool {
  std::vector<Point> points;
  std::vector<double> weights;  ///< optional auxiliary weights (empty = uniform)

  std::size_t size() const { return points.size(); }
  void validate() const;
};

/// First-order inclusion probabilities summing to n: uniform n/N, or
/// proportional to the weights with values capped at 1.
std::vector<double> inclusion_probabilities(const CandidatePool& pool, std::size_t n);

/// Uniform bucket grid over a point set. Points can be deactivated; queries
/// only see active points.
class GridIndex {
 public:
  explicit GridIndex(std::span<const Point> pts, double points_per_cell = 2.0);

  void deactivate(std::size_t i);
  bool active(std::size_t i) const { return slot_[i] >= 0; }
  std::size_t active_count() const { return n_active_; }

  /// Nearest active point to `q` other than `exclude`; ties broken uniformly
  /// at random through `rng` when given, else by lowest index. nullopt when
  /// no candidate exists.
  std::optional<std::size_t> nearest(Point q, std::optional<std::size_t> exclude = std::nullopt,
                                     std::mt19937_64* rng = nullptr) const;

  /// Indices of the k nearest active points (distance ascending, index on ties).
  std::vector<std::size_t> k_nearest(Point q, std::size_t k, std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  long cell_x(double x) const;
  long cell_y(double y) const;
  std::size_t cell_id(long cx, long cy) const { return static_cast<std::size_t>(cy * nx_ + cx); }
  double ring_lower_bound(Point q, long r) const;

  std::span<const Point> pts_;
  Bounds box_;
  double cell_ = 1.0;
  long nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<long> slot_;  // position inside its cell, -1 once inactive
  std::vector<std::size_t> cell_of_;
  std::size_t n_active_ = 0;
};

/// Local pivotal method: repeatedly pairs a random unresolved unit with its
/// nearest unresolved neighbour and moves probability mass between them
/// until every unit is 0 or 1. Returns sorted indices.
std::vector<std::size_t> lpm_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed);

std::vector<std::size_t> random_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed);
/// Nearest candidates to an evenly spaced target lattice (endpoints included).
std::vector<std::size_t> uniform_grid_sample(const CandidatePool& pool, std::size_t n);
/// Latin hypercube over the pool's bounding box: both axes cut into n bins.
std::vector<std::size_t> lhs_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed);
/// Weighted sampling without replacement, weight = k-NN density (k = 10).
std::vector<std::size_t> density_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed);
/// k-means with k = n, then the nearest unused candidate to each centroid.
std::vector<std::size_t> cluster_sample(const CandidatePool& pool, std::size_t n, std::uint64_t seed);

inline const std::vector<std::string>& sampler_names() {
  static const std::vector<std::string> names{"uniform", "random", "lhs", "density", "cluster", "lpm"};
  return names;
}

/// Dispatch by name (one of sampler_names()); throws UsageError otherwise.
std::vector<std::size_t> sample_by_name(const std::string& strategy, const CandidatePool& pool, std::size_t n,
                                        std::uint64_t seed);

std::map<std::string, std::vector<std::size_t>> compare_samplers(const CandidatePool& pool, std::size_t n,
                                                                 std::uint64_t seed);

/// Coefficient of variation (population std / mean) of nearest-neighbour
/// distances among the points. Lower is more evenly spread. Infinity when all
/// points coincide.
double balance_metric(std::span<const Point> pts);

}  // namespace remap
