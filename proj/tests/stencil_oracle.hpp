#pragma once

// Test-only finite-difference oracles, kept separate from the library code
// paths they check.

#include <array>
#include <cmath>

#include "remap/common.hpp"

namespace remap::test {

template <class F>
double stencil_laplacian(F&& f, Point p, double h) {
  const double c = f(p);
  const double sx = (f(Point{p.x + h, p.y}) - c) + (f(Point{p.x - h, p.y}) - c);
  const double sy = (f(Point{p.x, p.y + h}) - c) + (f(Point{p.x, p.y - h}) - c);
  return (sx + sy) / (h * h);
}

/// Five-point Laplacian with h picked from {1, 0.1, 0.01} m: the finer of the
/// pair of consecutive steps whose estimates agree best.
template <class F>
double adaptive_fd_laplacian(F&& f, Point p) {
  const std::array<double, 3> hs{1.0, 0.1, 0.01};
  std::array<double, 3> est{};
  for (std::size_t i = 0; i < hs.size(); ++i) est[i] = test::stencil_laplacian(f, p, hs[i]);
  return std::abs(est[0] - est[1]) <= std::abs(est[1] - est[2]) ? est[1] : est[2];
}

}  // namespace remap::test
