#include <doctest.h>

#include <random>

#include "remap/field_model.hpp"
#include "remap/shadow_field.hpp"
#include "stencil_oracle.hpp"

using namespace remap;

namespace {

FieldScene single(double power, double eta, Point at = {0, 0}) {
  FieldScene s;
  s.transmitters = {{at, power, true}};
  s.params = {eta, 1.0, 1.0};
  return s;
}

FieldScene random_scene(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> pos(-2000.0, 2000.0);
  std::uniform_real_distribution<double> pw(15.0, 40.0);
  std::uniform_real_distribution<double> eta(2.0, 4.0);
  FieldScene s;
  s.params = {eta(rng), 1.0, 1.0};
  for (std::size_t i = 0; i < m; ++i) s.transmitters.push_back({{pos(rng), pos(rng)}, pw(rng), true});
  return s;
}

}  // namespace

TEST_CASE("dB and linear conversions") {
  CHECK(db_to_linear(0.0) == 1.0);
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(linear_to_db(db_to_linear(-73.4)) == doctest::Approx(-73.4).epsilon(1e-14));
  CHECK_THROWS_AS(linear_to_db(0.0), std::domain_error);
  CHECK_THROWS_AS(linear_to_db(-1.0), std::domain_error);

  for (double p = -200.0; p <= 200.0; p += 0.37) CHECK(std::abs(linear_to_db(db_to_linear(p)) - p) <= 1e-12);
}

TEST_CASE("exponent term") {
  auto s = single(30.0, 2.0);
  CHECK(exponent_term(s, 0, {1, 0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(exponent_term(s, 0, {0, 10}) == doctest::Approx(1.0).epsilon(1e-15));

  auto s2 = single(23.0, 3.2);
  CHECK(exponent_term(s2, 0, {150, 200}, -4.1) == doctest::Approx(-5.7834080277505207411).epsilon(1e-13));

  SUBCASE("distance clamp at the transmitter") {
    CHECK(std::isfinite(exponent_term(s, 0, {0, 0})));
    CHECK(exponent_term(s, 0, {0, 0}) == exponent_term(s, 0, {0.5, 0}));
  }
}

TEST_CASE("weights") {
  auto s = single(30.0, 3.0);
  CHECK(weights(s, {50, 50}) == std::vector<double>{1.0});

  FieldScene sym = single(30.0, 3.0, {-100, 0});
  sym.transmitters.push_back({{100, 0}, 30.0, true});
  auto w = weights(sym, {0, 40});
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));

  const std::vector<double> a{1.0, 0.0};
  auto w2 = weights_from_exponents(a);
  CHECK(w2[0] == doctest::Approx(0.90909090909090909091).epsilon(1e-14));
  CHECK(w2[1] == doctest::Approx(0.090909090909090909091).epsilon(1e-14));

  SUBCASE("no overflow for large exponents") {
    const std::vector<double> big{400.0, 399.0, -500.0};
    auto wb = weights_from_exponents(big);
    CHECK(wb[0] == doctest::Approx(10.0 / 11.0));
    CHECK(wb[2] >= 0.0);
    CHECK(std::isfinite(log_sum_db(big)));
  }

  SUBCASE("partition property") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3000.0, 3000.0);
    for (int trial = 0; trial < 200; ++trial) {
      auto sc = random_scene(rng, 1 + trial % 5);
      auto ww = weights(sc, {u(rng), u(rng)});
      double sum = 0.0;
      for (double v : ww) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("total power") {
  auto s = single(30.0, 3.0);
  const Point p{300, 400};
  CHECK(total_power_db(s, p) == doctest::Approx(30.0 - 30.0 * std::log10(500.0)).epsilon(1e-14));

  FieldScene twin = s;
  twin.transmitters.push_back(s.transmitters[0]);
  CHECK(total_power_db(twin, p) - total_power_db(s, p) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));

  FieldScene three;
  three.params = {2.8, 1.0, 1.0};
  three.transmitters = {{{0, 0}, 30, true}, {{400, 100}, 27, true}, {{-150, 350}, 33, true}};
  CHECK(total_power_db(three, {120, 80}) == doctest::Approx(-29.631220060862620602).epsilon(1e-13));

  SUBCASE("superposition bounds and monotonicity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3000.0, 3000.0);
    for (int trial = 0; trial < 200; ++trial) {
      auto sc = random_scene(rng, 1 + trial % 4);
      const Point q{u(rng), u(rng)};
      double best = -1e300;
      for (std::size_t i = 0; i < sc.size(); ++i) best = std::max(best, 10.0 * exponent_term(sc, i, q));
      const double tot = total_power_db(sc, q);
      CHECK(tot >= best - 1e-12);
      CHECK(tot <= best + 10.0 * std::log10(static_cast<double>(sc.size())) + 1e-12);
      auto louder = sc;
      louder.transmitters[0].power_db += 1.0;
      CHECK(total_power_db(louder, q) >= tot);
    }
  }
}

TEST_CASE("exponent gradients against finite differences") {
  auto s = single(30.0, 2.0);
  const auto g = grad_a(s, 0, {1, 0});
  CHECK(g[0] == doctest::Approx(-0.8685889638065036553).epsilon(1e-14));
  CHECK(g[1] == 0.0);
  CHECK(g[0] * g[0] + g[1] * g[1] == doctest::Approx(0.75444678804645571688).epsilon(1e-14));

  // Central differences on exponent_term, h = 1e-4.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto sc = random_scene(rng, 2);
    const Point p{u(rng), u(rng)};
    for (std::size_t i = 0; i < sc.size(); ++i) {
      auto a = [&](Point q) { return exponent_term(sc, i, q); };
      const double h = 1e-4;
      const double gx = (a({p.x + h, p.y}) - a({p.x - h, p.y})) / (2 * h);
      const double gy = (a({p.x, p.y + h}) - a({p.x, p.y - h})) / (2 * h);
      const auto ga = grad_a(sc, i, p);
      CHECK(ga[0] == doctest::Approx(gx).epsilon(1e-6));
      CHECK(ga[1] == doctest::Approx(gy).epsilon(1e-6));
      const double lap = test::stencil_laplacian(a, p, 1e-2);
      CHECK(std::abs(lap - laplacian_a(sc, i, p)) < 1e-6);
    }
  }
}

TEST_CASE("pde right-hand side") {
  SUBCASE("single transmitter reduces to zero") {
    auto s = single(30.0, 3.3, {10, -20});
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(pde_rhs(s, {u(rng), u(rng)})) <= 1e-12);
  }

  SUBCASE("co-located transmitters act as one source") {
    FieldScene s = single(30.0, 3.0, {5, 5});
    s.transmitters.push_back({{5, 5}, 22.0, true});
    CHECK(std::abs(pde_rhs(s, {250, -75})) <= 1e-15);
  }

  SUBCASE("two transmitters match the high-precision stencil oracle") {
    FieldScene s;
    s.params = {3.0, 1.0, 1.0};
    s.transmitters = {{{0, 0}, 30, true}, {{300, 0}, 24, true}};
    const double rhs = pde_rhs(s, {140, 60});
    CHECK(rhs == doctest::Approx(0.00066580183435192665321).epsilon(1e-3));
    CHECK(rhs > 0.0);
  }

  SUBCASE("identity on random shadow-free scenes") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3000.0, 3000.0);
    for (int trial = 0; trial < 300; ++trial) {
      auto sc = random_scene(rng, 1 + trial % 4);
      Point p{u(rng), u(rng)};
      double rmin = 1e300;
      for (const auto& t : sc.transmitters) rmin = std::min(rmin, distance(p, t.position));
      if (rmin < 10.0 * sc.params.r_min) continue;
      const double exact = pde_rhs(sc, p);
      const double fd = test::adaptive_fd_laplacian([&](Point q) { return total_power_db(sc, q); }, p);
      CHECK(std::abs(fd - exact) <= std::max(1e-3 * std::abs(exact), 1e-6));
    }
  }
}

TEST_CASE("pde right-hand side parameter gradient") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1500.0, 1500.0);
  for (int trial = 0; trial < 40; ++trial) {
    auto sc = random_scene(rng, 2 + trial % 3);
    const Point p{u(rng), u(rng)};
    const auto grad = pde_rhs_with_gradient(sc, p);
    CHECK(grad.value == doctest::Approx(pde_rhs(sc, p)).epsilon(1e-12));

    auto fd = [&](auto&& mutate, double h) {
      auto plus = sc, minus = sc;
      mutate(plus, h);
      mutate(minus, -h);
      return (pde_rhs(plus, p) - pde_rhs(minus, p)) / (2 * h);
    };
    const double scale = std::abs(grad.value) + 1e-12;
    for (std::size_t i = 0; i < sc.size(); ++i) {
      const double dp = fd([i](FieldScene& s, double h) { s.transmitters[i].power_db += h; }, 1e-4);
      const double dx = fd([i](FieldScene& s, double h) { s.transmitters[i].position.x += h; }, 1e-3);
      const double dy = fd([i](FieldScene& s, double h) { s.transmitters[i].position.y += h; }, 1e-3);
      CHECK(std::abs(grad.d_power[i] - dp) <= 1e-5 * scale + 1e-6 * std::abs(dp));
      CHECK(std::abs(grad.d_position[i][0] - dx) <= 1e-5 * scale + 1e-5 * std::abs(dx));
      CHECK(std::abs(grad.d_position[i][1] - dy) <= 1e-5 * scale + 1e-5 * std::abs(dy));
    }
    const double de = fd([](FieldScene& s, double h) { s.params.eta += h; }, 1e-6);
    CHECK(std::abs(grad.d_eta - de) <= 1e-5 * scale + 1e-5 * std::abs(de));
  }
}

TEST_CASE("scene validation") {
  FieldScene empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  auto s = single(30.0, 3.0);
  s.params.eta = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.params = {3.0, 1.0, 0.001};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.params = {3.0, 1.0, 1.0};
  s.transmitters[0].power_db = std::nan("");
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("shadow field") {
  const Bounds dom{0, 0, 5000, 5000};

  SUBCASE("zero sigma is identically zero") {
    ShadowField f({0.0, 300.0, 1}, dom);
    CHECK(f.sample({123, 456}) == 0.0);
    CHECK(f.sample({4999, 1}) == 0.0);
  }

  SUBCASE("deterministic for a seed") {
    ShadowField a({6.0, 500.0, 42}, dom);
    ShadowField b({6.0, 500.0, 42}, dom);
    ShadowField c({6.0, 500.0, 43}, dom);
    CHECK(a.sample({1234.5, 987.6}) == b.sample({1234.5, 987.6}));
    CHECK(a.sample({1234.5, 987.6}) != c.sample({1234.5, 987.6}));
  }

  SUBCASE("lattice standard deviation") {
    // Lattice spans ~100 correlation lengths per axis so 10,000 nodes are
    // close to independent draws.
    ShadowField f({8.0, 100.0, 9}, Bounds{0, 0, 10000, 10000});
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t iy = 0; iy < f.ny() && n < 10000; iy += 4)
      for (std::size_t ix = 0; ix < f.nx() && n < 10000; ix += 4) {
        const double v = f.node(ix, iy);
        sum += v;
        sq += v * v;
        ++n;
      }
    REQUIRE(n == 10000);
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(sd == doctest::Approx(8.0).epsilon(0.5 / 8.0));
    CHECK(f.clipped_fraction() < 1e-3);
  }

  SUBCASE("correlation decays like exp(-d/L)") {
    // Pool lag products over many seeds at lags of 0, 1 and 2 correlation lengths.
    const double L = 200.0;
    double c0 = 0, c1 = 0, c2 = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ShadowField f({1.0, L, seed}, Bounds{0, 0, 4000, 4000});
      for (std::size_t iy = 0; iy < f.ny(); iy += 2)
        for (std::size_t ix = 0; ix + 8 < f.nx(); ix += 2) {
          c0 += f.node(ix, iy) * f.node(ix, iy);
          c1 += f.node(ix, iy) * f.node(ix + 4, iy);
          c2 += f.node(ix, iy) * f.node(ix + 8, iy);
        }
    }
    CHECK(c1 / c0 == doctest::Approx(std::exp(-1.0)).epsilon(0.1));
    CHECK(c2 / c0 == doctest::Approx(std::exp(-2.0)).epsilon(0.2));
  }

  SUBCASE("bilinear interpolation hits lattice nodes") {
    ShadowField f({6.0, 400.0, 3}, dom);
    // Node (2, 3) sits at origin + (2, 3) * spacing; origin is one node outside the domain.
    const Point node{dom.xmin + (2 - 1) * f.spacing(), dom.ymin + (3 - 1) * f.spacing()};
    CHECK(f.sample(node) == doctest::Approx(f.node(2, 3)).epsilon(1e-12));
  }
}

TEST_CASE("synthetic field") {
  FieldScene s = single(30.0, 3.0, {500, 500});
  SyntheticField plain(s, {0, 0, 1000, 1000});
  CHECK(plain.power_db({100, 900}) == total_power_db(s, {100, 900}));

  s.shadow = {ShadowFieldSpec{6.0, 200.0, 4}};
  SyntheticField shadowed(s, {0, 0, 1000, 1000});
  const Point p{100, 900};
  CHECK(shadowed.power_db(p) == doctest::Approx(total_power_db(s, p) + shadowed.shadow_db(p)[0]).epsilon(1e-12));
}
