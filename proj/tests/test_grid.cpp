#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ecal/error.hpp"
#include "ecal/grid.hpp"
#include "ecal/interp.hpp"
#include "ecal/synthetic.hpp"
#include "test_util.hpp"

using namespace ecal;
using ecal::test::sampled;
using ecal::test::sup_diff;

TEST_SUITE("grid_fn") {

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid({0.0, 1.0}), DataError);
  CHECK_THROWS_AS(Grid({0.0, 0.5, 0.5, 1.0}), DataError);
  CHECK_THROWS_AS(GridFunction(Grid::unit(5), {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(GridFunction(Grid::unit(3), {1.0, NAN, 2.0}), DataError);
  const Grid g = Grid::uniform(2.0, 4.0, 5);
  CHECK(g.normalized().is_unit());
  CHECK(g.normalized()[2] == doctest::Approx(0.5));
}

TEST_CASE("resample") {
  const Grid coarse({0.0, 0.5, 1.0});
  const GridFunction lin(coarse, {0.0, 0.5, 1.0});
  const GridFunction r = resample(lin, Grid::unit(5));
  for (std::size_t i = 0; i < 5; ++i) CHECK(r[i] == doctest::Approx(0.25 * static_cast<double>(i)));

  const Grid g = Grid::unit(101);
  const GridFunction s = sampled(g, [](double t) { return std::sin(2 * std::numbers::pi * t); });
  const GridFunction same = resample(s, g);
  CHECK(sup_diff(same.values(), s.values()) == 0.0);

  std::vector<double> mid;
  for (std::size_t i = 0; i + 1 < g.size(); i += 2) mid.push_back(0.5 * (g[i] + g[i + 1]));
  const GridFunction m = resample(s, Grid(mid));
  double err = 0.0;
  for (std::size_t i = 0; i < mid.size(); ++i) {
    err = std::max(err, std::abs(m[i] - std::sin(2 * std::numbers::pi * mid[i])));
  }
  CHECK(err < 2e-4);

  CHECK_THROWS_AS(resample(s, Grid::uniform(0.5, 1.5, 5)), DataError);
}

TEST_CASE("monotone cubic does not overshoot a step") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y{0.0, 0.0, 1.0, 1.0, 1.0};
  const MonotoneCubic p(x, y);
  for (double t = 0.0; t <= 4.0; t += 0.01) {
    CHECK(p(t) >= -1e-14);
    CHECK(p(t) <= 1.0 + 1e-14);
  }
  CHECK_THROWS_AS(p(4.5), DataError);
}

TEST_CASE("derivative") {
  const Grid g = Grid::unit(201);
  const auto ones = derivative(sampled(g, [](double t) { return t; }));
  for (double v : ones.values()) CHECK(v == doctest::Approx(1.0));
  const auto zeros = derivative(sampled(g, [](double) { return 3.0; }));
  for (double v : zeros.values()) CHECK(v == doctest::Approx(0.0));
  const auto d = derivative(sampled(g, [](double t) { return t * t; }));
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(std::abs(d[i] - 2 * g[i]) < 1e-3);
}

TEST_CASE("srvf transform") {
  const Grid g = Grid::unit(201);
  const auto q_up = to_srvf(sampled(g, [](double t) { return t; }));
  for (double v : q_up.values()) CHECK(v == doctest::Approx(1.0));
  const auto q_down = to_srvf(sampled(g, [](double t) { return -t; }));
  for (double v : q_down.values()) CHECK(v == doctest::Approx(-1.0));
  const Srvf q = to_srvf(sampled(g, [](double t) { return t * t; }));
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) err = std::max(err, std::abs(q[i] - std::sqrt(2 * g[i])));
  CHECK(err < 2e-2);

  const Srvf one(g, std::vector<double>(g.size(), 1.0), 0.0);
  const GridFunction f = from_srvf(one);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(f[i] == doctest::Approx(g[i]));
  const Srvf zero(g, std::vector<double>(g.size(), 0.0), 2.5);
  const auto flat = from_srvf(zero);
  for (double v : flat.values()) CHECK(v == 2.5);
}

TEST_CASE("srvf keeps the source window") {
  const Grid g = Grid::uniform(-1.0, 3.0, 101);
  const GridFunction f = sampled(g, [](double t) { return 0.1 * t * t + t; });
  const GridFunction back = from_srvf(to_srvf(f));
  CHECK(back.grid().matches(g));
  CHECK(sup_diff(back.values(), f.values()) < 1e-3);
}

TEST_CASE("srvf round trip on the example bump") {
  const Grid g = Grid::unit(501);
  const std::vector<double> u{0.1028, 0.5930, 0.0};
  const GridFunction f = synthetic::example1_curve(g, u);
  CHECK(sup_diff(from_srvf(to_srvf(f)).values(), f.values()) < 1e-3);
}

TEST_CASE("srvf is invariant to vertical translation") {
  const Grid g = Grid::unit(301);
  const GridFunction f = sampled(g, [](double t) { return std::sin(5 * t) + t * t; });
  const GridFunction h = sampled(g, [](double t) { return std::sin(5 * t) + t * t + 4.0; });
  const Srvf a = to_srvf(f);
  const Srvf b = to_srvf(h);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("inner product") {
  const Grid g = Grid::unit(1001);
  const GridFunction one = sampled(g, [](double) { return 1.0; });
  const GridFunction zero = sampled(g, [](double) { return 0.0; });
  const GridFunction t = sampled(g, [](double s) { return s; });
  CHECK(inner_product(one, one) == doctest::Approx(1.0));
  CHECK(inner_product(t, zero) == 0.0);
  CHECK(std::abs(inner_product(t, t) - 1.0 / 3.0) < 1e-6);
  CHECK_THROWS_AS(inner_product(t, sampled(Grid::unit(11), [](double s) { return s; })), DataError);
}

TEST_CASE("inner product is symmetric and bilinear") {
  const Grid g = Grid::unit(257);
  const GridFunction a = sampled(g, [](double t) { return std::cos(3 * t); });
  const GridFunction b = sampled(g, [](double t) { return t * t - 0.2; });
  const GridFunction c = sampled(g, [](double t) { return std::exp(-t); });
  CHECK(inner_product(a, b) == inner_product(b, a));
  std::vector<double> mix(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) mix[i] = 2.0 * a[i] - 3.0 * c[i];
  const double lhs = inner_product(GridFunction(g, mix), b);
  const double rhs = 2.0 * inner_product(a, b) - 3.0 * inner_product(c, b);
  CHECK(std::abs(lhs - rhs) < 1e-14);
}

TEST_CASE("gaussian smoothing preserves constants") {
  const Grid g = Grid::unit(101);
  const GridFunction f = gaussian_smooth(sampled(g, [](double) { return 2.0; }), 0.05);
  for (double v : f.values()) CHECK(v == doctest::Approx(2.0));
  CHECK_THROWS_AS(gaussian_smooth(f, 0.0), ConfigError);
}

}  // TEST_SUITE
