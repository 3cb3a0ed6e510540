#include <doctest.h>

#include <cmath>
#include <random>

#include "ecal/error.hpp"
#include "ecal/grid.hpp"
#include "ecal/warping.hpp"
#include "test_util.hpp"

using namespace ecal;
using ecal::test::random_warp;
using ecal::test::sup_diff;

namespace {

WarpingFunction square_warp(const Grid& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = g[i] * g[i];
  return WarpingFunction(g, v);
}

// arccos(int_0^1 sqrt(2t) dt) = arccos(2 sqrt(2) / 3)
const double kSquareDistance = std::acos(2.0 * std::sqrt(2.0) / 3.0);

}  // namespace

TEST_SUITE("phase_geom") {

TEST_CASE("warping function invariants") {
  const Grid g = Grid::unit(11);
  CHECK_THROWS_AS(WarpingFunction(g, std::vector<double>(11, 0.5)), DataError);
  std::vector<double> bad(11);
  for (std::size_t i = 0; i < 11; ++i) bad[i] = g[i];
  bad[5] = 0.3;
  CHECK_THROWS_AS(WarpingFunction(g, bad), DataError);

  std::vector<double> flat(11);
  for (std::size_t i = 0; i < 11; ++i) flat[i] = i < 6 ? 0.0 : g[i];
  const WarpingFunction r = WarpingFunction::repaired(g, flat);
  CHECK(r.strictly_increasing());
  CHECK(r[0] == 0.0);
  CHECK(r[10] == 1.0);
}

TEST_CASE("psi of the identity and of t^2") {
  const Grid g = Grid::unit(201);
  const auto psi_id = gamma_to_psi(WarpingFunction::identity(g));
  for (double v : psi_id.values()) CHECK(v == doctest::Approx(1.0));
  const SrsfPsi psi = gamma_to_psi(square_warp(g));
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) err = std::max(err, std::abs(psi[i] - std::sqrt(2 * g[i])));
  CHECK(err < 2e-2);

  std::vector<double> root(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) root[i] = std::sqrt(2 * g[i]);
  const WarpingFunction back = psi_to_gamma(SrsfPsi(g, root));
  double werr = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) werr = std::max(werr, std::abs(back[i] - g[i] * g[i]));
  CHECK(werr < 1e-3);
  CHECK(sup_diff(psi_to_gamma(SrsfPsi(g, std::vector<double>(g.size(), 1.0))).values(), g.points()) < 1e-15);
}

TEST_CASE("sphere membership") {
  const Grid g = Grid::unit(501);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const SrsfPsi psi = gamma_to_psi(random_warp(g, rng));
    CHECK(std::abs(trapezoid_product(g.points(), psi.values(), psi.values()) - 1.0) < 1e-6);
  }
}

TEST_CASE("phase distance") {
  const Grid g = Grid::unit(2001);
  const WarpingFunction id = WarpingFunction::identity(g);
  const WarpingFunction sq = square_warp(g);
  CHECK(std::abs(phase_distance(id, sq) - kSquareDistance) < 2e-3);
  CHECK(phase_distance(sq, sq) < 1e-6);
  std::mt19937_64 rng(3);
  const Grid h = Grid::unit(301);
  for (int k = 0; k < 20; ++k) {
    const WarpingFunction a = random_warp(h, rng);
    const WarpingFunction b = random_warp(h, rng);
    const WarpingFunction c = random_warp(h, rng);
    CHECK(phase_distance(a, b) == phase_distance(b, a));
    CHECK(phase_distance(a, c) <= phase_distance(a, b) + phase_distance(b, c) + 1e-6);
  }
}

TEST_CASE("exponential map") {
  const Grid g = Grid::unit(501);
  const auto psi_zero = exp_map_identity(ShootingVector::zero(g));
  for (double v : psi_zero.values()) CHECK(v == 1.0);
  const auto v_zero = inv_exp_map(SrsfPsi(g, std::vector<double>(g.size(), 1.0)));
  for (double v : v_zero.values()) CHECK(v == 0.0);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const SrsfPsi psi = gamma_to_psi(random_warp(g, rng));
    const ShootingVector v = inv_exp_map(psi);
    CHECK(std::abs(trapezoid(g.points(), v.values())) < 1e-6);
    CHECK(sup_diff(exp_map_identity(v).values(), psi.values()) < 1e-6);
    CHECK(std::abs(v.norm() - sphere_distance(SrsfPsi(g, std::vector<double>(g.size(), 1.0)), psi)) < 1e-6);
    const SrsfPsi e = exp_map_identity(v);
    CHECK(std::abs(trapezoid_product(g.points(), e.values(), e.values()) - 1.0) < 1e-6);
  }
}

TEST_CASE("shooting vector of t^2") {
  const Grid g = Grid::unit(2001);
  CHECK(std::abs(gamma_to_shooting(square_warp(g)).norm() - kSquareDistance) < 2e-3);
}

TEST_CASE("shooting vector invariants") {
  const Grid g = Grid::unit(101);
  CHECK_THROWS_AS(ShootingVector(g, std::vector<double>(g.size(), 0.3)), DataError);
  std::vector<double> big(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) big[i] = 5.0 * std::cos(2 * M_PI * g[i]);
  CHECK_THROWS_AS(ShootingVector(g, big), NumericalError);
  const auto p = project_to_tangent(g, std::vector<double>(g.size(), 0.3));
  for (double v : p) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("warp and shooting vector round trips") {
  const Grid g = Grid::unit(501);
  const WarpingFunction id = WarpingFunction::identity(g);
  const auto v_id = gamma_to_shooting(id);
  for (double v : v_id.values()) CHECK(std::abs(v) < 1e-8);
  CHECK(sup_diff(shooting_to_gamma(ShootingVector::zero(g)).values(), g.points()) < 1e-15);

  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const WarpingFunction w = random_warp(g, rng);
    const ShootingVector v = gamma_to_shooting(w);
    CHECK(std::abs(v.norm() - phase_distance(id, w)) < 1e-5);
    CHECK(sup_diff(shooting_to_gamma(v).values(), w.values()) < 1e-3);
    const ShootingVector again = gamma_to_shooting(shooting_to_gamma(v));
    CHECK(sup_diff(again.values(), v.values()) < 1e-3);
  }
}

TEST_CASE("small shooting vectors act linearly") {
  const Grid g = Grid::unit(501);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::cos(2 * M_PI * g[i]);
  const double n = std::sqrt(trapezoid_product(g.points(), v, v));
  for (double& x : v) x *= 0.05 / n;
  const ShootingVector s(g, v);
  const WarpingFunction w = shooting_to_gamma(s);
  std::vector<double> twice(v);
  for (double& x : twice) x *= 2.0;
  const std::vector<double> integral = cumulative_trapezoid(g.points(), twice);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(w[i] - g[i] - integral[i]));
  CHECK(err < 5e-3);
}

TEST_CASE("inverse warp") {
  const Grid g = Grid::unit(401);
  std::mt19937_64 rng(1);
  const WarpingFunction w = random_warp(g, rng);
  const WarpingFunction inv = w.inverse();
  for (double t = 0.0; t <= 1.0; t += 0.05) CHECK(std::abs(inv(w(t)) - t) < 1e-3);
}

}  // TEST_SUITE
