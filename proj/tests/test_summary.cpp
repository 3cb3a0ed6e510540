#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ecal/error.hpp"
#include "ecal/summary.hpp"

using namespace ecal;

TEST_SUITE("summary") {

TEST_CASE("quantiles and intervals") {
  const std::vector<double> x{4.0, 1.0, 3.0, 2.0, 5.0};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 0.5) == 3.0);
  CHECK(quantile(x, 0.625) == doctest::Approx(3.5));
  const Interval iv = credible_interval(x, 0.5);
  CHECK(iv.lo == 2.0);
  CHECK(iv.hi == 4.0);
  CHECK_THROWS_AS(credible_interval(x, 1.5), ConfigError);
}

TEST_CASE("snapping onto the prior support") {
  const Interval a = snap_to_support({0.2, 0.2975}, 0.0, 0.3, 0.01);
  CHECK(a.hi == 0.3);
  CHECK(a.lo == 0.2);
  const Interval b = snap_to_support({0.2, 0.29}, 0.0, 0.3, 0.01);
  CHECK(b.hi == 0.29);
  const Interval c = snap_to_support({0.001, 0.5}, 0.0, std::numeric_limits<double>::infinity(), 0.01);
  CHECK(c.lo == 0.001);
}

TEST_CASE("ks statistic and effective sample size") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(20000);
  for (double& v : x) v = u(rng);
  CHECK(ks_statistic_uniform(x) < 0.02);
  CHECK(effective_sample_size(x) > 15000.0);
  std::vector<double> half(x);
  for (double& v : half) v *= 0.5;
  CHECK(ks_statistic_uniform(half) == doctest::Approx(0.5).epsilon(0.02));

  // AR(1) with coefficient rho has ESS ratio (1 - rho) / (1 + rho).
  std::normal_distribution<double> z;
  std::vector<double> ar(100000);
  double prev = 0.0;
  for (double& v : ar) prev = v = 0.8 * prev + z(rng);
  CHECK(effective_sample_size(ar) / 100000.0 == doctest::Approx(0.2 / 1.8).epsilon(0.2));
}

TEST_CASE("kde region of a standard normal") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> x(20000);
  std::vector<double> y(20000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = z(rng);
    y[i] = z(rng);
  }
  const Density2d d = kde_2d(x, y, 128);
  const HpdRegion r = hpd_region(d, 0.95);
  // pi * chi2_2(0.95), inflated slightly by the kernel bandwidth.
  CHECK(r.area == doctest::Approx(std::numbers::pi * -2.0 * std::log(0.05)).epsilon(0.1));
  const auto lines = contour_lines(d, r.threshold);
  REQUIRE(!lines.empty());
  for (const auto& l : lines) {
    REQUIRE(l.size() > 3);
    CHECK(l.front() == l.back());
  }
}

TEST_CASE("bands and coverage") {
  const Grid g = Grid::unit(11);
  std::vector<GridFunction> curves;
  for (int k = 0; k < 201; ++k) curves.emplace_back(g, std::vector<double>(11, (k - 100) / 100.0));
  const Band b = pointwise_band(curves, 0.9);
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(b.lower[i] <= b.median[i]);
    CHECK(b.median[i] <= b.upper[i]);
    CHECK(b.lower[i] == doctest::Approx(-0.9));
  }
  std::vector<double> obs(11, 0.0);
  obs[3] = 2.0;
  CHECK(band_coverage(b, obs) == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("histogram is a density") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> x(5000);
  for (double& v : x) v = u(rng);
  const Histogram h = histogram(x, 20, 0.0, 2.0);
  REQUIRE(h.edges.size() == 21);
  double total = 0.0;
  for (std::size_t k = 0; k < h.density.size(); ++k) total += h.density[k] * (h.edges[k + 1] - h.edges[k]);
  CHECK(total == doctest::Approx(1.0));
}

}  // TEST_SUITE
