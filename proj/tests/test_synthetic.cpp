#include <doctest.h>

#include <cmath>

#include "ecal/error.hpp"
#include "ecal/synthetic.hpp"

using namespace ecal;

TEST_SUITE("synthetic") {

TEST_CASE("example 1 curve") {
  const Grid g = Grid::unit(101);
  const std::vector<double> u{0.0, 1.0, 0.3};
  const GridFunction f = synthetic::example1_curve(g, u);
  CHECK(f[50] == doctest::Approx(7.978845608028654).epsilon(1e-12));
  CHECK(*std::max_element(f.values().begin(), f.values().end()) == f[50]);

  const std::vector<double> a{0.2, 0.4, 0.0};
  const std::vector<double> b{0.2, 0.4, 0.9};
  const GridFunction fa = synthetic::example1_curve(g, a);
  const GridFunction fb = synthetic::example1_curve(g, b);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(fa[i] == fb[i]);
  CHECK_THROWS_AS(synthetic::example1_curve(g, std::vector<double>{0.1, 0.2}), ConfigError);
}

TEST_CASE("curves integrate to their height input") {
  const Grid g = Grid::unit(401);
  for (double u1 : {0.1, 0.593, 1.0}) {
    const std::vector<double> u{0.1028, u1, 0.0};
    CHECK(std::abs(trapezoid(g.points(), synthetic::example1_curve(g, u).values()) - u1) < 1e-3);
    const std::vector<double> v{0.15, u1};
    CHECK(std::abs(trapezoid(g.points(), synthetic::example2_curve(g, v).values()) - u1) < 1e-3);
  }
}

TEST_CASE("example 2 observation is the model shifted by 0.2") {
  const Grid g = Grid::unit(501);
  const GridFunction obs = synthetic::example2_observation(g);
  const auto peak = std::max_element(obs.values().begin(), obs.values().end()) - obs.values().begin();
  CHECK(g[static_cast<std::size_t>(peak)] == doctest::Approx(0.6));
  const GridFunction model = synthetic::example2_curve(g, synthetic::kExample2Truth);
  // 0.2 is exactly 100 steps of the 501-point grid.
  for (std::size_t i = 0; i + 100 < g.size(); ++i) CHECK(obs[i + 100] == doctest::Approx(model[i]).epsilon(1e-9));
}

TEST_CASE("vinet pressure") {
  CHECK(synthetic::vinet_pressure(1.3, 1.3, 50.0, 4.0) == 0.0);
  CHECK(synthetic::vinet_pressure(2.0, 1.0, 1.0, 4.0) == doctest::Approx(2.485892210640758).epsilon(1e-12));
  double prev = 0.0;
  for (double rho = 1.01; rho < 4.0; rho += 0.01) {
    const double p = synthetic::vinet_pressure(rho, 1.0, 30.0, 4.5);
    CHECK(p > prev);
    prev = p;
  }
  CHECK_THROWS_AS(synthetic::vinet_pressure(-1.0, 1.0, 1.0, 4.0), ConfigError);
  CHECK_THROWS_AS(synthetic::vinet_pressure(1.0, 0.0, 1.0, 4.0), ConfigError);
}

TEST_CASE("design sampling") {
  const auto a = synthetic::sample_design(100, 3, {}, 7);
  const auto b = synthetic::sample_design(100, 3, {}, 7);
  CHECK(a.inputs == b.inputs);
  CHECK(a.inputs.minCoeff() >= 0.0);
  CHECK(a.inputs.maxCoeff() <= 1.0);

  const auto e2 = synthetic::sample_design(300, 3, synthetic::example2_design_spec(), 2);
  CHECK(e2.inputs.leftCols(2).maxCoeff() <= synthetic::kExample2Upper);
  CHECK(e2.inputs.col(2).maxCoeff() > synthetic::kExample2Upper);

  synthetic::DesignSpec lhs;
  lhs.kind = synthetic::DesignKind::kLatinHypercube;
  const int n = 40;
  const auto l = synthetic::sample_design(n, 4, lhs, 3);
  for (Eigen::Index j = 0; j < 4; ++j) {
    std::vector<int> hits(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(std::min(n - 1, static_cast<int>(l.inputs(i, j) * n)))];
    for (int h : hits) CHECK(h == 1);
  }
  CHECK_THROWS_AS(synthetic::sample_design(0, 3, {}, 1), ConfigError);
}

}  // TEST_SUITE
