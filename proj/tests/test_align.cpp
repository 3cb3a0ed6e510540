#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "ecal/align.hpp"
#include "ecal/error.hpp"
#include "ecal/synthetic.hpp"
#include "test_util.hpp"

using namespace ecal;
using ecal::test::random_warp;
using ecal::test::sampled;

namespace {

GridFunction bump(const Grid& g, double center, double height = 1.0) {
  return sampled(g, [&](double t) {
    const double z = (t - center) / 0.05;
    return height * std::exp(-0.5 * z * z);
  });
}

// Minimum cost over every monotone lattice path from (0,0) to (n-1,n-1)
// built from the slope set, by plain recursion.
double exhaustive_cost(const Srvf& a, const Srvf& b, int max_step, double lambda) {
  const auto steps = dp_slope_set(max_step);
  const auto t = a.grid().points();
  const int n = static_cast<int>(t.size());
  std::function<double(int, int)> best = [&](int i, int j) -> double {
    if (i == n - 1 && j == n - 1) return 0.0;
    double out = std::numeric_limits<double>::infinity();
    for (const auto& [p, r] : steps) {
      const int k = i + p;
      const int l = j + r;
      if (k >= n || l >= n) continue;
      const double rest = best(k, l);
      if (std::isinf(rest)) continue;
      out = std::min(out, dp_edge_cost(t, a.values(), b.values(), i, j, k, l, lambda) + rest);
    }
    return out;
  };
  return best(0, 0);
}

int local_maxima(std::span<const double> v, double floor) {
  int count = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] > floor && v[i] > v[i - 1] && v[i] >= v[i + 1]) ++count;
  }
  return count;
}

}  // namespace

TEST_SUITE("srvf_align") {

TEST_CASE("slope set") {
  const auto s = dp_slope_set(4);
  CHECK(s.size() == 11);
  CHECK(s.front() == std::pair{1, 1});
  CHECK_THROWS_AS(dp_slope_set(0), ConfigError);
}

TEST_CASE("diagonal edge cost is the trapezoid of the squared difference") {
  const Grid g = Grid::unit(9);
  std::vector<double> a(9);
  std::vector<double> b(9);
  for (std::size_t i = 0; i < 9; ++i) {
    a[i] = std::sin(3.0 * g[i]);
    b[i] = g[i] * g[i];
  }
  double expect = 0.0;
  for (std::size_t i = 2; i < 5; ++i) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    expect += 0.5 * (g[i + 1] - g[i]) * (d0 * d0 + d1 * d1);
  }
  CHECK(dp_edge_cost(g.points(), a, b, 2, 2, 5, 5, 0.0) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(dp_edge_cost(g.points(), a, b, 2, 2, 5, 5, 3.0) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("DP matches exhaustive search on 8-point grids") {
  const Grid g = Grid::unit(8);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<double> a(8);
    std::vector<double> b(8);
    for (auto& x : a) x = z(rng);
    for (auto& x : b) x = z(rng);
    const Srvf qa(g, a);
    const Srvf qb(g, b);
    for (double lambda : {0.0, 0.5}) {
      for (int max_step : {2, 4}) {
        DpOptions o;
        o.lambda = lambda;
        o.max_step = max_step;
        CHECK(dp_solve(qa, qb, o).cost == doctest::Approx(exhaustive_cost(qa, qb, max_step, lambda)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("group action") {
  const Grid g = Grid::unit(501);
  const Srvf q = to_srvf(bump(g, 0.4));
  const Srvf same = group_action(q, WarpingFunction::identity(g));
  CHECK(ecal::test::sup_diff(same.values(), q.values()) < 1e-12);

  std::mt19937_64 rng(8);
  const WarpingFunction w = random_warp(g, rng);
  const Srvf one(g, std::vector<double>(g.size(), 1.0));
  const Srvf s = group_action(one, w);
  const auto slope = difference(g.points(), w.values(), DifferenceScheme::kCentral);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(s[i] == doctest::Approx(std::sqrt(slope[i])));

  for (int k = 0; k < 10; ++k) {
    const WarpingFunction gamma = random_warp(g, rng);
    const Srvf a = to_srvf(bump(g, 0.3 + 0.04 * k));
    const Srvf b = to_srvf(bump(g, 0.6 - 0.02 * k, 2.0));
    CHECK(std::abs(l2_norm(group_action(a, gamma)) - l2_norm(a)) < 1e-6 * l2_norm(a) + 1e-3);
    const double before = std::sqrt(squared_distance(a, b));
    const double after = std::sqrt(squared_distance(group_action(a, gamma), group_action(b, gamma)));
    CHECK(std::abs(before - after) < 1e-3 * before + 1e-3);
  }
}

TEST_CASE("self alignment is the identity") {
  for (std::size_t n : {101u, 201u}) {
    const Grid g = Grid::unit(n);
    for (double c : {0.3, 0.5, 0.7}) {
      const Srvf q = to_srvf(bump(g, c));
      const WarpingFunction w = dp_align(q, q);
      CHECK(w.distance_to_identity() <= 2.0 / static_cast<double>(n));
      CHECK(amplitude_distance(q, q) < 1e-6);
    }
  }
  const Grid g = Grid::unit(11);
  CHECK_THROWS_AS(dp_align(Srvf(g, std::vector<double>(11, 1.0)), Srvf(g, std::vector<double>(11, 1.0)),
                           DpOptions{.lambda = -1.0}),
                  ConfigError);
}

TEST_CASE("shifted bump aligns") {
  const Grid g = Grid::unit(201);
  const Srvf ref = to_srvf(bump(g, 0.5));
  const Srvf mov = to_srvf(bump(g, 0.3));
  const double before = squared_distance(ref, mov);
  const WarpingFunction w = dp_align(ref, mov);
  const double after = alignment_energy(ref, mov, w, 0.0);
  CHECK(after < 0.05 * before);

  // Piecewise-linear warps sending 0.5 to 0.3 with a unit-slope middle piece.
  double family = std::numeric_limits<double>::infinity();
  for (double half = 0.01; half < 0.3; half += 0.005) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = g[i];
      if (t < 0.5 - half) {
        v[i] = t * (0.3 - half) / (0.5 - half);
      } else if (t <= 0.5 + half) {
        v[i] = t - 0.2;
      } else {
        v[i] = 0.3 + half + (t - 0.5 - half) * (0.7 - half) / (0.5 - half);
      }
    }
    v.back() = 1.0;
    family = std::min(family, alignment_energy(ref, mov, WarpingFunction(g, v), 0.0));
  }
  CHECK(after <= family + 1e-3 * before);
}

TEST_CASE("pure phase difference has near-zero amplitude distance") {
  const Grid g = Grid::unit(401);
  const GridFunction f = bump(g, 0.45);
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = g[i] + 0.1 * std::sin(M_PI * g[i]);
  const WarpingFunction gamma(g, w);
  const GridFunction warped = warp_curve(f, gamma);
  const Srvf q = to_srvf(f);
  const double norm2 = l2_norm(q) * l2_norm(q);
  // The lattice slope set bounds how well sqrt(gamma') can be matched,
  // independently of the grid size.
  CHECK(amplitude_distance(q, to_srvf(warped)) < 5e-3 * norm2);
}

TEST_CASE("height scaling gives the analytic amplitude distance") {
  const Grid g = Grid::unit(401);
  const GridFunction f = bump(g, 0.5);
  const Srvf q = to_srvf(f);
  for (double a : {0.25, 0.5, 2.0}) {
    const Srvf qa = to_srvf(bump(g, 0.5, a));
    const double expect = (1.0 - std::sqrt(a)) * (1.0 - std::sqrt(a)) * squared_distance(q, Srvf(g, std::vector<double>(g.size(), 0.0)));
    CHECK(amplitude_distance(q, qa) == doctest::Approx(expect).epsilon(0.02));
  }
}

TEST_CASE("amplitude distance is nearly symmetric") {
  const Grid g = Grid::unit(201);
  for (double c : {0.3, 0.4, 0.6}) {
    const Srvf a = to_srvf(bump(g, 0.5));
    const Srvf b = to_srvf(bump(g, c, 1.5));
    const double ab = amplitude_distance(a, b);
    const double ba = amplitude_distance(b, a);
    CHECK(std::abs(ab - ba) <= 0.05 * std::max(ab, ba));
  }
}

TEST_CASE("penalty pulls the warp toward the identity") {
  const Grid g = Grid::unit(201);
  const Srvf ref = to_srvf(bump(g, 0.55));
  const Srvf mov = to_srvf(bump(g, 0.35));
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
    DpOptions o;
    o.lambda = lambda;
    const double d = dp_align(ref, mov, o).distance_to_identity();
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("refinement never raises the energy") {
  const Grid g = Grid::unit(101);
  const Srvf ref = to_srvf(bump(g, 0.5));
  const Srvf mov = to_srvf(bump(g, 0.37, 1.3));
  DpOptions raw;
  raw.refine = false;
  for (int passes : {1, 5}) {
    DpOptions o;
    o.refine_passes = passes;
    CHECK(alignment_energy(ref, mov, dp_align(ref, mov, o), 0.0) <=
          alignment_energy(ref, mov, dp_align(ref, mov, raw), 0.0) + 1e-15);
  }
}

TEST_CASE("ensemble decomposition") {
  const Grid g = Grid::unit(201);
  const GridFunction ref = synthetic::example1_curve(g, synthetic::kExample1Truth);
  SUBCASE("reference against itself") {
    const std::vector<GridFunction> curves{ref};
    const DecomposedEnsemble e = decompose_ensemble(ref, curves, Eigen::MatrixXd::Zero(1, 3));
    CHECK(ecal::test::sup_diff(e.aligned_curves[0].values(), ref.values()) < 1e-8);
    CHECK(e.warps[0].distance_to_identity() < 1e-8);
    for (double v : e.shooting_vectors[0].values()) CHECK(std::abs(v) < 1e-8);
  }
  SUBCASE("example 1 ensemble") {
    const auto design = synthetic::sample_design(100, 3, {}, 4);
    std::vector<GridFunction> curves;
    for (Eigen::Index i = 0; i < design.inputs.rows(); ++i) {
      const Eigen::VectorXd u = design.inputs.row(i);
      curves.push_back(synthetic::example1_curve(g, std::span<const double>(u.data(), 3)));
    }
    const DecomposedEnsemble e = decompose_ensemble(ref, curves, design.inputs);
    REQUIRE(e.size() == 100);
    const auto peak = [](std::span<const double> v) {
      return static_cast<long>(std::max_element(v.begin(), v.end()) - v.begin());
    };
    const long ref_peak = peak(ref.values());
    const Srvf qref = to_srvf(ref);
    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto a = e.aligned_curves[i].values();
      const double top = *std::max_element(a.begin(), a.end());
      CHECK(std::labs(peak(a) - ref_peak) <= 1);
      CHECK(local_maxima(a, 0.01 * top) == 1);
      CHECK(std::abs(trapezoid(g.points(), e.shooting_vectors[i].values())) < 1e-6);
      before += squared_distance(qref, to_srvf(curves[i]));
      after += e.amplitude_distances[i];
    }
    CHECK(after < before);
  }
}

}  // TEST_SUITE
