#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "ecal/grid.hpp"
#include "ecal/warping.hpp"

namespace ecal::test {

template <typename F>
GridFunction sampled(const Grid& g, F f) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
  return GridFunction(g, std::move(v));
}

inline double sup_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Smooth random warp t + sum_k a_k sin(k pi t) / (k pi), kept monotone by
// bounding sum |a_k| below one.
inline WarpingFunction random_warp(const Grid& g, std::mt19937_64& rng, double amplitude = 0.6) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double a[3];
  double total = 0.0;
  for (double& x : a) total += std::abs(x = u(rng));
  for (double& x : a) x *= amplitude / total;
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = g[i];
    for (int k = 1; k <= 3; ++k) s += a[k - 1] * std::sin(k * M_PI * g[i]) / (k * M_PI);
    v[i] = s;
  }
  v.front() = 0.0;
  v.back() = 1.0;
  return WarpingFunction(g, std::move(v));
}

}  // namespace ecal::test
