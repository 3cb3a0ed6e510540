#include "ecal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ecal/error.hpp"

namespace ecal::synthetic {
namespace {

GridFunction bump(const Grid& t, double center, double area) {
  const double peak = area / (kBumpWidth * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double z = (t[i] - center) / kBumpWidth;
    y[i] = peak * std::exp(-0.5 * z * z);
  }
  return GridFunction(t, std::move(y));
}

}  // namespace

double example1_center(double u0) {
  return std::sin(2.0 * std::numbers::pi * u0 * u0) / 4.0 - u0 / 10.0 + 0.5;
}

GridFunction example1_curve(const Grid& t, std::span<const double> u) {
  if (u.size() != 3) {
    throw ConfigError("example1_curve: expects 3 inputs");
  }
  return bump(t, example1_center(u[0]), u[1]);
}

GridFunction example2_curve(const Grid& t, std::span<const double> u) {
  if (u.size() < 2) {
    throw ConfigError("example2_curve: expects at least 2 inputs");
  }
  return bump(t, u[0] + 0.1, u[1]);
}

GridFunction example2_observation(const Grid& t) {
  return bump(t, kExample2Truth[0] + 0.3, kExample2Truth[1]);
}

double vinet_pressure(double rho, double rho0, double bulk_modulus, double bulk_modulus_prime) {
  if (!(rho > 0.0) || !(rho0 > 0.0) || !(bulk_modulus > 0.0)) {
    throw ConfigError("vinet_pressure: densities and bulk modulus must be positive");
  }
  const double eta = std::cbrt(rho0 / rho);
  return 3.0 * bulk_modulus * ((1.0 - eta) / (eta * eta)) *
         std::exp(1.5 * (bulk_modulus_prime - 1.0) * (1.0 - eta));
}

DesignSpec example2_design_spec() {
  return DesignSpec{DesignKind::kUniform, {0.0, 0.0, 0.0}, {kExample2Upper, kExample2Upper, 1.0}};
}

SyntheticDesign sample_design(int n, int p, const DesignSpec& spec, std::uint64_t seed) {
  if (n < 1 || p < 1) {
    throw ConfigError("sample_design: n and p must be >= 1");
  }
  const auto up = static_cast<std::size_t>(p);
  if ((!spec.lower.empty() && spec.lower.size() != up) ||
      (!spec.upper.empty() && spec.upper.size() != up)) {
    throw ConfigError("sample_design: bounds must have one entry per column");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(n, p);

  if (spec.kind == DesignKind::kUniform) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        x(i, j) = unif(rng);
      }
    }
  } else {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 0; j < p; ++j) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int i = 0; i < n; ++i) {
        x(i, j) = (perm[static_cast<std::size_t>(i)] + unif(rng)) / n;
      }
    }
  }
  for (int j = 0; j < p; ++j) {
    const double lo = spec.lower.empty() ? 0.0 : spec.lower[static_cast<std::size_t>(j)];
    const double hi = spec.upper.empty() ? 1.0 : spec.upper[static_cast<std::size_t>(j)];
    if (!(hi > lo)) {
      throw ConfigError("sample_design: upper bound must exceed lower bound");
    }
    x.col(j) = (lo + (hi - lo) * x.col(j).array()).matrix();
  }
  return SyntheticDesign{std::move(x), seed};
}

}  // namespace ecal::synthetic
