#include "ecal/warping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <spdlog/spdlog.h>

#include "ecal/error.hpp"
#include "ecal/interp.hpp"

namespace ecal {
namespace {

constexpr double kSeriesThreshold = 1e-4;

// x / sin(x), with the Taylor series near 0.
double x_over_sin(double x) {
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0;
  }
  return x / std::sin(x);
}

// sin(x) / x, with the Taylor series near 0.
double sinc(double x) {
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

void require_unit(const Grid& g, const char* what) {
  if (!g.is_unit()) {
    throw DataError(std::string(what) + ": grid must span [0,1]");
  }
}

}  // namespace

WarpingFunction::WarpingFunction(Grid unit_grid, std::vector<double> values)
    : grid_(std::move(unit_grid)), values_(std::move(values)) {
  require_unit(grid_, "WarpingFunction");
  if (values_.size() != grid_.size()) {
    throw DataError("WarpingFunction: length mismatch");
  }
  if (values_.front() != 0.0 || values_.back() != 1.0) {
    throw DataError("WarpingFunction: endpoints must be pinned at 0 and 1");
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < values_[i - 1]) {
      throw DataError("WarpingFunction: values must be nondecreasing (index " +
                      std::to_string(i) + ")");
    }
  }
}

WarpingFunction WarpingFunction::identity(const Grid& unit_grid) {
  require_unit(unit_grid, "WarpingFunction::identity");
  return WarpingFunction(unit_grid,
                         std::vector<double>(unit_grid.points().begin(), unit_grid.points().end()));
}

WarpingFunction WarpingFunction::repaired(Grid unit_grid, std::vector<double> values, double eps) {
  if (values.size() != unit_grid.size()) {
    throw DataError("WarpingFunction::repaired: length mismatch");
  }
  values.front() = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("WarpingFunction::repaired: non-finite value");
    }
    values[i] = std::max(values[i], values[i - 1] + eps);
  }
  const double last = values.back();
  for (double& v : values) {
    v = std::min(1.0, v / last);
  }
  values.back() = 1.0;
  return WarpingFunction(std::move(unit_grid), std::move(values));
}

double WarpingFunction::operator()(double t) const {
  return linear_interp(grid_.points(), values_, t);
}

bool WarpingFunction::strictly_increasing() const noexcept {
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) {
      return false;
    }
  }
  return true;
}

WarpingFunction WarpingFunction::inverse() const {
  if (!strictly_increasing()) {
    throw DataError("WarpingFunction::inverse: warp must be strictly increasing");
  }
  const auto t = grid_.points();
  std::vector<double> inv(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    inv[i] = linear_interp(values_, t, t[i]);
  }
  inv.front() = 0.0;
  inv.back() = 1.0;
  return WarpingFunction(grid_, std::move(inv));
}

double WarpingFunction::distance_to_identity() const noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    d = std::max(d, std::abs(values_[i] - grid_[i]));
  }
  return d;
}

SrsfPsi::SrsfPsi(Grid unit_grid, std::vector<double> values)
    : grid_(std::move(unit_grid)), values_(std::move(values)) {
  require_unit(grid_, "SrsfPsi");
  if (values_.size() != grid_.size()) {
    throw DataError("SrsfPsi: length mismatch");
  }
  for (double& v : values_) {
    if (!std::isfinite(v)) {
      throw DataError("SrsfPsi: non-finite value");
    }
    if (v < 0.0) {
      if (v < -1e-12) {
        throw NumericalError("SrsfPsi: value outside the positive orthant");
      }
      v = 0.0;
    }
  }
  raw_norm_ = std::sqrt(trapezoid_product(grid_.points(), values_, values_));
  if (!(raw_norm_ > 0.0)) {
    throw NumericalError("SrsfPsi: zero norm");
  }
  if (raw_norm_ != 1.0) {
    for (double& v : values_) {
      v /= raw_norm_;
    }
    spdlog::debug("SrsfPsi: renormalized by factor {:.3e}", raw_norm_);
  }
}

ShootingVector::ShootingVector(Grid unit_grid, std::vector<double> values)
    : grid_(std::move(unit_grid)), values_(std::move(values)) {
  require_unit(grid_, "ShootingVector");
  if (values_.size() != grid_.size()) {
    throw DataError("ShootingVector: length mismatch");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw DataError("ShootingVector: non-finite value");
    }
  }
  const double mean = trapezoid(grid_.points(), values_);
  if (std::abs(mean) > kTangencyTolerance) {
    throw DataError("ShootingVector: not tangent at the identity (integral " +
                    std::to_string(mean) + ")");
  }
  norm_ = std::sqrt(trapezoid_product(grid_.points(), values_, values_));
  if (!(norm_ < std::numbers::pi)) {
    throw NumericalError("ShootingVector: norm " + std::to_string(norm_) +
                         " outside the injectivity radius");
  }
}

ShootingVector ShootingVector::zero(const Grid& unit_grid) {
  return ShootingVector(unit_grid, std::vector<double>(unit_grid.size(), 0.0));
}

std::vector<double> project_to_tangent(const Grid& unit_grid, std::span<const double> values) {
  require_unit(unit_grid, "project_to_tangent");
  const double mean = trapezoid(unit_grid.points(), values);
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) {
    v -= mean;
  }
  return out;
}

SrsfPsi gamma_to_psi(const WarpingFunction& gamma) {
  std::vector<double> d = difference(gamma.grid().points(), gamma.values(),
                                     DifferenceScheme::kCentral);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      throw NumericalError("gamma_to_psi: warp derivative is not positive at index " +
                           std::to_string(i));
    }
    d[i] = std::sqrt(d[i]);
  }
  return SrsfPsi(gamma.grid(), std::move(d));
}

WarpingFunction psi_to_gamma(const SrsfPsi& psi) {
  std::vector<double> sq(psi.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = psi[i] * psi[i];
  }
  std::vector<double> g = cumulative_trapezoid(psi.grid().points(), sq);
  const double total = g.back();
  for (double& v : g) {
    v = std::clamp(v / total, 0.0, 1.0);
  }
  g.front() = 0.0;
  g.back() = 1.0;
  return WarpingFunction(psi.grid(), std::move(g));
}

double sphere_distance(const SrsfPsi& a, const SrsfPsi& b) {
  if (!a.grid().matches(b.grid())) {
    throw DataError("phase_distance: warps live on different grids");
  }
  const double ip = trapezoid_product(a.grid().points(), a.values(), b.values());
  return std::acos(std::clamp(ip, -1.0, 1.0));
}

double phase_distance(const WarpingFunction& a, const WarpingFunction& b) {
  return sphere_distance(gamma_to_psi(a), gamma_to_psi(b));
}

namespace {

std::vector<double> exp_map_values(const ShootingVector& v) {
  const double n = v.norm();
  const double c = std::cos(n);
  const double s = sinc(n);
  std::vector<double> psi(v.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = c + s * v[i];
  }
  return psi;
}

}  // namespace

SrsfPsi exp_map_identity(const ShootingVector& v) {
  return SrsfPsi(v.grid(), exp_map_values(v));
}

ShootingVector inv_exp_map(const SrsfPsi& psi) {
  const double ip = std::clamp(trapezoid(psi.grid().points(), psi.values()), -1.0, 1.0);
  const double kappa = std::acos(ip);
  if (kappa >= std::numbers::pi - 1e-6) {
    throw NumericalError("inv_exp_map: psi is antipodal to the identity");
  }
  const double scale = x_over_sin(kappa);
  std::vector<double> v(psi.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = scale * (psi[i] - ip);
  }
  return ShootingVector(psi.grid(), std::move(v));
}

ShootingVector gamma_to_shooting(const WarpingFunction& gamma) {
  return inv_exp_map(gamma_to_psi(gamma));
}

WarpingFunction shooting_to_gamma(const ShootingVector& v) {
  // psi^2 integrates to a valid warp even where the geodesic has left the
  // positive orthant, so the orthant check is not applied here.
  std::vector<double> sq = exp_map_values(v);
  for (double& x : sq) {
    x *= x;
  }
  std::vector<double> g = cumulative_trapezoid(v.grid().points(), sq);
  const double total = g.back();
  if (!(total > 0.0)) {
    throw NumericalError("shooting_to_gamma: degenerate warp");
  }
  for (double& x : g) {
    x = std::clamp(x / total, 0.0, 1.0);
  }
  g.front() = 0.0;
  g.back() = 1.0;
  return WarpingFunction(v.grid(), std::move(g));
}

}  // namespace ecal
