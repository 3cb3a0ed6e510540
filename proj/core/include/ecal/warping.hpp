#pragma once

#include <span>
#include <vector>

#include "ecal/grid.hpp"

namespace ecal {

/// Boundary-pinned, nondecreasing reparameterization of [0,1].
class WarpingFunction {
 public:
  // Validates gamma(0) = 0, gamma(1) = 1, nondecreasing, values in [0,1].
  WarpingFunction(Grid unit_grid, std::vector<double> values);

  static WarpingFunction identity(const Grid& unit_grid);

  // Enforces strict increase by clamping successive gaps to at least `eps`,
  // then rescales so the last value is exactly 1.
  static WarpingFunction repaired(Grid unit_grid, std::vector<double> values,
                                  double eps = 1e-8);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  // Piecewise-linear evaluation at an arbitrary point of [0,1].
  double operator()(double t) const;

  bool strictly_increasing() const noexcept;

  // Piecewise-linear inverse sampled on the same grid.
  WarpingFunction inverse() const;

  // sup_t |gamma(t) - t|
  double distance_to_identity() const noexcept;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// psi = sqrt(gamma'), a point on the positive orthant of the unit sphere in
/// L2[0,1]. Construction renormalizes to unit norm.
class SrsfPsi {
 public:
  SrsfPsi(Grid unit_grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  // Norm of the input before renormalization.
  double raw_norm() const noexcept { return raw_norm_; }

 private:
  Grid grid_;
  std::vector<double> values_;
  double raw_norm_ = 1.0;
};

/// Tangent vector at the identity psi = 1 (a shooting vector).
class ShootingVector {
 public:
  static constexpr double kTangencyTolerance = 1e-6;

  // Throws DataError when |int v| exceeds the tangency tolerance or when
  // ||v|| >= pi.
  ShootingVector(Grid unit_grid, std::vector<double> values);

  static ShootingVector zero(const Grid& unit_grid);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const noexcept { return norm_; }

  GridFunction as_function() const { return GridFunction(grid_, values_); }

 private:
  Grid grid_;
  std::vector<double> values_;
  double norm_ = 0.0;
};

// Removes the component along psi = 1 so the result is tangent at the identity.
std::vector<double> project_to_tangent(const Grid& unit_grid, std::span<const double> values);

SrsfPsi gamma_to_psi(const WarpingFunction& gamma);
WarpingFunction psi_to_gamma(const SrsfPsi& psi);

// Arc length on the sphere between the psi representations, in [0, pi].
double phase_distance(const WarpingFunction& a, const WarpingFunction& b);
double sphere_distance(const SrsfPsi& a, const SrsfPsi& b);

SrsfPsi exp_map_identity(const ShootingVector& v);
ShootingVector inv_exp_map(const SrsfPsi& psi);

ShootingVector gamma_to_shooting(const WarpingFunction& gamma);
WarpingFunction shooting_to_gamma(const ShootingVector& v);

}  // namespace ecal
