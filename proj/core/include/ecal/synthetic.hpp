#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ecal/grid.hpp"

namespace ecal::synthetic {

inline constexpr double kBumpWidth = 0.05;

// Gaussian bump of width 0.05 and area u1, centred at
// sin(2 pi u0^2)/4 - u0/10 + 0.5. The third input is a nuisance and has no
// effect on the output.
GridFunction example1_curve(const Grid& t, std::span<const double> u);
double example1_center(double u0);
inline constexpr double kExample1Truth[3] = {0.1028, 0.5930, 0.0};

// Model for the discrepancy study: bump centred at u0 + 0.1 with area u1.
GridFunction example2_curve(const Grid& t, std::span<const double> u);
// Observation: bump centred at u0* + 0.3 with u* = (0.3, 0.2), i.e. the model
// at the truth shifted later by 0.2.
GridFunction example2_observation(const Grid& t);
inline constexpr double kExample2Truth[2] = {0.3, 0.2};
inline constexpr double kExample2Shift = 0.2;
inline constexpr double kExample2Upper = 0.3;

// Vinet pressure-density relation with eta = (rho0 / rho)^(1/3).
double vinet_pressure(double rho, double rho0, double bulk_modulus, double bulk_modulus_prime);

enum class DesignKind { kUniform, kLatinHypercube };

struct DesignSpec {
  DesignKind kind = DesignKind::kUniform;
  // Per-column [lo, hi]; empty means the unit cube.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct SyntheticDesign {
  Eigen::MatrixXd inputs;  // n x p
  std::uint64_t seed = 0;
};

SyntheticDesign sample_design(int n, int p, const DesignSpec& spec, std::uint64_t seed);

// Design used for the discrepancy study: two columns on U[0, 0.3] and a
// nuisance column on U[0, 1].
DesignSpec example2_design_spec();

}  // namespace ecal::synthetic
