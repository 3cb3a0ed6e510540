#pragma once

#include <cstdint>

#include "ecal/calibrate.hpp"

namespace ecal {

struct McmcConfig {
  int n_iter = 20000;
  int n_burn = 5000;
  std::uint64_t seed = 0;
  // Initial random-walk step as a fraction of each prior's standard deviation.
  double proposal_scale_init = 0.1;
  int thin = 1;
  int max_consecutive_rejections = 1000;
  // Prior draws screened for the starting point.
  int init_draws = 200;
};

/// Adaptive random-walk Metropolis on theta, with Gibbs updates for the
/// noise variances (Metropolis on log sigma^2 when model variance enters the
/// likelihood) and conjugate Gaussian updates for discrepancy coefficients.
/// The proposal covariance and scale adapt during burn-in only.
PosteriorSamples mcmc_sample(const CalibrationProblem& problem, const McmcConfig& config);

}  // namespace ecal
