#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ecal/align.hpp"
#include "ecal/emulator.hpp"
#include "ecal/grid.hpp"
#include "ecal/prior.hpp"
#include "ecal/warping.hpp"

namespace ecal {

struct DiscrepancyBasis {
  Eigen::MatrixXd basis_matrix;  // N_T x K, columns are basis functions
  std::vector<double> coeff_prior_sd;
  bool per_experiment = true;

  int size() const noexcept { return static_cast<int>(basis_matrix.cols()); }
  void validate(std::size_t grid_size) const;
  std::vector<double> apply(std::span<const double> coeffs) const;
};

// Four columns on the segments cut by breakpoints b0 < b1 < b2: a unit
// indicator on each segment except `active_segment`, which instead carries a
// ramp rising from 0 to 1 across it.
DiscrepancyBasis build_shift_discrepancy_basis(const Grid& grid, std::span<const double> breakpoints,
                                               int active_segment = 1, double coeff_prior_sd = 1.0);

struct Experiment {
  GridFunction aligned_obs;
  ShootingVector shooting_obs;
  std::vector<double> x;  // experimental conditions, prepended to theta
};

// Model variance of a block is diag(*_var) + *_factor *_factor^T; both are
// empty when the model carries no variance.
struct ForwardOutput {
  std::vector<double> aligned;
  std::vector<double> aligned_var;
  Eigen::MatrixXd aligned_factor;
  std::vector<double> shooting;
  std::vector<double> shooting_var;
  Eigen::MatrixXd shooting_factor;
};

// Covariance sigma2 I + diag(var) + F F^T of one likelihood block, handled
// through the Woodbury identity.
class BlockCovariance {
 public:
  BlockCovariance(double sigma2, const std::vector<double>& var, const Eigen::MatrixXd& factor);

  double log_density(const Eigen::VectorXd& residual) const;
  // C^-1 b
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

 private:
  Eigen::VectorXd diag_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd scaled_factor_;  // D^-1 F
  Eigen::LLT<Eigen::MatrixXd> capacitance_;  // I + F^T D^-1 F
  double log_det_ = 0.0;
};

class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  // May throw NumericalError when the output cannot be formed.
  virtual ForwardOutput evaluate(std::size_t experiment, const Experiment& e,
                                 std::span<const double> theta) const = 0;
  // Throws DataError when the observation grids disagree with the model's.
  virtual void check(const Experiment& e, bool use_shooting) const = 0;
};

class EmulatorForward final : public ForwardModel {
 public:
  // `shooting` may be null when the shooting block is not used.
  EmulatorForward(std::shared_ptr<const Emulator> aligned, std::shared_ptr<const Emulator> shooting);

  ForwardOutput evaluate(std::size_t experiment, const Experiment& e,
                         std::span<const double> theta) const override;
  void check(const Experiment& e, bool use_shooting) const override;

 private:
  std::shared_ptr<const Emulator> aligned_;
  std::shared_ptr<const Emulator> shooting_;
};

using Simulator = std::function<GridFunction(std::span<const double> input)>;

// Runs the simulator and the elastic decomposition against the experiment's
// reference curve on every evaluation.
class DirectForward final : public ForwardModel {
 public:
  DirectForward(Simulator simulator, std::vector<GridFunction> references, DpOptions options = {});

  ForwardOutput evaluate(std::size_t experiment, const Experiment& e,
                         std::span<const double> theta) const override;
  void check(const Experiment& e, bool use_shooting) const override;

 private:
  Simulator simulator_;
  std::vector<GridFunction> references_;
  DpOptions options_;
};

struct CalibrationProblem {
  std::vector<Experiment> experiments;
  std::shared_ptr<const ForwardModel> forward;
  std::vector<Prior> theta_priors;
  Prior sigma2_aligned_prior = Prior::inverse_gamma(2.0, 1.0);
  Prior sigma2_shooting_prior = Prior::inverse_gamma(2.0, 1.0);
  std::optional<double> fixed_sigma2_aligned;
  std::optional<double> fixed_sigma2_shooting;
  std::optional<DiscrepancyBasis> discrepancy_aligned;
  std::optional<DiscrepancyBasis> discrepancy_shooting;
  // false drops the shooting block from the likelihood.
  bool use_shooting = true;
  // Adds the forward model's predictive variance to the noise variance.
  bool include_emulator_variance = true;

  int theta_dim() const noexcept { return static_cast<int>(theta_priors.size()); }
  void validate() const;

  // Coefficient vector layout: aligned-space blocks, then shooting-space
  // blocks; one block per experiment, or one shared block.
  std::size_t coeff_count() const;
  std::size_t aligned_coeff_offset(std::size_t experiment) const;
  std::size_t shooting_coeff_offset(std::size_t experiment) const;
};

// Inverse-gamma(2, b) with mean 1% of `signal_variance`.
Prior default_sigma2_prior(double signal_variance);

// Noise covariance of the aligned (or shooting) block of one experiment; the
// model variance enters only when problem.include_emulator_variance is set.
BlockCovariance noise_covariance(const ForwardOutput& output, bool aligned, double sigma2,
                                 const CalibrationProblem& problem);

struct LikelihoodTerms {
  double aligned = 0.0;
  double shooting = 0.0;
  double total() const noexcept { return aligned + shooting; }
};

LikelihoodTerms likelihood_terms(const std::vector<ForwardOutput>& outputs, double sigma2_aligned,
                                 double sigma2_shooting, std::span<const double> coeffs,
                                 const CalibrationProblem& problem);

// Returns -inf, with a warning, when the forward model fails or produces
// non-finite output.
double log_likelihood(std::span<const double> theta, double sigma2_aligned, double sigma2_shooting,
                      std::span<const double> coeffs, const CalibrationProblem& problem);

// Empty optional on forward-model failure.
std::optional<std::vector<ForwardOutput>> evaluate_forward(const CalibrationProblem& problem,
                                                           std::span<const double> theta);

double log_prior(std::span<const double> theta, double sigma2_aligned, double sigma2_shooting,
                 std::span<const double> coeffs, const CalibrationProblem& problem);

struct AcceptanceRates {
  double theta = 0.0;
  double sigma2_aligned = 0.0;
  double sigma2_shooting = 0.0;
};

struct PosteriorSamples {
  Eigen::MatrixXd theta;  // draws x theta_dim
  std::vector<double> sigma2_aligned;
  std::vector<double> sigma2_shooting;
  Eigen::MatrixXd discrepancy_coeffs;  // draws x coeff_count
  std::vector<double> log_posterior;
  AcceptanceRates acceptance;
  std::uint64_t seed = 0;

  std::size_t draws() const noexcept { return log_posterior.size(); }
  std::vector<double> theta_row(std::size_t draw) const;
  std::vector<double> coeff_row(std::size_t draw) const;
};

struct PredictOptions {
  int n_draws = 500;
  std::uint64_t seed = 0;
  std::size_t experiment = 0;
  bool include_discrepancy = true;
  bool include_noise = true;
};

struct PredictiveSample {
  std::vector<GridFunction> curves;  // original data space
  std::vector<std::size_t> draw_index;
  int resampled = 0;                 // draws rejected and redrawn
};

PredictiveSample posterior_predict(const PosteriorSamples& samples,
                                   const CalibrationProblem& problem,
                                   const PredictOptions& options = {});

}  // namespace ecal
