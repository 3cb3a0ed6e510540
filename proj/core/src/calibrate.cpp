#include "ecal/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "ecal/error.hpp"

namespace ecal {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double gaussian_block(std::span<const double> obs, const std::vector<double>& mean,
                      const std::vector<double>& delta, const BlockCovariance& cov) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t t = 0; t < obs.size(); ++t) {
    r(static_cast<Eigen::Index>(t)) = obs[t] - mean[t] - (delta.empty() ? 0.0 : delta[t]);
  }
  return cov.log_density(r);
}

std::size_t block_count(const std::optional<DiscrepancyBasis>& b, std::size_t n_exp) {
  if (!b) return 0;
  return static_cast<std::size_t>(b->size()) * (b->per_experiment ? n_exp : 1);
}

std::size_t block_offset(const std::optional<DiscrepancyBasis>& b, std::size_t experiment) {
  if (!b || !b->per_experiment) return 0;
  return static_cast<std::size_t>(b->size()) * experiment;
}

}  // namespace

BlockCovariance::BlockCovariance(double sigma2, const std::vector<double>& var,
                                 const Eigen::MatrixXd& factor)
    : factor_(factor) {
  const auto m = static_cast<Eigen::Index>(var.empty() ? factor.rows() : var.size());
  if (m == 0) {
    throw DataError("BlockCovariance: size unknown without a variance or factor");
  }
  if (factor.size() > 0 && factor.rows() != m) {
    throw DataError("BlockCovariance: factor and variance lengths differ");
  }
  diag_ = Eigen::VectorXd::Constant(m, sigma2);
  for (std::size_t t = 0; t < var.size(); ++t) diag_(static_cast<Eigen::Index>(t)) += var[t];
  log_det_ = diag_.array().log().sum();
  if (factor_.cols() > 0) {
    scaled_factor_ = diag_.cwiseInverse().asDiagonal() * factor_;
    Eigen::MatrixXd cap = factor_.transpose() * scaled_factor_;
    cap.diagonal().array() += 1.0;
    capacitance_.compute(cap);
    if (capacitance_.info() != Eigen::Success) {
      throw NumericalError("BlockCovariance: capacitance matrix is not positive definite");
    }
    log_det_ += 2.0 * capacitance_.matrixLLT().diagonal().array().log().sum();
  }
}

double BlockCovariance::log_density(const Eigen::VectorXd& residual) const {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const Eigen::VectorXd w = residual.cwiseQuotient(diag_);
  double quad = residual.dot(w);
  if (factor_.cols() > 0) {
    const Eigen::VectorXd u = factor_.transpose() * w;
    quad -= u.dot(capacitance_.solve(u));
  }
  return -0.5 * (static_cast<double>(residual.size()) * log2pi + log_det_ + quad);
}

Eigen::MatrixXd BlockCovariance::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd out = diag_.cwiseInverse().asDiagonal() * b;
  if (factor_.cols() > 0) {
    out -= scaled_factor_ * capacitance_.solve(factor_.transpose() * out);
  }
  return out;
}

Eigen::VectorXd BlockCovariance::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(diag_.size());
  for (Eigen::Index t = 0; t < out.size(); ++t) out(t) = std::sqrt(diag_(t)) * normal(rng);
  for (Eigen::Index k = 0; k < factor_.cols(); ++k) out += normal(rng) * factor_.col(k);
  return out;
}

BlockCovariance noise_covariance(const ForwardOutput& output, bool aligned, double sigma2,
                                 const CalibrationProblem& problem) {
  const auto& mean = aligned ? output.aligned : output.shooting;
  if (!problem.include_emulator_variance) {
    return BlockCovariance(sigma2, std::vector<double>(mean.size(), 0.0), Eigen::MatrixXd());
  }
  const auto& var = aligned ? output.aligned_var : output.shooting_var;
  const auto& factor = aligned ? output.aligned_factor : output.shooting_factor;
  return BlockCovariance(sigma2, var.empty() ? std::vector<double>(mean.size(), 0.0) : var, factor);
}

void DiscrepancyBasis::validate(std::size_t grid_size) const {
  if (basis_matrix.cols() < 1) {
    throw ConfigError("discrepancy basis needs at least one column");
  }
  if (static_cast<std::size_t>(basis_matrix.rows()) != grid_size) {
    throw DataError("discrepancy basis has " + std::to_string(basis_matrix.rows()) +
                    " rows for a grid of " + std::to_string(grid_size));
  }
  if (!basis_matrix.allFinite()) {
    throw DataError("discrepancy basis has non-finite entries");
  }
  if (coeff_prior_sd.size() != static_cast<std::size_t>(basis_matrix.cols())) {
    throw ConfigError("discrepancy basis needs one prior sd per column");
  }
  for (double s : coeff_prior_sd) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("discrepancy coefficient prior sd must be positive");
    }
  }
}

std::vector<double> DiscrepancyBasis::apply(std::span<const double> coeffs) const {
  std::vector<double> out(static_cast<std::size_t>(basis_matrix.rows()), 0.0);
  for (Eigen::Index k = 0; k < basis_matrix.cols(); ++k) {
    const double c = coeffs[static_cast<std::size_t>(k)];
    if (c == 0.0) continue;
    for (Eigen::Index t = 0; t < basis_matrix.rows(); ++t) {
      out[static_cast<std::size_t>(t)] += c * basis_matrix(t, k);
    }
  }
  return out;
}

DiscrepancyBasis build_shift_discrepancy_basis(const Grid& grid, std::span<const double> breakpoints,
                                               int active_segment, double coeff_prior_sd) {
  if (breakpoints.size() != 3) {
    throw ConfigError("shift discrepancy basis needs exactly 3 breakpoints");
  }
  const std::array<double, 5> edges{0.0, breakpoints[0], breakpoints[1], breakpoints[2], 1.0};
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i])) {
      throw ConfigError("shift discrepancy breakpoints must be strictly increasing inside (0,1)");
    }
  }
  if (active_segment < 0 || active_segment > 3) {
    throw ConfigError("shift discrepancy active segment must be in 0..3");
  }
  const Grid unit = grid.normalized();
  const auto n = static_cast<Eigen::Index>(unit.size());
  DiscrepancyBasis b{Eigen::MatrixXd::Zero(n, 4), std::vector<double>(4, coeff_prior_sd), true};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = unit[static_cast<std::size_t>(i)];
    int seg = 3;
    while (seg > 0 && s < edges[static_cast<std::size_t>(seg)]) --seg;
    const double lo = edges[static_cast<std::size_t>(seg)];
    const double hi = edges[static_cast<std::size_t>(seg) + 1];
    b.basis_matrix(i, seg) = seg == active_segment ? (s - lo) / (hi - lo) : 1.0;
  }
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double m = b.basis_matrix.col(k).cwiseAbs().maxCoeff();
    if (!(m > 0.0)) {
      throw ConfigError("shift discrepancy segment " + std::to_string(k) +
                        " contains no grid points");
    }
    b.basis_matrix.col(k) /= m;
  }
  b.validate(unit.size());
  return b;
}

EmulatorForward::EmulatorForward(std::shared_ptr<const Emulator> aligned,
                                 std::shared_ptr<const Emulator> shooting)
    : aligned_(std::move(aligned)), shooting_(std::move(shooting)) {
  if (!aligned_) {
    throw ConfigError("EmulatorForward: aligned-curve emulator is required");
  }
}

ForwardOutput EmulatorForward::evaluate(std::size_t, const Experiment& e,
                                        std::span<const double> theta) const {
  std::vector<double> input(e.x);
  input.insert(input.end(), theta.begin(), theta.end());
  ForwardOutput out;
  EmulatorPrediction a = aligned_->predict(input);
  out.aligned.assign(a.mean.values().begin(), a.mean.values().end());
  out.aligned_var = std::move(a.truncation_variance);
  out.aligned_factor = std::move(a.error_factor);
  if (shooting_) {
    EmulatorPrediction s = shooting_->predict(input);
    out.shooting.assign(s.mean.values().begin(), s.mean.values().end());
    out.shooting_var = std::move(s.truncation_variance);
    out.shooting_factor = std::move(s.error_factor);
  }
  return out;
}

void EmulatorForward::check(const Experiment& e, bool use_shooting) const {
  const auto dim = static_cast<int>(e.x.size());
  if (!aligned_->grid().matches(e.aligned_obs.grid())) {
    throw DataError("aligned observation grid does not match the aligned-curve emulator grid");
  }
  if (aligned_->input_dim() <= dim) {
    throw DataError("aligned-curve emulator input dimension is too small for the conditions");
  }
  if (use_shooting) {
    if (!shooting_) {
      throw ConfigError("shooting block requested without a shooting-vector emulator");
    }
    if (!shooting_->grid().matches(e.shooting_obs.grid())) {
      throw DataError("shooting observation grid does not match the shooting-vector emulator grid");
    }
    if (shooting_->input_dim() != aligned_->input_dim()) {
      throw DataError("aligned and shooting emulators take different input dimensions");
    }
  }
}

DirectForward::DirectForward(Simulator simulator, std::vector<GridFunction> references,
                             DpOptions options)
    : simulator_(std::move(simulator)), references_(std::move(references)), options_(options) {
  if (!simulator_) {
    throw ConfigError("DirectForward: simulator is required");
  }
}

ForwardOutput DirectForward::evaluate(std::size_t experiment, const Experiment& e,
                                      std::span<const double> theta) const {
  std::vector<double> input(e.x);
  input.insert(input.end(), theta.begin(), theta.end());
  const GridFunction y = simulator_(input);
  for (double v : y.values()) {
    if (!std::isfinite(v)) {
      throw NumericalError("simulator returned a non-finite value");
    }
  }
  const AlignmentResult r = align_curve(references_.at(experiment), y, options_);
  const ShootingVector v = gamma_to_shooting(r.gamma);
  ForwardOutput out;
  out.aligned.assign(r.aligned.values().begin(), r.aligned.values().end());
  out.shooting.assign(v.values().begin(), v.values().end());
  return out;
}

void DirectForward::check(const Experiment& e, bool) const {
  for (const auto& ref : references_) {
    if (!ref.grid().matches(e.aligned_obs.grid())) {
      throw DataError("reference curve grid does not match the aligned observation grid");
    }
  }
}

void CalibrationProblem::validate() const {
  if (!forward) {
    throw ConfigError("calibration problem has no forward model");
  }
  if (experiments.empty()) {
    throw ConfigError("calibration problem has no experiments");
  }
  if (theta_priors.empty()) {
    throw ConfigError("calibration problem needs at least one parameter prior");
  }
  for (const auto& e : experiments) {
    forward->check(e, use_shooting);
    if (e.aligned_obs.size() != e.shooting_obs.size()) {
      throw DataError("aligned and shooting observations have different lengths");
    }
  }
  if (discrepancy_aligned) discrepancy_aligned->validate(experiments.front().aligned_obs.size());
  if (discrepancy_shooting) discrepancy_shooting->validate(experiments.front().shooting_obs.size());
  if (fixed_sigma2_aligned && !(*fixed_sigma2_aligned > 0.0)) {
    throw ConfigError("fixed sigma2_aligned must be positive");
  }
  if (fixed_sigma2_shooting && !(*fixed_sigma2_shooting > 0.0)) {
    throw ConfigError("fixed sigma2_shooting must be positive");
  }
}

std::size_t CalibrationProblem::coeff_count() const {
  return block_count(discrepancy_aligned, experiments.size()) +
         block_count(discrepancy_shooting, experiments.size());
}

std::size_t CalibrationProblem::aligned_coeff_offset(std::size_t experiment) const {
  return block_offset(discrepancy_aligned, experiment);
}

std::size_t CalibrationProblem::shooting_coeff_offset(std::size_t experiment) const {
  return block_count(discrepancy_aligned, experiments.size()) +
         block_offset(discrepancy_shooting, experiment);
}

Prior default_sigma2_prior(double signal_variance) {
  if (!(signal_variance > 0.0)) {
    throw DataError("default sigma2 prior needs a positive signal variance");
  }
  return Prior::inverse_gamma(2.0, 0.01 * signal_variance);
}

std::optional<std::vector<ForwardOutput>> evaluate_forward(const CalibrationProblem& problem,
                                                           std::span<const double> theta) {
  std::vector<ForwardOutput> out;
  out.reserve(problem.experiments.size());
  try {
    for (std::size_t i = 0; i < problem.experiments.size(); ++i) {
      out.push_back(problem.forward->evaluate(i, problem.experiments[i], theta));
      const auto& o = out.back();
      if (!all_finite(o.aligned) || !all_finite(o.shooting) || !all_finite(o.aligned_var) ||
          !all_finite(o.shooting_var) || !o.aligned_factor.allFinite() ||
          !o.shooting_factor.allFinite()) {
        spdlog::warn("forward model returned non-finite output; likelihood set to -inf");
        return std::nullopt;
      }
    }
  } catch (const NumericalError& e) {
    spdlog::warn("forward model failed ({}); likelihood set to -inf", e.what());
    return std::nullopt;
  }
  return out;
}

LikelihoodTerms likelihood_terms(const std::vector<ForwardOutput>& outputs, double sigma2_aligned,
                                 double sigma2_shooting, std::span<const double> coeffs,
                                 const CalibrationProblem& problem) {
  LikelihoodTerms terms;
  for (std::size_t i = 0; i < problem.experiments.size(); ++i) {
    const Experiment& e = problem.experiments[i];
    const ForwardOutput& o = outputs[i];
    std::vector<double> delta;
    if (problem.discrepancy_aligned) {
      delta = problem.discrepancy_aligned->apply(coeffs.subspan(problem.aligned_coeff_offset(i)));
    }
    terms.aligned += gaussian_block(e.aligned_obs.values(), o.aligned, delta,
                                    noise_covariance(o, true, sigma2_aligned, problem));
    if (problem.use_shooting) {
      delta.clear();
      if (problem.discrepancy_shooting) {
        delta =
            problem.discrepancy_shooting->apply(coeffs.subspan(problem.shooting_coeff_offset(i)));
      }
      terms.shooting += gaussian_block(e.shooting_obs.values(), o.shooting, delta,
                                       noise_covariance(o, false, sigma2_shooting, problem));
    }
  }
  return terms;
}

double log_likelihood(std::span<const double> theta, double sigma2_aligned, double sigma2_shooting,
                      std::span<const double> coeffs, const CalibrationProblem& problem) {
  if (coeffs.size() != problem.coeff_count()) {
    throw DataError("log_likelihood: expected " + std::to_string(problem.coeff_count()) +
                    " discrepancy coefficients, got " + std::to_string(coeffs.size()));
  }
  if (!(sigma2_aligned > 0.0) || (problem.use_shooting && !(sigma2_shooting > 0.0))) {
    return kNegInf;
  }
  const auto outputs = evaluate_forward(problem, theta);
  if (!outputs) return kNegInf;
  return likelihood_terms(*outputs, sigma2_aligned, sigma2_shooting, coeffs, problem).total();
}

double log_prior(std::span<const double> theta, double sigma2_aligned, double sigma2_shooting,
                 std::span<const double> coeffs, const CalibrationProblem& problem) {
  double lp = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    lp += problem.theta_priors[j].log_pdf(theta[j]);
  }
  if (!problem.fixed_sigma2_aligned) lp += problem.sigma2_aligned_prior.log_pdf(sigma2_aligned);
  if (problem.use_shooting && !problem.fixed_sigma2_shooting) {
    lp += problem.sigma2_shooting_prior.log_pdf(sigma2_shooting);
  }
  const auto add_block = [&](const std::optional<DiscrepancyBasis>& b, std::size_t offset) {
    for (int k = 0; k < b->size(); ++k) {
      const double sd = b->coeff_prior_sd[static_cast<std::size_t>(k)];
      const double z = coeffs[offset + static_cast<std::size_t>(k)] / sd;
      lp += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  };
  const std::size_t n_exp = problem.experiments.size();
  if (problem.discrepancy_aligned) {
    for (std::size_t i = 0; i < (problem.discrepancy_aligned->per_experiment ? n_exp : 1); ++i) {
      add_block(problem.discrepancy_aligned, problem.aligned_coeff_offset(i));
    }
  }
  if (problem.discrepancy_shooting) {
    for (std::size_t i = 0; i < (problem.discrepancy_shooting->per_experiment ? n_exp : 1); ++i) {
      add_block(problem.discrepancy_shooting, problem.shooting_coeff_offset(i));
    }
  }
  return lp;
}

std::vector<double> PosteriorSamples::theta_row(std::size_t draw) const {
  std::vector<double> r(static_cast<std::size_t>(theta.cols()));
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    r[static_cast<std::size_t>(j)] = theta(static_cast<Eigen::Index>(draw), j);
  }
  return r;
}

std::vector<double> PosteriorSamples::coeff_row(std::size_t draw) const {
  std::vector<double> r(static_cast<std::size_t>(discrepancy_coeffs.cols()));
  for (Eigen::Index j = 0; j < discrepancy_coeffs.cols(); ++j) {
    r[static_cast<std::size_t>(j)] = discrepancy_coeffs(static_cast<Eigen::Index>(draw), j);
  }
  return r;
}

PredictiveSample posterior_predict(const PosteriorSamples& samples,
                                   const CalibrationProblem& problem,
                                   const PredictOptions& options) {
  if (samples.draws() == 0) {
    throw DataError("posterior_predict: no posterior draws");
  }
  if (options.n_draws < 1) {
    throw ConfigError("posterior_predict: n_draws must be >= 1");
  }
  if (options.experiment >= problem.experiments.size()) {
    throw ConfigError("posterior_predict: experiment index out of range");
  }
  const std::size_t ei = options.experiment;
  const Experiment& e = problem.experiments[ei];
  const Grid& grid = e.aligned_obs.grid();
  const Grid& unit = e.shooting_obs.grid();

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.draws() - 1);

  PredictiveSample out;
  const int max_failures = 10 * options.n_draws;
  while (static_cast<int>(out.curves.size()) < options.n_draws) {
    const std::size_t d = pick(rng);
    const std::vector<double> theta = samples.theta_row(d);
    const std::vector<double> coeffs = samples.coeff_row(d);
    try {
      ForwardOutput o = problem.forward->evaluate(ei, e, theta);
      std::vector<double> y = o.aligned;
      if (options.include_discrepancy && problem.discrepancy_aligned) {
        const auto delta =
            problem.discrepancy_aligned->apply(std::span(coeffs).subspan(problem.aligned_coeff_offset(ei)));
        for (std::size_t t = 0; t < y.size(); ++t) y[t] += delta[t];
      }
      if (options.include_noise) {
        const Eigen::VectorXd eps =
            noise_covariance(o, true, samples.sigma2_aligned[d], problem).sample(rng);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] += eps(static_cast<Eigen::Index>(t));
      }
      GridFunction curve(grid, std::move(y));
      if (problem.use_shooting) {
        std::vector<double> v = o.shooting;
        if (options.include_discrepancy && problem.discrepancy_shooting) {
          const auto delta = problem.discrepancy_shooting->apply(
              std::span(coeffs).subspan(problem.shooting_coeff_offset(ei)));
          for (std::size_t t = 0; t < v.size(); ++t) v[t] += delta[t];
        }
        if (options.include_noise) {
          const Eigen::VectorXd eps =
              noise_covariance(o, false, samples.sigma2_shooting[d], problem).sample(rng);
          for (std::size_t t = 0; t < v.size(); ++t) v[t] += eps(static_cast<Eigen::Index>(t));
        }
        const ShootingVector sv(unit, project_to_tangent(unit, v));
        const WarpingFunction gamma = shooting_to_gamma(sv);
        curve = warp_curve(curve, gamma.inverse());
      }
      out.curves.push_back(std::move(curve));
      out.draw_index.push_back(d);
    } catch (const std::runtime_error& err) {
      if (++out.resampled > max_failures) {
        throw NumericalError(std::string("posterior_predict: too many failed draws, last: ") +
                             err.what());
      }
    }
  }
  if (out.resampled > 0) {
    spdlog::info("posterior_predict: {} draws resampled", out.resampled);
  }
  return out;
}

}  // namespace ecal
