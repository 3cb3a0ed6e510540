#include "ecal/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ecal/error.hpp"

namespace ecal {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct State {
  std::vector<double> theta;
  double sigma2_aligned = 1.0;
  double sigma2_shooting = 1.0;
  std::vector<double> coeffs;
  std::vector<ForwardOutput> outputs;
  double log_lik = kNegInf;
  double log_post = kNegInf;
};

void refresh(State& s, const CalibrationProblem& problem) {
  const double lp = log_prior(s.theta, s.sigma2_aligned, s.sigma2_shooting, s.coeffs, problem);
  s.log_lik = likelihood_terms(s.outputs, s.sigma2_aligned, s.sigma2_shooting, s.coeffs, problem)
                  .total();
  s.log_post = lp + s.log_lik;
}

bool has_variance(const std::vector<ForwardOutput>& outputs, bool aligned) {
  for (const auto& o : outputs) {
    const auto& v = aligned ? o.aligned_var : o.shooting_var;
    if (std::any_of(v.begin(), v.end(), [](double x) { return x > 0.0; })) return true;
    if ((aligned ? o.aligned_factor : o.shooting_factor).cols() > 0) return true;
  }
  return false;
}

// Sum of squared residuals and point count of one block at the current state.
std::pair<double, double> block_ss(const State& s, const CalibrationProblem& problem, bool aligned) {
  double ss = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < problem.experiments.size(); ++i) {
    const Experiment& e = problem.experiments[i];
    const ForwardOutput& o = s.outputs[i];
    const auto obs = aligned ? e.aligned_obs.values() : e.shooting_obs.values();
    const auto& mean = aligned ? o.aligned : o.shooting;
    const auto& basis = aligned ? problem.discrepancy_aligned : problem.discrepancy_shooting;
    std::vector<double> delta;
    if (basis) {
      const std::size_t off =
          aligned ? problem.aligned_coeff_offset(i) : problem.shooting_coeff_offset(i);
      delta = basis->apply(std::span<const double>(s.coeffs).subspan(off));
    }
    for (std::size_t t = 0; t < obs.size(); ++t) {
      double r = obs[t] - mean[t];
      if (!delta.empty()) r -= delta[t];
      ss += r * r;
    }
    n += static_cast<double>(obs.size());
  }
  return {ss, n};
}

// Conjugate Gaussian draw of one discrepancy block given everything else.
void gibbs_coefficients(State& s, const CalibrationProblem& problem, bool aligned,
                        std::mt19937_64& rng) {
  const auto& basis = aligned ? problem.discrepancy_aligned : problem.discrepancy_shooting;
  if (!basis) return;
  const Eigen::MatrixXd& d = basis->basis_matrix;
  const Eigen::Index k = d.cols();
  const std::size_t n_exp = problem.experiments.size();
  const std::size_t groups = basis->per_experiment ? n_exp : 1;
  const double sigma2 = aligned ? s.sigma2_aligned : s.sigma2_shooting;
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t g = 0; g < groups; ++g) {
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double sd = basis->coeff_prior_sd[static_cast<std::size_t>(j)];
      precision(j, j) = 1.0 / (sd * sd);
    }
    for (std::size_t i = 0; i < n_exp; ++i) {
      if (basis->per_experiment && i != g) continue;
      const Experiment& e = problem.experiments[i];
      const ForwardOutput& o = s.outputs[i];
      const auto obs = aligned ? e.aligned_obs.values() : e.shooting_obs.values();
      const auto& mean = aligned ? o.aligned : o.shooting;
      Eigen::VectorXd r(d.rows());
      for (Eigen::Index t = 0; t < d.rows(); ++t) {
        r(t) = obs[static_cast<std::size_t>(t)] - mean[static_cast<std::size_t>(t)];
      }
      const Eigen::MatrixXd cinv_d = noise_covariance(o, aligned, sigma2, problem).solve(d);
      precision.noalias() += d.transpose() * cinv_d;
      rhs.noalias() += cinv_d.transpose() * r;
    }
    const Eigen::LLT<Eigen::MatrixXd> chol(precision);
    const Eigen::VectorXd mu = chol.solve(rhs);
    Eigen::VectorXd z(k);
    for (Eigen::Index j = 0; j < k; ++j) z(j) = normal(rng);
    // precision = L L^T, so L^-T z has covariance precision^-1.
    const Eigen::VectorXd draw = mu + chol.matrixU().solve(z);
    const std::size_t off = aligned ? problem.aligned_coeff_offset(g) : problem.shooting_coeff_offset(g);
    for (Eigen::Index j = 0; j < k; ++j) s.coeffs[off + static_cast<std::size_t>(j)] = draw(j);
  }
}

struct VarianceSampler {
  bool aligned;
  double log_step = std::log(0.5);
  long accepted = 0;
  long proposed = 0;
};

void update_variance(State& s, const CalibrationProblem& problem, VarianceSampler& vs,
                     bool adapt, int iter, std::mt19937_64& rng) {
  const bool aligned = vs.aligned;
  if (aligned ? problem.fixed_sigma2_aligned.has_value() : problem.fixed_sigma2_shooting.has_value()) {
    return;
  }
  const Prior& prior = aligned ? problem.sigma2_aligned_prior : problem.sigma2_shooting_prior;
  double& sigma2 = aligned ? s.sigma2_aligned : s.sigma2_shooting;
  ++vs.proposed;
  const bool conjugate = prior.kind() == Prior::Kind::kInverseGamma &&
                         !(problem.include_emulator_variance && has_variance(s.outputs, aligned));
  if (conjugate) {
    const auto [ss, n] = block_ss(s, problem, aligned);
    const double shape = prior.a() + 0.5 * n;
    const double scale = prior.b() + 0.5 * ss;
    sigma2 = 1.0 / std::gamma_distribution<double>(shape, 1.0 / scale)(rng);
    ++vs.accepted;
    refresh(s, problem);
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double old = sigma2;
  const double old_post = s.log_post;
  const double old_lik = s.log_lik;
  sigma2 = old * std::exp(std::exp(vs.log_step) * normal(rng));
  refresh(s, problem);
  // Random walk on log sigma^2: Jacobian sigma2'/sigma2.
  const double log_ratio = s.log_post - old_post + std::log(sigma2) - std::log(old);
  const bool accept = std::isfinite(s.log_post) && std::log(unif(rng)) < log_ratio;
  if (accept) {
    ++vs.accepted;
  } else {
    sigma2 = old;
    s.log_post = old_post;
    s.log_lik = old_lik;
  }
  if (adapt) {
    vs.log_step += ((accept ? 1.0 : 0.0) - 0.44) / std::pow(iter + 1.0, 0.6);
  }
}

std::string describe(const std::vector<double>& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

}  // namespace

PosteriorSamples mcmc_sample(const CalibrationProblem& problem, const McmcConfig& config) {
  problem.validate();
  if (!(config.n_iter > config.n_burn) || config.n_burn < 0) {
    throw ConfigError("mcmc: need n_iter > n_burn >= 0");
  }
  if (config.thin < 1 || config.init_draws < 1 || config.max_consecutive_rejections < 1) {
    throw ConfigError("mcmc: thin, init_draws and max_consecutive_rejections must be >= 1");
  }
  if (!(config.proposal_scale_init > 0.0)) {
    throw ConfigError("mcmc: proposal_scale_init must be positive");
  }
  const int dim = problem.theta_dim();
  const auto ud = static_cast<std::size_t>(dim);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Starting point: best of a batch of prior draws.
  State state;
  state.sigma2_aligned = problem.fixed_sigma2_aligned.value_or(problem.sigma2_aligned_prior.mean());
  state.sigma2_shooting =
      problem.fixed_sigma2_shooting.value_or(problem.sigma2_shooting_prior.mean());
  if (!std::isfinite(state.sigma2_aligned)) state.sigma2_aligned = problem.sigma2_aligned_prior.b();
  if (!std::isfinite(state.sigma2_shooting)) state.sigma2_shooting = problem.sigma2_shooting_prior.b();
  state.coeffs.assign(problem.coeff_count(), 0.0);
  for (int k = 0; k < config.init_draws; ++k) {
    State candidate = state;
    candidate.theta.resize(ud);
    for (std::size_t j = 0; j < ud; ++j) candidate.theta[j] = problem.theta_priors[j].sample(rng);
    auto outputs = evaluate_forward(problem, candidate.theta);
    if (!outputs) continue;
    candidate.outputs = std::move(*outputs);
    refresh(candidate, problem);
    if (candidate.log_post > state.log_post) state = std::move(candidate);
  }
  if (!std::isfinite(state.log_post)) {
    throw NumericalError("mcmc: no prior draw produced a finite log posterior");
  }

  std::vector<double> width(ud);
  for (std::size_t j = 0; j < ud; ++j) {
    const double sd = problem.theta_priors[j].sd();
    width[j] = std::isfinite(sd) ? sd : 1.0;
  }
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t j = 0; j < ud; ++j) {
    chol(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) =
        config.proposal_scale_init * width[j];
  }
  double log_scale = 0.0;
  std::vector<double> coord_log_scale(ud, 0.0);
  const double target = dim == 1 ? 0.44 : 0.234;
  long joint_iter = 0;
  Eigen::VectorXd run_mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd run_m2 = Eigen::MatrixXd::Zero(dim, dim);
  long run_n = 0;

  VarianceSampler va{true};
  VarianceSampler vv{false};
  long theta_accepted = 0;
  long theta_proposed = 0;
  int consecutive = 0;

  const int kept = (config.n_iter - config.n_burn + config.thin - 1) / config.thin;
  PosteriorSamples out;
  out.seed = config.seed;
  out.theta.resize(kept, dim);
  out.discrepancy_coeffs.resize(kept, static_cast<Eigen::Index>(problem.coeff_count()));
  out.sigma2_aligned.reserve(static_cast<std::size_t>(kept));
  out.sigma2_shooting.reserve(static_cast<std::size_t>(kept));
  out.log_posterior.reserve(static_cast<std::size_t>(kept));

  std::vector<double> proposal(ud);
  Eigen::VectorXd z(dim);
  const auto try_move = [&](const std::vector<double>& theta) {
    for (std::size_t j = 0; j < ud; ++j) {
      if (!problem.theta_priors[j].in_support(theta[j])) return false;
    }
    auto outputs = evaluate_forward(problem, theta);
    if (!outputs) return false;
    State cand;
    cand.theta = theta;
    cand.sigma2_aligned = state.sigma2_aligned;
    cand.sigma2_shooting = state.sigma2_shooting;
    cand.coeffs = state.coeffs;
    cand.outputs = std::move(*outputs);
    refresh(cand, problem);
    if (std::isfinite(cand.log_post) && std::log(unif(rng)) < cand.log_post - state.log_post) {
      state = std::move(cand);
      return true;
    }
    return false;
  };
  for (int iter = 0; iter < config.n_iter; ++iter) {
    const bool burning = iter < config.n_burn;

    // Theta block: coordinate-wise moves in the first half of burn-in, so
    // each direction finds its own scale, then joint moves with the
    // empirical covariance.
    const bool coordinatewise = burning && iter < config.n_burn / 2;
    bool any_accepted = false;
    if (coordinatewise) {
      for (std::size_t j = 0; j < ud; ++j) {
        proposal = state.theta;
        proposal[j] += std::exp(coord_log_scale[j]) * config.proposal_scale_init * width[j] *
                       normal(rng);
        const bool ok = try_move(proposal);
        any_accepted = any_accepted || ok;
        coord_log_scale[j] += ((ok ? 1.0 : 0.0) - 0.44) / std::pow(iter + 1.0, 0.6);
      }
    } else {
      if (burning && run_n > 1 && joint_iter % 50 == 0) {
        Eigen::MatrixXd c = run_m2 / static_cast<double>(run_n - 1) * (2.38 * 2.38 / dim);
        for (std::size_t j = 0; j < ud; ++j) {
          const double floor = 1e-6 * config.proposal_scale_init * width[j];
          c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += floor * floor;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) chol = llt.matrixL();
      }
      for (Eigen::Index j = 0; j < dim; ++j) z(j) = normal(rng);
      const Eigen::VectorXd step = std::exp(log_scale) * (chol * z);
      for (std::size_t j = 0; j < ud; ++j) {
        proposal[j] = state.theta[j] + step(static_cast<Eigen::Index>(j));
      }
      any_accepted = try_move(proposal);
      if (burning) {
        log_scale += ((any_accepted ? 1.0 : 0.0) - target) / std::pow(joint_iter + 1.0, 0.6);
        ++joint_iter;
      } else {
        ++theta_proposed;
        if (any_accepted) ++theta_accepted;
      }
    }
    if (any_accepted) {
      consecutive = 0;
    } else if (++consecutive >= config.max_consecutive_rejections) {
      throw NumericalError("mcmc: " + std::to_string(consecutive) +
                           " consecutive theta rejections at iteration " + std::to_string(iter) +
                           "; theta = " + describe(state.theta) +
                           ", log posterior = " + std::to_string(state.log_post) +
                           ", proposal scale = " + std::to_string(std::exp(log_scale)));
    }

    if (burning) {
      const Eigen::Map<const Eigen::VectorXd> th(state.theta.data(), dim);
      ++run_n;
      const Eigen::VectorXd delta = th - run_mean;
      run_mean += delta / static_cast<double>(run_n);
      run_m2 += delta * (th - run_mean).transpose();
    }

    update_variance(state, problem, va, burning, iter, rng);
    if (problem.use_shooting) update_variance(state, problem, vv, burning, iter, rng);
    if (problem.coeff_count() > 0) {
      gibbs_coefficients(state, problem, true, rng);
      if (problem.use_shooting) gibbs_coefficients(state, problem, false, rng);
      refresh(state, problem);
    }

    if (!burning && (iter - config.n_burn) % config.thin == 0) {
      const auto row = static_cast<Eigen::Index>(out.log_posterior.size());
      for (std::size_t j = 0; j < ud; ++j) out.theta(row, static_cast<Eigen::Index>(j)) = state.theta[j];
      for (std::size_t j = 0; j < state.coeffs.size(); ++j) {
        out.discrepancy_coeffs(row, static_cast<Eigen::Index>(j)) = state.coeffs[j];
      }
      out.sigma2_aligned.push_back(state.sigma2_aligned);
      out.sigma2_shooting.push_back(state.sigma2_shooting);
      out.log_posterior.push_back(state.log_post);
    }
  }
  out.acceptance.theta =
      theta_proposed ? static_cast<double>(theta_accepted) / static_cast<double>(theta_proposed) : 0.0;
  out.acceptance.sigma2_aligned =
      va.proposed ? static_cast<double>(va.accepted) / static_cast<double>(va.proposed) : 0.0;
  out.acceptance.sigma2_shooting =
      vv.proposed ? static_cast<double>(vv.accepted) / static_cast<double>(vv.proposed) : 0.0;
  spdlog::debug("mcmc: theta acceptance {:.3f}", out.acceptance.theta);
  return out;
}

}  // namespace ecal
