#include "ecal/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <nlohmann/json.hpp>

#include "ecal/error.hpp"

namespace ecal {
namespace {

Eigen::MatrixXd correlation(const Eigen::MatrixXd& x, const std::vector<double>& ls) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const double z = (x(i, d) - x(j, d)) / ls[static_cast<std::size_t>(d)];
        s += z * z;
      }
      r(i, j) = r(j, i) = std::exp(-0.5 * s);
    }
  }
  return r;
}

bool nearly_constant(const Eigen::VectorXd& y) {
  const double range = y.maxCoeff() - y.minCoeff();
  return range <= 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd trend_matrix(const Eigen::MatrixXd& x, GpTrend trend) {
  if (trend == GpTrend::kConstant) return Eigen::MatrixXd::Ones(x.rows(), 1);
  Eigen::MatrixXd h(x.rows(), x.cols() + 1);
  h.col(0).setOnes();
  h.rightCols(x.cols()) = x;
  return h;
}

struct Profile {
  double nll;
  Eigen::VectorXd beta;
  double signal_variance;
};

// Concentrated likelihood terms for a factorized correlation matrix.
Profile profile(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& h,
                const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd rih = chol.solve(h);
  const Eigen::VectorXd beta = (h.transpose() * rih).ldlt().solve(rih.transpose() * y);
  const Eigen::VectorXd r = y - h * beta;
  const double s2 = std::max(r.dot(chol.solve(r)) / static_cast<double>(n), 1e-300);
  const Eigen::MatrixXd l = chol.matrixL();
  const double half_logdet = l.diagonal().array().log().sum();
  return {0.5 * static_cast<double>(n) * std::log(s2) + half_logdet, beta, s2};
}

struct ObjectiveData {
  const Eigen::MatrixXd* x;
  const Eigen::VectorXd* y;
  const GpFitOptions* options;
};

GpHyperparameters decode(const gsl_vector* p, std::size_t dims, const GpFitOptions& o,
                         double* overshoot) {
  GpHyperparameters h;
  double out = 0.0;
  const double lo_l = std::log(o.min_lengthscale);
  const double hi_l = std::log(o.max_lengthscale);
  for (std::size_t d = 0; d < dims; ++d) {
    const double v = gsl_vector_get(p, d);
    const double c = std::clamp(v, lo_l, hi_l);
    out += (v - c) * (v - c);
    h.lengthscales.push_back(std::exp(c));
  }
  h.trend = o.trend;
  const double v = gsl_vector_get(p, dims);
  const double c = std::clamp(v, std::log(o.min_nugget), std::log(o.max_nugget));
  out += (v - c) * (v - c);
  h.nugget = std::exp(c);
  if (overshoot) *overshoot = out;
  return h;
}

double objective(const gsl_vector* p, void* params) {
  const auto* data = static_cast<const ObjectiveData*>(params);
  double overshoot = 0.0;
  const auto dims = static_cast<std::size_t>(data->x->cols());
  const GpHyperparameters h = decode(p, dims, *data->options, &overshoot);
  const double nll = GaussianProcess::profile_nll(*data->x, *data->y, h);
  if (!std::isfinite(nll)) {
    return 1e300;
  }
  return nll + 1e3 * overshoot;
}

}  // namespace

double GaussianProcess::profile_nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const GpHyperparameters& hyper) {
  Eigen::MatrixXd r = correlation(x, hyper.lengthscales);
  r.diagonal().array() += hyper.nugget;
  Eigen::LLT<Eigen::MatrixXd> chol(r);
  if (chol.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  if (x.rows() <= trend_matrix(x, hyper.trend).cols()) {
    return std::numeric_limits<double>::infinity();
  }
  return profile(chol, trend_matrix(x, hyper.trend), y).nll;
}

void GaussianProcess::factorize() {
  const Eigen::MatrixXd h = trend_matrix(x_, hyper_.trend);
  if (nearly_constant(y_) || x_.rows() <= h.cols()) {
    constant_ = true;
    beta_ = Eigen::VectorXd::Zero(h.cols());
    beta_(0) = y_.mean();
    signal_variance_ = 0.0;
    return;
  }
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd r = correlation(x_, hyper_.lengthscales);
    r.diagonal().array() += hyper_.nugget;
    chol_.compute(r);
    if (chol_.info() == Eigen::Success) {
      const Profile p = profile(chol_, h, y_);
      beta_ = p.beta;
      signal_variance_ = p.signal_variance;
      alpha_ = chol_.solve(y_ - h * beta_);
      rinv_h_ = chol_.solve(h);
      trend_chol_.compute(h.transpose() * rinv_h_);
      if (trend_chol_.info() != Eigen::Success) {
        throw NumericalError("GaussianProcess: trend design is rank deficient");
      }
      return;
    }
    hyper_.nugget *= 10.0;
  }
  throw NumericalError("GaussianProcess: correlation matrix is not positive definite");
}

Eigen::VectorXd GaussianProcess::trend_row(std::span<const double> x) const {
  Eigen::VectorXd h(beta_.size());
  h(0) = 1.0;
  if (hyper_.trend == GpTrend::kLinear) {
    for (std::size_t d = 0; d < x.size(); ++d) h(static_cast<Eigen::Index>(d) + 1) = x[d];
  }
  return h;
}

GaussianProcess GaussianProcess::with_hyperparameters(const Eigen::MatrixXd& x,
                                                      const Eigen::VectorXd& y,
                                                      const GpHyperparameters& hyper) {
  if (x.rows() != y.size() || x.rows() < 1) {
    throw DataError("GaussianProcess: inputs and targets disagree in length");
  }
  if (static_cast<Eigen::Index>(hyper.lengthscales.size()) != x.cols()) {
    throw ConfigError("GaussianProcess: one lengthscale per input dimension required");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw DataError("GaussianProcess: non-finite training data");
  }
  GaussianProcess gp;
  gp.x_ = x;
  gp.y_ = y;
  gp.hyper_ = hyper;
  gp.factorize();
  return gp;
}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const GpFitOptions& options) {
  const auto dims = static_cast<std::size_t>(x.cols());
  if (x.rows() != y.size() || x.rows() < 2) {
    throw DataError("GaussianProcess::fit: need at least two training points");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw DataError("GaussianProcess::fit: non-finite training data");
  }
  GpHyperparameters best{std::vector<double>(dims, 1.0), options.min_nugget, options.trend};
  if (nearly_constant(y)) {
    return with_hyperparameters(x, y, best);
  }

  gsl_set_error_handler_off();
  ObjectiveData data{&x, &y, &options};
  gsl_multimin_function fn{&objective, dims + 1, &data};
  double best_value = std::numeric_limits<double>::infinity();

  for (const double start_ls : {0.25, 1.0}) {
    gsl_vector* p = gsl_vector_alloc(dims + 1);
    gsl_vector* step = gsl_vector_alloc(dims + 1);
    for (std::size_t d = 0; d < dims; ++d) gsl_vector_set(p, d, std::log(start_ls));
    gsl_vector_set(p, dims, std::log(1e-6));
    gsl_vector_set_all(step, 1.0);

    gsl_multimin_fminimizer* m =
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dims + 1);
    gsl_multimin_fminimizer_set(m, &fn, p, step);
    for (int it = 0; it < options.max_evaluations; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-4) == GSL_SUCCESS) break;
    }
    const double value = gsl_multimin_fminimizer_minimum(m);
    if (value < best_value) {
      best_value = value;
      best = decode(gsl_multimin_fminimizer_x(m), dims, options, nullptr);
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(step);
    gsl_vector_free(p);
  }
  return with_hyperparameters(x, y, best);
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != x_.cols()) {
    throw DataError("GaussianProcess::predict: input has " + std::to_string(x.size()) +
                    " dimensions, model expects " + std::to_string(x_.cols()));
  }
  const Eigen::VectorXd h = trend_row(x);
  if (constant_) {
    return {h.dot(beta_), 0.0};
  }
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < x_.cols(); ++d) {
      const double z =
          (x[static_cast<std::size_t>(d)] - x_(i, d)) / hyper_.lengthscales[static_cast<std::size_t>(d)];
      s += z * z;
    }
    k(i) = std::exp(-0.5 * s);
  }
  const double mean = h.dot(beta_) + k.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  const Eigen::VectorXd u = h - rinv_h_.transpose() * k;
  const double var = signal_variance_ * std::max(0.0, 1.0 + hyper_.nugget - v.squaredNorm() +
                                                          u.dot(trend_chol_.solve(u)));
  return {mean, var};
}

nlohmann::json GaussianProcess::to_json() const {
  return {{"lengthscales", hyper_.lengthscales},
          {"nugget", hyper_.nugget},
          {"trend", hyper_.trend == GpTrend::kLinear ? "linear" : "constant"},
          {"targets", std::vector<double>(y_.data(), y_.data() + y_.size())}};
}

GaussianProcess GaussianProcess::from_json(const nlohmann::json& j, const Eigen::MatrixXd& x) {
  const auto targets = j.at("targets").get<std::vector<double>>();
  const auto trend = j.at("trend").get<std::string>();
  if (trend != "constant" && trend != "linear") {
    throw DataError("GaussianProcess::from_json: unknown trend '" + trend + "'");
  }
  GpHyperparameters h{j.at("lengthscales").get<std::vector<double>>(), j.at("nugget").get<double>(),
                      trend == "linear" ? GpTrend::kLinear : GpTrend::kConstant};
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                        static_cast<Eigen::Index>(targets.size()));
  return with_hyperparameters(x, y, h);
}

}  // namespace ecal
