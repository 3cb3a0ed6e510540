#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace ecal {

enum class GpTrend { kConstant, kLinear };

struct GpHyperparameters {
  std::vector<double> lengthscales;  // one per input dimension
  double nugget = 1e-8;              // relative to the signal variance
  GpTrend trend = GpTrend::kLinear;
};

struct GpFitOptions {
  double min_lengthscale = 0.01;
  double max_lengthscale = 100.0;
  double min_nugget = 1e-8;
  double max_nugget = 0.1;
  int max_evaluations = 600;
  GpTrend trend = GpTrend::kLinear;
};

/// Scalar Gaussian-process regression with an anisotropic squared-exponential
/// kernel, a constant or linear mean and a nugget. Signal variance and trend
/// coefficients are profiled out of the likelihood; lengthscales and nugget
/// are fitted by maximum likelihood. Predictive variance includes the
/// uncertainty of the estimated trend.
class GaussianProcess {
 public:
  struct Prediction {
    double mean;
    double variance;
  };

  // Inputs are expected on the unit cube.
  static GaussianProcess fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const GpFitOptions& options = {});
  static GaussianProcess with_hyperparameters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                              const GpHyperparameters& hyper);

  Prediction predict(std::span<const double> x) const;

  const GpHyperparameters& hyperparameters() const noexcept { return hyper_; }
  double signal_variance() const noexcept { return signal_variance_; }
  const Eigen::VectorXd& trend_coefficients() const noexcept { return beta_; }
  bool constant() const noexcept { return constant_; }
  int input_dim() const noexcept { return static_cast<int>(x_.cols()); }

  // Concentrated negative log marginal likelihood (up to a constant).
  static double profile_nll(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const GpHyperparameters& hyper);

  nlohmann::json to_json() const;
  // Training inputs are shared by every component and stored once by the
  // owning emulator.
  static GaussianProcess from_json(const nlohmann::json& j, const Eigen::MatrixXd& x);

 private:
  void factorize();
  Eigen::VectorXd trend_row(std::span<const double> x) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  GpHyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd beta_;
  Eigen::MatrixXd rinv_h_;                  // R^-1 H
  Eigen::LLT<Eigen::MatrixXd> trend_chol_;  // H^T R^-1 H
  double signal_variance_ = 0.0;
  bool constant_ = false;
};

}  // namespace ecal
