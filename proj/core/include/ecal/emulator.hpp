#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "ecal/gp.hpp"
#include "ecal/grid.hpp"

namespace ecal {

/// Functional principal components under the trapezoidal L2 inner product.
struct FpcaBasis {
  GridFunction mean_curve;
  std::vector<GridFunction> components;  // orthonormal
  std::vector<double> explained_variance;
  double total_variance = 0.0;

  int n_comp() const noexcept { return static_cast<int>(components.size()); }
  std::vector<double> project(const GridFunction& f) const;
  GridFunction reconstruct(std::span<const double> coefficients) const;
};

// Retains the smallest number of components whose eigenvalues reach
// `variance_target` of the total.
FpcaBasis fpca_fit(std::span<const GridFunction> curves, double variance_target);

struct EmulatorOptions {
  double variance_target = 0.995;
  GpFitOptions gp;
  // Folds used to estimate residual_variance; hyperparameters stay fixed.
  int residual_folds = 5;
  std::uint64_t seed = 0;
  // Input box used for unit-cube scaling. Empty: training ranges.
  std::vector<double> lower;
  std::vector<double> upper;
};

// Prediction error covariance is error_factor error_factor^T plus
// diag(truncation_variance). Column k of the factor is phi_k scaled by the
// square root of the coefficient GP variance plus its held-out residual
// variance; truncation_variance is the basis reconstruction error.
struct EmulatorPrediction {
  GridFunction mean;
  GridFunction pointwise_sd;  // square root of the covariance diagonal
  Eigen::MatrixXd error_factor;
  std::vector<double> truncation_variance;
};

class Emulator {
 public:
  static Emulator train(const Eigen::MatrixXd& inputs, std::span<const GridFunction> outputs,
                        const EmulatorOptions& options = {});

  EmulatorPrediction predict(std::span<const double> u) const;
  std::vector<GaussianProcess::Prediction> predict_coefficients(std::span<const double> u) const;

  const FpcaBasis& basis() const noexcept { return basis_; }
  const Grid& grid() const noexcept { return basis_.mean_curve.grid(); }
  const std::vector<GaussianProcess>& models() const noexcept { return models_; }
  const std::vector<double>& input_lower() const noexcept { return lower_; }
  const std::vector<double>& input_upper() const noexcept { return upper_; }
  const std::vector<double>& residual_variance() const noexcept { return residual_variance_; }
  const std::vector<double>& truncation_variance() const noexcept { return truncation_variance_; }
  int input_dim() const noexcept { return static_cast<int>(lower_.size()); }

  nlohmann::json to_json() const;
  static Emulator from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Emulator load(const std::filesystem::path& path);

 private:
  explicit Emulator(FpcaBasis basis) : basis_(std::move(basis)) {}
  std::vector<double> scale(std::span<const double> u) const;

  FpcaBasis basis_;
  Eigen::MatrixXd scaled_inputs_;
  std::vector<GaussianProcess> models_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> residual_variance_;
  std::vector<double> truncation_variance_;
};

struct CvReport {
  std::vector<int> fold;               // fold of each run
  std::vector<double> relative_error;  // ||pred - truth|| / ||truth|| per run
  int folds = 0;
  std::uint64_t seed = 0;

  double median_error() const;
  std::vector<double> fold_mean_error() const;
};

// Retrains the full emulator on each training split.
CvReport cross_validate(const Eigen::MatrixXd& inputs, std::span<const GridFunction> outputs,
                        int folds, const EmulatorOptions& options, std::uint64_t seed);

void write_cv_report(const std::filesystem::path& path, const CvReport& report);

// Seeded shuffle of 0..n-1 dealt round-robin into `folds` groups.
std::vector<int> assign_folds(int n, int folds, std::uint64_t seed);

}  // namespace ecal
