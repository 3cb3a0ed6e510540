#include "ecal/emulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <exception>
#include <random>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ecal/curve_io.hpp"
#include "ecal/error.hpp"

namespace ecal {
namespace {

constexpr int kSchemaVersion = 1;
std::atomic<int> extrapolation_warnings{0};

std::vector<double> trapezoid_weights(std::span<const double> t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = 0.5 * (t[i + 1] - t[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

void check_outputs(std::span<const GridFunction> outputs, const char* where) {
  for (const auto& f : outputs) {
    if (!f.grid().matches(outputs.front().grid())) {
      throw DataError(std::string(where) + ": outputs must share a grid");
    }
  }
}

double relative_l2(const GridFunction& pred, const GridFunction& truth) {
  std::vector<double> d(truth.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pred[i] - truth[i];
  const double num = std::sqrt(trapezoid_product(truth.grid().points(), d, d));
  const double den = l2_norm(truth);
  return den > 0.0 ? num / den : num;
}

Eigen::MatrixXd rows(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

}  // namespace

std::vector<double> FpcaBasis::project(const GridFunction& f) const {
  const auto t = mean_curve.grid().points();
  std::vector<double> centered(f.size());
  for (std::size_t i = 0; i < centered.size(); ++i) centered[i] = f[i] - mean_curve[i];
  std::vector<double> c;
  c.reserve(components.size());
  for (const auto& phi : components) {
    c.push_back(trapezoid_product(t, phi.values(), centered));
  }
  return c;
}

GridFunction FpcaBasis::reconstruct(std::span<const double> coefficients) const {
  if (coefficients.size() != components.size()) {
    throw DataError("FpcaBasis::reconstruct: coefficient count mismatch");
  }
  std::vector<double> y(mean_curve.values().begin(), mean_curve.values().end());
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += coefficients[k] * components[k][i];
  }
  return GridFunction(mean_curve.grid(), std::move(y));
}

FpcaBasis fpca_fit(std::span<const GridFunction> curves, double variance_target) {
  if (curves.size() < 2) {
    throw DataError("fpca_fit: at least two curves are required");
  }
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw ConfigError("fpca_fit: variance_target must lie in (0, 1]");
  }
  check_outputs(curves, "fpca_fit");
  const Grid& grid = curves.front().grid();
  const auto n = static_cast<Eigen::Index>(curves.size());
  const auto m = static_cast<Eigen::Index>(grid.size());

  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = curves[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const std::vector<double> w = trapezoid_weights(grid.points());
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), m);
  const Eigen::VectorXd sw = wv.cwiseSqrt();
  Eigen::MatrixXd b = (x.rowwise() - mean) * sw.asDiagonal();

  FpcaBasis out{GridFunction(grid, std::vector<double>(mean.data(), mean.data() + m)), {}, {}, 0.0};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
  const Eigen::VectorXd lambda = svd.singularValues().array().square() / static_cast<double>(n - 1);
  out.total_variance = lambda.sum();
  const double scale = std::max(1.0, mean.squaredNorm() / static_cast<double>(m));
  if (!(out.total_variance > 1e-24 * scale)) {
    return out;
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lambda.size() && acc < variance_target * out.total_variance; ++k) {
    if (!(lambda(k) > 1e-12 * lambda(0))) break;
    Eigen::VectorXd phi = svd.matrixV().col(k).cwiseQuotient(sw);
    Eigen::Index imax = 0;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi(imax) < 0.0) phi = -phi;
    out.components.emplace_back(grid, std::vector<double>(phi.data(), phi.data() + m));
    out.explained_variance.push_back(lambda(k));
    acc += lambda(k);
  }
  return out;
}

std::vector<int> assign_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) {
    throw ConfigError("cross_validate: folds must be >= 2");
  }
  if (folds > n) {
    throw ConfigError("cross_validate: " + std::to_string(folds) + " folds for " +
                      std::to_string(n) + " runs");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % folds;
  return fold;
}

Emulator Emulator::train(const Eigen::MatrixXd& inputs, std::span<const GridFunction> outputs,
                         const EmulatorOptions& options) {
  if (static_cast<std::size_t>(inputs.rows()) != outputs.size()) {
    throw DataError("Emulator::train: " + std::to_string(inputs.rows()) + " input rows for " +
                    std::to_string(outputs.size()) + " outputs");
  }
  if (!inputs.allFinite()) {
    throw DataError("Emulator::train: non-finite inputs");
  }
  const auto p = static_cast<std::size_t>(inputs.cols());
  if ((!options.lower.empty() && options.lower.size() != p) ||
      (!options.upper.empty() && options.upper.size() != p)) {
    throw ConfigError("Emulator::train: input bounds must have one entry per column");
  }

  Emulator em(fpca_fit(outputs, options.variance_target));
  for (std::size_t d = 0; d < p; ++d) {
    const auto col = inputs.col(static_cast<Eigen::Index>(d));
    const double lo = options.lower.empty() ? col.minCoeff() : options.lower[d];
    double hi = options.upper.empty() ? col.maxCoeff() : options.upper[d];
    if (!(hi > lo)) hi = lo + 1.0;
    em.lower_.push_back(lo);
    em.upper_.push_back(hi);
  }
  const int n = static_cast<int>(inputs.rows());
  const int n_comp = em.basis_.n_comp();
  if (n_comp > 0 && n < 10 * n_comp) {
    spdlog::warn("Emulator::train: {} runs for {} components (10 per component recommended)", n,
                 n_comp);
  }

  Eigen::MatrixXd& x = em.scaled_inputs_;
  x.resize(inputs.rows(), inputs.cols());
  for (Eigen::Index d = 0; d < inputs.cols(); ++d) {
    const auto ud = static_cast<std::size_t>(d);
    x.col(d) = (inputs.col(d).array() - em.lower_[ud]) / (em.upper_[ud] - em.lower_[ud]);
  }
  Eigen::MatrixXd coeffs(n, n_comp);
  em.truncation_variance_.assign(em.grid().size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const GridFunction& y = outputs[static_cast<std::size_t>(i)];
    const auto c = em.basis_.project(y);
    for (int k = 0; k < n_comp; ++k) coeffs(i, k) = c[static_cast<std::size_t>(k)];
    const GridFunction r = em.basis_.reconstruct(c);
    for (std::size_t t = 0; t < r.size(); ++t) {
      em.truncation_variance_[t] += (y[t] - r[t]) * (y[t] - r[t]) / n;
    }
  }

  std::vector<std::optional<GaussianProcess>> fitted(static_cast<std::size_t>(n_comp));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_comp));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_comp; ++k) {
    try {
      fitted[static_cast<std::size_t>(k)].emplace(
          GaussianProcess::fit(x, coeffs.col(k), options.gp));
    } catch (...) {
      failures[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (auto& f : fitted) em.models_.push_back(std::move(*f));

  em.residual_variance_.assign(static_cast<std::size_t>(n_comp), 0.0);
  const int folds = std::min(options.residual_folds, n);
  if (n_comp > 0 && folds >= 2) {
    const std::vector<int> fold = assign_folds(n, folds, options.seed);
    std::vector<double> row(p);
    for (int f = 0; f < folds; ++f) {
      std::vector<int> tr, te;
      for (int i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      const Eigen::MatrixXd xtr = rows(x, tr);
      for (int k = 0; k < n_comp; ++k) {
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
        for (std::size_t i = 0; i < tr.size(); ++i) ytr(static_cast<Eigen::Index>(i)) = coeffs(tr[i], k);
        const auto gp = GaussianProcess::with_hyperparameters(
            xtr, ytr, em.models_[static_cast<std::size_t>(k)].hyperparameters());
        for (int i : te) {
          for (std::size_t d = 0; d < p; ++d) row[d] = x(i, static_cast<Eigen::Index>(d));
          const double e = gp.predict(row).mean - coeffs(i, k);
          em.residual_variance_[static_cast<std::size_t>(k)] += e * e / n;
        }
      }
    }
  }
  return em;
}

std::vector<double> Emulator::scale(std::span<const double> u) const {
  std::vector<double> s(u.size());
  bool outside = false;
  for (std::size_t d = 0; d < u.size(); ++d) {
    s[d] = (u[d] - lower_[d]) / (upper_[d] - lower_[d]);
    outside = outside || s[d] < -1e-9 || s[d] > 1.0 + 1e-9;
  }
  if (outside && extrapolation_warnings.fetch_add(1) < 5) {
    spdlog::warn("Emulator::predict: input outside the training box (extrapolation)");
  }
  return s;
}

std::vector<GaussianProcess::Prediction> Emulator::predict_coefficients(
    std::span<const double> u) const {
  if (static_cast<int>(u.size()) != input_dim()) {
    throw DataError("Emulator::predict: input has " + std::to_string(u.size()) +
                    " entries, emulator expects " + std::to_string(input_dim()));
  }
  const std::vector<double> s = scale(u);
  std::vector<GaussianProcess::Prediction> out;
  out.reserve(models_.size());
  for (const auto& m : models_) out.push_back(m.predict(s));
  return out;
}

EmulatorPrediction Emulator::predict(std::span<const double> u) const {
  const auto coeffs = predict_coefficients(u);
  const std::size_t m = grid().size();
  std::vector<double> mean(basis_.mean_curve.values().begin(), basis_.mean_curve.values().end());
  std::vector<double> var(truncation_variance_);
  Eigen::MatrixXd factor(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const auto& phi = basis_.components[k];
    const double sk = std::sqrt(coeffs[k].variance + residual_variance_[k]);
    for (std::size_t i = 0; i < m; ++i) {
      mean[i] += coeffs[k].mean * phi[i];
      const double f = sk * phi[i];
      factor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f;
      var[i] += f * f;
    }
  }
  for (double& v : var) v = std::sqrt(v);
  return {GridFunction(grid(), std::move(mean)), GridFunction(grid(), std::move(var)),
          std::move(factor), truncation_variance_};
}

nlohmann::json Emulator::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : basis_.components) {
    comps.push_back(std::vector<double>(c.values().begin(), c.values().end()));
  }
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : models_) models.push_back(m.to_json());
  nlohmann::json x = nlohmann::json::array();
  for (Eigen::Index i = 0; i < scaled_inputs_.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(scaled_inputs_.cols()));
    for (Eigen::Index d = 0; d < scaled_inputs_.cols(); ++d) {
      row[static_cast<std::size_t>(d)] = scaled_inputs_(i, d);
    }
    x.push_back(row);
  }
  const auto& mean = basis_.mean_curve.values();
  return {{"format", "ecal-emulator"},
          {"schema_version", kSchemaVersion},
          {"grid", std::vector<double>(grid().points().begin(), grid().points().end())},
          {"input_lower", lower_},
          {"input_upper", upper_},
          {"scaled_training_inputs", x},
          {"basis",
           {{"mean", std::vector<double>(mean.begin(), mean.end())},
            {"components", comps},
            {"explained_variance", basis_.explained_variance},
            {"total_variance", basis_.total_variance}}},
          {"models", models},
          {"residual_variance", residual_variance_},
          {"truncation_variance", truncation_variance_}};
}

Emulator Emulator::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "ecal-emulator") {
      throw DataError("Emulator::from_json: not an emulator file");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw DataError("Emulator::from_json: unsupported schema_version " + std::to_string(version));
    }
    const Grid grid(j.at("grid").get<std::vector<double>>());
    const auto& b = j.at("basis");
    Emulator em(FpcaBasis{GridFunction(grid, b.at("mean").get<std::vector<double>>()), {}, {},
                          b.at("total_variance").get<double>()});
    em.lower_ = j.at("input_lower").get<std::vector<double>>();
    em.upper_ = j.at("input_upper").get<std::vector<double>>();
    if (em.lower_.size() != em.upper_.size()) {
      throw DataError("Emulator::from_json: input range lengths differ");
    }
    for (const auto& c : b.at("components")) {
      em.basis_.components.emplace_back(grid, c.get<std::vector<double>>());
    }
    em.basis_.explained_variance = b.at("explained_variance").get<std::vector<double>>();
    const auto x = j.at("scaled_training_inputs").get<std::vector<std::vector<double>>>();
    em.scaled_inputs_.resize(static_cast<Eigen::Index>(x.size()),
                             static_cast<Eigen::Index>(em.lower_.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].size() != em.lower_.size()) {
        throw DataError("Emulator::from_json: training input row has the wrong length");
      }
      for (std::size_t d = 0; d < x[i].size(); ++d) {
        em.scaled_inputs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = x[i][d];
      }
    }
    for (const auto& m : j.at("models")) {
      em.models_.push_back(GaussianProcess::from_json(m, em.scaled_inputs_));
    }
    em.residual_variance_ = j.at("residual_variance").get<std::vector<double>>();
    em.truncation_variance_ = j.at("truncation_variance").get<std::vector<double>>();
    if (em.models_.size() != em.basis_.components.size() ||
        em.residual_variance_.size() != em.models_.size() ||
        em.truncation_variance_.size() != grid.size()) {
      throw DataError("Emulator::from_json: component counts disagree");
    }
    return em;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("Emulator::from_json: ") + e.what());
  }
}

void Emulator::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << to_json().dump(1) << '\n';
}

Emulator Emulator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot read " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

double CvReport::median_error() const {
  if (relative_error.empty()) return 0.0;
  std::vector<double> e = relative_error;
  const auto mid = e.begin() + static_cast<std::ptrdiff_t>(e.size() / 2);
  std::nth_element(e.begin(), mid, e.end());
  if (e.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(e.begin(), mid));
}

std::vector<double> CvReport::fold_mean_error() const {
  std::vector<double> sum(static_cast<std::size_t>(folds), 0.0);
  std::vector<int> count(static_cast<std::size_t>(folds), 0);
  for (std::size_t i = 0; i < fold.size(); ++i) {
    sum[static_cast<std::size_t>(fold[i])] += relative_error[i];
    ++count[static_cast<std::size_t>(fold[i])];
  }
  for (std::size_t f = 0; f < sum.size(); ++f) {
    if (count[f] > 0) sum[f] /= count[f];
  }
  return sum;
}

CvReport cross_validate(const Eigen::MatrixXd& inputs, std::span<const GridFunction> outputs,
                        int folds, const EmulatorOptions& options, std::uint64_t seed) {
  if (static_cast<std::size_t>(inputs.rows()) != outputs.size()) {
    throw DataError("cross_validate: input rows and outputs disagree");
  }
  const int n = static_cast<int>(outputs.size());
  CvReport report{assign_folds(n, folds, seed), std::vector<double>(outputs.size(), 0.0), folds,
                  seed};
  EmulatorOptions opts = options;
  if (opts.lower.empty()) {
    for (Eigen::Index d = 0; d < inputs.cols(); ++d) {
      opts.lower.push_back(inputs.col(d).minCoeff());
      opts.upper.push_back(inputs.col(d).maxCoeff());
    }
  }
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, te;
    for (int i = 0; i < n; ++i) (report.fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    std::vector<GridFunction> ytr;
    for (int i : tr) ytr.push_back(outputs[static_cast<std::size_t>(i)]);
    const Emulator em = Emulator::train(rows(inputs, tr), ytr, opts);
    for (int i : te) {
      std::vector<double> u(static_cast<std::size_t>(inputs.cols()));
      for (Eigen::Index d = 0; d < inputs.cols(); ++d) u[static_cast<std::size_t>(d)] = inputs(i, d);
      report.relative_error[static_cast<std::size_t>(i)] =
          relative_l2(em.predict(u).mean, outputs[static_cast<std::size_t>(i)]);
    }
  }
  return report;
}

void write_cv_report(const std::filesystem::path& path, const CvReport& report) {
  Eigen::MatrixXd data(static_cast<Eigen::Index>(report.fold.size()), 3);
  for (std::size_t i = 0; i < report.fold.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data(r, 0) = static_cast<double>(i);
    data(r, 1) = report.fold[i];
    data(r, 2) = report.relative_error[i];
  }
  const std::vector<std::string> header{"run", "fold", "relative_error"};
  write_matrix_csv(path, header, data);
}

}  // namespace ecal
