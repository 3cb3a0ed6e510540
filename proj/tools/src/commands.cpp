#include "ecal_cli/commands.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ecal/align.hpp"
#include "ecal/calibrate.hpp"
#include "ecal/curve_io.hpp"
#include "ecal/emulator.hpp"
#include "ecal/error.hpp"
#include "ecal/mcmc.hpp"
#include "ecal/seed.hpp"
#include "ecal/summary.hpp"
#include "ecal/synthetic.hpp"

namespace ecal::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json defaults_for(const std::string& command) {
  const json base = {{"schema_version", kConfigSchemaVersion}, {"seed", 0}, {"out", "."}};
  json d = base;
  if (command == "simulate") {
    d.update({{"example", 1}, {"n_runs", nullptr}, {"n_grid", 401}, {"design", "uniform"}});
  } else if (command == "align") {
    d.update({{"curves", nullptr},
              {"reference_file", nullptr},
              {"reference_id", nullptr},
              {"lambda", 0.0},
              {"max_step", 4},
              {"refine_passes", 1}});
  } else if (command == "calibrate") {
    d.update({{"mode", "emulator"},
              {"example", nullptr},
              {"simulator", nullptr},
              {"n_runs", nullptr},
              {"n_grid", 401},
              {"design", nullptr},
              {"curves", nullptr},
              {"observation", {{"file", nullptr}, {"column", nullptr}}},
              {"input_bounds", nullptr},
              {"elastic", true},
              {"lambda", 0.0},
              {"max_step", 4},
              {"refine_passes", 1},
              {"emulator",
               {{"variance_target", 0.995},
                {"aligned_file", nullptr},
                {"shooting_file", nullptr},
                {"cv_folds", 0},
                {"gp",
                 {{"min_lengthscale", 0.01},
                  {"max_lengthscale", 100.0},
                  {"min_nugget", 1e-8},
                  {"max_nugget", 0.1},
                  {"trend", "linear"}}}}},
              {"priors", nullptr},
              {"sigma2", {{"aligned", nullptr}, {"shooting", nullptr}}},
              {"include_emulator_variance", true},
              {"discrepancy", nullptr},
              {"mcmc", {{"n_iter", 20000}, {"n_burn", 5000}, {"proposal_scale_init", 0.1}, {"thin", 1}}},
              {"predict", {{"n_draws", 500}}}});
  } else if (command == "report") {
    d.update({{"run_dir", nullptr}, {"level", 0.95}, {"bins", 40}, {"truth", nullptr}});
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return d;
}

// Merges `patch` into `target`, refusing keys the defaults do not know.
void merge_known(json& target, const json& patch, const std::string& where) {
  for (const auto& [key, value] : patch.items()) {
    if (!target.contains(key)) {
      throw ConfigError("unknown config key '" + where + key + "'");
    }
    if (target[key].is_object() && value.is_object()) {
      merge_known(target[key], value, where + key + ".");
    } else {
      target[key] = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::optional<std::string> get_path(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<std::string>(j, key);
}

fs::path output_dir(const json& cfg) {
  const fs::path out = get<std::string>(cfg, "out");
  if (!fs::is_directory(out)) {
    throw DataError("output directory does not exist: " + out.string());
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) {
    throw DataError("cannot write " + path.string());
  }
  f << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw ConfigError("cannot read config " + path.string());
  }
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

struct Study {
  Grid grid;
  Eigen::MatrixXd design;
  std::vector<GridFunction> curves;
  GridFunction observation;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> truth;
};

int example_of(const json& cfg) {
  if (cfg.at("example").is_null()) return 0;
  const int ex = get<int>(cfg, "example");
  if (ex != 1 && ex != 2) {
    throw ConfigError("example must be 1 or 2");
  }
  return ex;
}

Study simulate_study(int example, const json& cfg, std::uint64_t root) {
  const int n_grid = get<int>(cfg, "n_grid");
  if (n_grid < 3) {
    throw ConfigError("n_grid must be >= 3");
  }
  const int n_runs = cfg.at("n_runs").is_null() ? (example == 1 ? 100 : 300) : get<int>(cfg, "n_runs");
  const Grid grid = Grid::unit(static_cast<std::size_t>(n_grid));
  synthetic::DesignSpec spec;
  if (example == 2) spec = synthetic::example2_design_spec();
  if (cfg.contains("design") && cfg.at("design").is_string()) {
    const auto kind = cfg.at("design").get<std::string>();
    if (kind == "lhs") {
      spec.kind = synthetic::DesignKind::kLatinHypercube;
    } else if (kind != "uniform") {
      throw ConfigError("design must be 'uniform' or 'lhs'");
    }
  }
  const auto design = synthetic::sample_design(n_runs, 3, spec, derive_seed(root, "design"));
  Study s{grid, design.inputs, {}, GridFunction(grid, std::vector<double>(grid.size(), 0.0)), {}, {}, {}};
  for (Eigen::Index i = 0; i < design.inputs.rows(); ++i) {
    const std::vector<double> u{design.inputs(i, 0), design.inputs(i, 1), design.inputs(i, 2)};
    s.curves.push_back(example == 1 ? synthetic::example1_curve(grid, u)
                                    : synthetic::example2_curve(grid, u));
  }
  if (example == 1) {
    s.truth.assign(std::begin(synthetic::kExample1Truth), std::end(synthetic::kExample1Truth));
    s.observation = synthetic::example1_curve(grid, s.truth);
    s.lower = {0.0, 0.0, 0.0};
    s.upper = {1.0, 1.0, 1.0};
  } else {
    s.truth.assign(std::begin(synthetic::kExample2Truth), std::end(synthetic::kExample2Truth));
    s.observation = synthetic::example2_observation(grid);
    s.lower = {0.0, 0.0, 0.0};
    s.upper = {synthetic::kExample2Upper, synthetic::kExample2Upper, 1.0};
  }
  return s;
}

Simulator registered_simulator(const std::string& name, const Grid& grid) {
  if (name == "example1") {
    return [grid](std::span<const double> u) {
      return synthetic::example1_curve(grid, u.first(3));
    };
  }
  if (name == "example2") {
    return [grid](std::span<const double> u) { return synthetic::example2_curve(grid, u); };
  }
  throw ConfigError("unknown simulator '" + name + "' (registered: example1, example2)");
}

Study load_study(const json& cfg, std::uint64_t root) {
  const int example = example_of(cfg);
  const auto curves_path = get_path(cfg, "curves");
  Study s = [&] {
    if (curves_path) {
      const CurveTable table = read_curve_csv(*curves_path);
      const auto design_path = get_path(cfg, "design");
      if (!design_path) {
        throw ConfigError("'curves' requires a 'design' CSV");
      }
      const MatrixTable design = read_matrix_csv(*design_path);
      if (static_cast<std::size_t>(design.data.rows()) != table.curves.size()) {
        throw DataError("design has " + std::to_string(design.data.rows()) + " rows for " +
                        std::to_string(table.curves.size()) + " curves");
      }
      const json& obs = cfg.at("observation");
      const auto obs_file = get_path(obs, "file");
      const auto obs_column = get_path(obs, "column");
      if (!obs_file || !obs_column) {
        throw ConfigError("observation.file and observation.column are required with 'curves'");
      }
      const CurveTable obs_table = read_curve_csv(*obs_file);
      GridFunction observation = obs_table.curves[obs_table.index_of(*obs_column)];
      if (!observation.grid().matches(table.grid)) {
        throw DataError("observation grid does not match the simulation grid");
      }
      Study st{table.grid, design.data, table.curves, observation, {}, {}, {}};
      for (Eigen::Index d = 0; d < design.data.cols(); ++d) {
        st.lower.push_back(design.data.col(d).minCoeff());
        st.upper.push_back(design.data.col(d).maxCoeff());
      }
      return st;
    }
    if (example == 0) {
      throw ConfigError("calibrate needs either 'curves' + 'design' or an example");
    }
    return simulate_study(example, cfg, root);
  }();
  if (cfg.at("input_bounds").is_object()) {
    s.lower = get<std::vector<double>>(cfg.at("input_bounds"), "lower");
    s.upper = get<std::vector<double>>(cfg.at("input_bounds"), "upper");
    if (s.lower.size() != static_cast<std::size_t>(s.design.cols()) || s.upper.size() != s.lower.size()) {
      throw ConfigError("input_bounds need one entry per design column");
    }
  }
  return s;
}

double value_variance(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

double ensemble_variance(const std::vector<ShootingVector>& vs) {
  std::vector<double> all;
  for (const auto& v : vs) all.insert(all.end(), v.values().begin(), v.values().end());
  return value_variance(all);
}

Prior sigma2_prior(const json& spec, double signal_variance) {
  if (spec.is_null()) return default_sigma2_prior(signal_variance);
  return Prior::from_json(spec);
}

std::optional<DiscrepancyBasis> discrepancy_from(const json& spec, const Grid& grid) {
  if (spec.is_null()) return std::nullopt;
  const auto type = get<std::string>(spec, "type");
  if (type != "shift") {
    throw ConfigError("unsupported discrepancy type '" + type + "'");
  }
  const auto breaks = get<std::vector<double>>(spec, "breakpoints");
  const int active = spec.contains("active_segment") ? get<int>(spec, "active_segment") : 1;
  const double sd = spec.contains("prior_sd") ? get<double>(spec, "prior_sd") : 1.0;
  return build_shift_discrepancy_basis(grid, breaks, active, sd);
}

json example2_shift_defaults() {
  return {{"shooting", {{"type", "shift"}, {"breakpoints", {0.255, 0.28, 0.933}}, {"active_segment", 1}, {"prior_sd", 1.0}}}};
}

void write_chain(const fs::path& path, const PosteriorSamples& s) {
  const auto d = static_cast<Eigen::Index>(s.theta.cols());
  const auto k = static_cast<Eigen::Index>(s.discrepancy_coeffs.cols());
  const auto n = static_cast<Eigen::Index>(s.draws());
  Eigen::MatrixXd data(n, d + 3 + k);
  data.leftCols(d) = s.theta;
  for (Eigen::Index i = 0; i < n; ++i) {
    data(i, d) = s.sigma2_aligned[static_cast<std::size_t>(i)];
    data(i, d + 1) = s.sigma2_shooting[static_cast<std::size_t>(i)];
    data(i, d + 2 + k) = s.log_posterior[static_cast<std::size_t>(i)];
  }
  data.block(0, d + 2, n, k) = s.discrepancy_coeffs;
  std::vector<std::string> header = numbered("theta_", static_cast<std::size_t>(d));
  header.push_back("sigma2_aligned");
  header.push_back("sigma2_shooting");
  for (const auto& c : numbered("d_", static_cast<std::size_t>(k))) header.push_back(c);
  header.push_back("log_posterior");
  write_matrix_csv(path, header, data);
}

}  // namespace

json resolve_config(const std::string& command, const Flags& flags) {
  json cfg = defaults_for(command);
  if (flags.config) {
    const json file = read_json(*flags.config);
    if (!file.is_object()) {
      throw ConfigError("config must be a JSON object");
    }
    if (!file.contains("schema_version")) {
      throw ConfigError("config is missing 'schema_version'");
    }
    merge_known(cfg, file, "");
  }
  if (!cfg.at("schema_version").is_number_integer() ||
      cfg.at("schema_version").get<int>() != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + cfg.at("schema_version").dump() +
                      " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  const auto set = [&](const char* key, const json& value, const char* flag) {
    if (!cfg.contains(key)) {
      throw ConfigError(std::string(flag) + " does not apply to '" + command + "'");
    }
    cfg[key] = value;
  };
  if (flags.seed) set("seed", *flags.seed, "--seed");
  if (flags.out) set("out", flags.out->string(), "--out");
  if (flags.mode) set("mode", *flags.mode, "--mode");
  if (flags.example) set("example", *flags.example, "--example");
  return cfg;
}

void cmd_simulate(const json& cfg) {
  const fs::path out = output_dir(cfg);
  write_json(out / "resolved_config.json", cfg);
  const int example = example_of(cfg);
  if (example == 0) {
    throw ConfigError("simulate needs --example 1 or 2");
  }
  const auto root = get<std::uint64_t>(cfg, "seed");
  const Study s = simulate_study(example, cfg, root);

  const std::vector<std::string> cols{"u0", "u1", "u2"};
  write_matrix_csv(out / "design.csv", cols, s.design);
  write_curve_csv(out / "curves.csv", numbered("run_", s.curves.size()), s.curves);
  const std::vector<std::string> obs_name{"observation"};
  write_curve_csv(out / "observation.csv", obs_name, std::span(&s.observation, 1));
  json truth = {{"example", example}, {"u_star", s.truth}, {"seed", root},
                {"design_seed", derive_seed(root, "design")}};
  if (example == 2) truth["shift"] = synthetic::kExample2Shift;
  write_json(out / "truth.json", truth);
  spdlog::info("simulate: wrote {} runs to {}", s.curves.size(), out.string());
}

void cmd_align(const json& cfg) {
  const fs::path out = output_dir(cfg);
  write_json(out / "resolved_config.json", cfg);
  const auto curves_path = get_path(cfg, "curves");
  const auto reference_id = get_path(cfg, "reference_id");
  if (!curves_path || !reference_id) {
    throw ConfigError("align needs 'curves' and 'reference_id'");
  }
  const CurveTable table = read_curve_csv(*curves_path);
  const auto ref_path = get_path(cfg, "reference_file");
  const CurveTable ref_table = ref_path ? read_curve_csv(*ref_path) : table;
  const GridFunction& reference = ref_table.curves[ref_table.index_of(*reference_id)];

  DpOptions opts;
  opts.lambda = get<double>(cfg, "lambda");
  opts.max_step = get<int>(cfg, "max_step");
  opts.refine_passes = get<int>(cfg, "refine_passes");
  const Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.curves.size()), 0);
  const DecomposedEnsemble ens = decompose_ensemble(reference, table.curves, inputs, opts, *reference_id);
  write_decomposition(out, ens, table.names);
  spdlog::info("align: {} curves aligned to '{}'", ens.size(), *reference_id);
}

void cmd_calibrate(const json& cfg) {
  const fs::path out = output_dir(cfg);
  const int example = example_of(cfg);
  json resolved = cfg;
  if (example == 2 && resolved.at("discrepancy").is_null()) {
    resolved["discrepancy"] = example2_shift_defaults();
  }
  if (example != 0 && resolved.at("simulator").is_null() && get<std::string>(cfg, "mode") == "direct") {
    resolved["simulator"] = example == 1 ? "example1" : "example2";
  }
  write_json(out / "resolved_config.json", resolved);

  const auto root = get<std::uint64_t>(resolved, "seed");
  const auto mode = get<std::string>(resolved, "mode");
  if (mode != "emulator" && mode != "direct") {
    throw ConfigError("--mode must be 'emulator' or 'direct'");
  }
  const bool elastic = get<bool>(resolved, "elastic");
  DpOptions dp;
  dp.lambda = get<double>(resolved, "lambda");
  dp.max_step = get<int>(resolved, "max_step");
  dp.refine_passes = get<int>(resolved, "refine_passes");

  CalibrationProblem problem;
  problem.include_emulator_variance = get<bool>(resolved, "include_emulator_variance");
  problem.use_shooting = elastic;
  std::vector<double> lower;
  std::vector<double> upper;
  GridFunction observation(Grid::unit(3), {0.0, 0.0, 0.0});
  double shooting_signal = 0.0;
  json emulator_info = json::object();

  if (mode == "direct") {
    const auto sim_name = get_path(resolved, "simulator");
    if (!sim_name) {
      throw ConfigError("--mode direct requires a registered 'simulator'");
    }
    if (!elastic) {
      throw ConfigError("--mode direct supports only the elastic model");
    }
    const Study s = load_study(resolved, root);
    observation = s.observation;
    lower = s.lower;
    upper = s.upper;
    const Simulator sim = registered_simulator(*sim_name, s.grid);
    problem.forward = std::make_shared<DirectForward>(sim, std::vector<GridFunction>{observation}, dp);
    std::vector<ShootingVector> pilot;
    const std::size_t n_pilot = std::min<std::size_t>(20, s.curves.size());
    for (std::size_t i = 0; i < n_pilot; ++i) {
      pilot.push_back(gamma_to_shooting(align_curve(observation, s.curves[i], dp).gamma));
    }
    shooting_signal = pilot.empty() ? 1.0 : ensemble_variance(pilot);
  } else {
    const Study s = load_study(resolved, root);
    observation = s.observation;
    lower = s.lower;
    upper = s.upper;
    const json& ecfg = resolved.at("emulator");
    EmulatorOptions eopt;
    eopt.variance_target = get<double>(ecfg, "variance_target");
    eopt.lower = lower;
    eopt.upper = upper;
    eopt.seed = derive_seed(root, "emulator");
    const json& gcfg = ecfg.at("gp");
    eopt.gp.min_lengthscale = get<double>(gcfg, "min_lengthscale");
    eopt.gp.max_lengthscale = get<double>(gcfg, "max_lengthscale");
    eopt.gp.min_nugget = get<double>(gcfg, "min_nugget");
    eopt.gp.max_nugget = get<double>(gcfg, "max_nugget");
    const auto trend = get<std::string>(gcfg, "trend");
    if (trend != "constant" && trend != "linear") {
      throw ConfigError("emulator.gp.trend must be 'constant' or 'linear'");
    }
    eopt.gp.trend = trend == "linear" ? GpTrend::kLinear : GpTrend::kConstant;
    const int cv_folds = get<int>(ecfg, "cv_folds");
    std::shared_ptr<const Emulator> aligned_em;
    std::shared_ptr<const Emulator> shooting_em;
    if (elastic) {
      const DecomposedEnsemble ens = decompose_ensemble(observation, s.curves, s.design, dp, "observation");
      shooting_signal = ensemble_variance(ens.shooting_vectors);
      std::vector<GridFunction> shooting_fns;
      for (const auto& v : ens.shooting_vectors) shooting_fns.push_back(v.as_function());
      if (const auto f = get_path(ecfg, "aligned_file")) {
        aligned_em = std::make_shared<const Emulator>(Emulator::load(*f));
      } else {
        aligned_em = std::make_shared<const Emulator>(Emulator::train(s.design, ens.aligned_curves, eopt));
      }
      if (const auto f = get_path(ecfg, "shooting_file")) {
        shooting_em = std::make_shared<const Emulator>(Emulator::load(*f));
      } else {
        shooting_em = std::make_shared<const Emulator>(Emulator::train(s.design, shooting_fns, eopt));
      }
      if (cv_folds > 0) {
        write_cv_report(out / "cv_aligned.csv",
                        cross_validate(s.design, ens.aligned_curves, cv_folds, eopt, derive_seed(root, "cv")));
        write_cv_report(out / "cv_shooting.csv",
                        cross_validate(s.design, shooting_fns, cv_folds, eopt, derive_seed(root, "cv")));
      }
    } else {
      if (const auto f = get_path(ecfg, "aligned_file")) {
        aligned_em = std::make_shared<const Emulator>(Emulator::load(*f));
      } else {
        aligned_em = std::make_shared<const Emulator>(Emulator::train(s.design, s.curves, eopt));
      }
      if (cv_folds > 0) {
        write_cv_report(out / "cv_aligned.csv",
                        cross_validate(s.design, s.curves, cv_folds, eopt, derive_seed(root, "cv")));
      }
    }
    aligned_em->save(out / "aligned_emulator.json");
    emulator_info["aligned_components"] = aligned_em->basis().n_comp();
    emulator_info["aligned_residual_variance"] = aligned_em->residual_variance();
    if (shooting_em) {
      shooting_em->save(out / "shooting_emulator.json");
      emulator_info["shooting_components"] = shooting_em->basis().n_comp();
      emulator_info["shooting_residual_variance"] = shooting_em->residual_variance();
    }
    problem.forward = std::make_shared<EmulatorForward>(aligned_em, shooting_em);
  }

  const Grid unit = observation.grid().normalized();
  problem.experiments.push_back(Experiment{observation, ShootingVector::zero(unit), {}});

  if (resolved.at("priors").is_null()) {
    for (std::size_t d = 0; d < lower.size(); ++d) problem.theta_priors.push_back(Prior::uniform(lower[d], upper[d]));
  } else {
    for (const auto& p : resolved.at("priors")) problem.theta_priors.push_back(Prior::from_json(p));
  }
  const json& s2 = resolved.at("sigma2");
  problem.sigma2_aligned_prior = sigma2_prior(s2.at("aligned"), value_variance(observation.values()));
  problem.sigma2_shooting_prior = sigma2_prior(s2.at("shooting"), shooting_signal > 0.0 ? shooting_signal : 1.0);
  if (resolved.at("discrepancy").is_object()) {
    const json& disc = resolved.at("discrepancy");
    if (disc.contains("shooting")) problem.discrepancy_shooting = discrepancy_from(disc.at("shooting"), unit);
    if (disc.contains("aligned")) problem.discrepancy_aligned = discrepancy_from(disc.at("aligned"), observation.grid());
  }
  problem.validate();

  const json& mc = resolved.at("mcmc");
  McmcConfig mcfg;
  mcfg.n_iter = get<int>(mc, "n_iter");
  mcfg.n_burn = get<int>(mc, "n_burn");
  mcfg.proposal_scale_init = get<double>(mc, "proposal_scale_init");
  mcfg.thin = get<int>(mc, "thin");
  mcfg.seed = derive_seed(root, "mcmc");
  const PosteriorSamples samples = mcmc_sample(problem, mcfg);
  write_chain(out / "chain.csv", samples);

  PredictOptions popt;
  popt.n_draws = get<int>(resolved.at("predict"), "n_draws");
  popt.seed = derive_seed(root, "predict");
  const PredictiveSample pred = posterior_predict(samples, problem, popt);
  write_curve_csv(out / "predictive.csv", numbered("draw_", pred.curves.size()), pred.curves);
  const std::vector<std::string> obs_name{"observation"};
  write_curve_csv(out / "observation.csv", obs_name, std::span(&observation, 1));

  json ess = json::object();
  json mean = json::object();
  for (Eigen::Index j = 0; j < samples.theta.cols(); ++j) {
    const Eigen::VectorXd col = samples.theta.col(j);
    const std::span<const double> v(col.data(), static_cast<std::size_t>(col.size()));
    const std::string name = "theta_" + std::to_string(j);
    ess[name] = effective_sample_size(v);
    mean[name] = col.mean();
  }
  json support = json::array();
  for (const auto& p : problem.theta_priors) {
    const auto bound = [](double b) { return std::isfinite(b) ? json(b) : json(nullptr); };
    support.push_back({bound(p.lower()), bound(p.upper())});
  }
  const json diagnostics = {
      {"seed", root},
      {"mcmc_seed", mcfg.seed},
      {"mode", mode},
      {"elastic", elastic},
      {"n_iter", mcfg.n_iter},
      {"n_burn", mcfg.n_burn},
      {"draws", samples.draws()},
      {"acceptance",
       {{"theta", samples.acceptance.theta},
        {"sigma2_aligned", samples.acceptance.sigma2_aligned},
        {"sigma2_shooting", samples.acceptance.sigma2_shooting}}},
      {"ess", ess},
      {"posterior_mean", mean},
      {"theta_support", support},
      {"predictive_draws", pred.curves.size()},
      {"predictive_resampled", pred.resampled},
      {"emulator", emulator_info}};
  write_json(out / "diagnostics.json", diagnostics);
  spdlog::info("calibrate: {} draws, theta acceptance {:.3f}", samples.draws(), samples.acceptance.theta);
}

void cmd_report(const json& cfg) {
  const fs::path out = output_dir(cfg);
  write_json(out / "resolved_config.json", cfg);
  const auto run_dir = get_path(cfg, "run_dir");
  if (!run_dir) {
    throw ConfigError("report needs 'run_dir'");
  }
  const double level = get<double>(cfg, "level");
  const int bins = get<int>(cfg, "bins");
  const MatrixTable chain = read_matrix_csv(fs::path(*run_dir) / "chain.csv");
  if (chain.data.rows() == 0) {
    throw DataError("report: chain.csv has no draws");
  }
  std::vector<int> theta_cols;
  for (std::size_t c = 0; c < chain.header.size(); ++c) {
    if (chain.header[c].rfind("theta_", 0) == 0) theta_cols.push_back(static_cast<int>(c));
  }
  if (theta_cols.empty()) {
    throw DataError("report: chain.csv has no theta columns");
  }
  std::vector<double> truth;
  if (!cfg.at("truth").is_null()) truth = get<std::vector<double>>(cfg, "truth");
  // Prior supports recorded by calibrate; intervals are snapped onto them.
  std::vector<std::pair<double, double>> support;
  const fs::path diag_path = fs::path(*run_dir) / "diagnostics.json";
  if (fs::exists(diag_path)) {
    const json diag = read_json(diag_path);
    if (diag.contains("theta_support")) {
      const auto bound = [](const json& b, double fallback) { return b.is_null() ? fallback : b.get<double>(); };
      constexpr double inf = std::numeric_limits<double>::infinity();
      for (const auto& b : diag.at("theta_support")) support.emplace_back(bound(b.at(0), -inf), bound(b.at(1), inf));
    }
  }

  json summary = {{"level", level}, {"draws", chain.data.rows()}, {"parameters", json::object()}};
  std::vector<std::vector<double>> cols;
  std::vector<std::vector<double>> marg_rows;
  for (std::size_t k = 0; k < theta_cols.size(); ++k) {
    const Eigen::VectorXd c = chain.data.col(theta_cols[k]);
    cols.emplace_back(c.data(), c.data() + c.size());
    const auto& v = cols.back();
    Interval iv = credible_interval(v, level);
    if (k < support.size()) iv = snap_to_support(iv, support[k].first, support[k].second);
    json p = {{"mean", c.mean()}, {"lower", iv.lo}, {"upper", iv.hi}, {"ess", effective_sample_size(v)},
              {"mcse", mcse_mean(v)}};
    if (k < truth.size()) {
      p["truth"] = truth[k];
      p["covers_truth"] = iv.contains(truth[k]);
    }
    summary["parameters"][chain.header[static_cast<std::size_t>(theta_cols[k])]] = p;
    double lo = c.minCoeff(), hi = c.maxCoeff();
    if (!(hi > lo)) hi = lo + 1.0;
    const Histogram h = histogram(v, bins, lo, hi);
    for (int b = 0; b < bins; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      marg_rows.push_back({static_cast<double>(k), h.edges[ub], h.edges[ub + 1], h.density[ub]});
    }
  }
  Eigen::MatrixXd marg(static_cast<Eigen::Index>(marg_rows.size()), 4);
  for (std::size_t r = 0; r < marg_rows.size(); ++r) {
    for (int c = 0; c < 4; ++c) marg(static_cast<Eigen::Index>(r), c) = marg_rows[r][static_cast<std::size_t>(c)];
  }
  const std::vector<std::string> marg_header{"parameter", "bin_lo", "bin_hi", "density"};
  write_matrix_csv(out / "marginals.csv", marg_header, marg);

  std::vector<std::array<double, 5>> contour_rows;
  json areas = json::array();
  for (std::size_t a = 0; a < cols.size(); ++a) {
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      const Density2d dens = kde_2d(cols[a], cols[b]);
      const HpdRegion hpd = hpd_region(dens, level);
      areas.push_back({{"pair", {a, b}}, {"area", hpd.area}});
      const auto lines = contour_lines(dens, hpd.threshold);
      for (std::size_t l = 0; l < lines.size(); ++l) {
        for (const auto& [x, y] : lines[l]) {
          contour_rows.push_back({static_cast<double>(a), static_cast<double>(b), static_cast<double>(l), x, y});
        }
      }
    }
  }
  Eigen::MatrixXd cont(static_cast<Eigen::Index>(contour_rows.size()), 5);
  for (std::size_t r = 0; r < contour_rows.size(); ++r) {
    for (int c = 0; c < 5; ++c) cont(static_cast<Eigen::Index>(r), c) = contour_rows[r][static_cast<std::size_t>(c)];
  }
  const std::vector<std::string> cont_header{"param_a", "param_b", "line", "x", "y"};
  write_matrix_csv(out / "contours.csv", cont_header, cont);
  summary["hpd_areas"] = areas;

  const fs::path pred_path = fs::path(*run_dir) / "predictive.csv";
  const fs::path obs_path = fs::path(*run_dir) / "observation.csv";
  if (fs::exists(pred_path) && fs::exists(obs_path)) {
    const CurveTable pred = read_curve_csv(pred_path);
    const CurveTable obs = read_curve_csv(obs_path);
    if (!pred.grid.matches(obs.grid)) {
      throw DataError("report: predictive and observation grids differ");
    }
    const Band band = pointwise_band(pred.curves, level);
    const auto& z = obs.curves.front();
    summary["coverage"] = band_coverage(band, z.values());
    const std::vector<std::string> names{"lower", "median", "upper", "observed"};
    const std::vector<std::vector<double>> columns{
        band.lower, band.median, band.upper, std::vector<double>(z.values().begin(), z.values().end())};
    write_curve_csv(out / "bands.csv", pred.grid, names, columns);
  }
  write_json(out / "summary.json", summary);
}

int run(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, char** argv) {
  CLI::App app{"Elastic Bayesian model calibration"};
  app.require_subcommand(1);
  Flags flags;
  std::string seed_text;
  std::string out_text;
  std::string config_text;
  std::string mode_text;
  int example = 0;
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  for (const char* name : {"simulate", "align", "calibrate", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_text, "JSON config file");
    sub->add_option("--seed", seed_text, "Top-level seed (u64)");
    sub->add_option("--out", out_text, "Existing output directory");
    sub->add_option("--mode", mode_text, "emulator or direct");
    sub->add_option("--example", example, "Built-in study: 1 or 2");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    if (sub->count("--config")) flags.config = config_text;
    if (sub->count("--seed")) {
      std::size_t pos = 0;
      try {
        flags.seed = std::stoull(seed_text, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != seed_text.size() || seed_text.empty() || seed_text.front() == '-') {
        throw ConfigError("--seed must be an unsigned 64-bit integer, got '" + seed_text + "'");
      }
    }
    if (sub->count("--out")) flags.out = out_text;
    if (sub->count("--mode")) flags.mode = mode_text;
    if (sub->count("--example")) flags.example = example;
    const json cfg = resolve_config(command, flags);
    if (command == "simulate") cmd_simulate(cfg);
    if (command == "align") cmd_align(cfg);
    if (command == "calibrate") cmd_calibrate(cfg);
    if (command == "report") cmd_report(cfg);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace ecal::cli
