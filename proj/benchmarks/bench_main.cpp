#include <benchmark/benchmark.h>

#include <memory>

#include "ecal/align.hpp"
#include "ecal/calibrate.hpp"
#include "ecal/emulator.hpp"
#include "ecal/synthetic.hpp"

using namespace ecal;

namespace {

struct Fixture {
  Grid grid;
  Eigen::MatrixXd inputs;
  std::vector<GridFunction> curves;
};

Fixture example1_runs(std::size_t n_grid, int n_runs) {
  Fixture f{Grid::unit(n_grid), {}, {}};
  f.inputs = synthetic::sample_design(n_runs, 3, {}, 11).inputs;
  for (Eigen::Index i = 0; i < f.inputs.rows(); ++i) {
    const std::vector<double> u{f.inputs(i, 0), f.inputs(i, 1), f.inputs(i, 2)};
    f.curves.push_back(synthetic::example1_curve(f.grid, u));
  }
  return f;
}

void BM_DpAlign(benchmark::State& state) {
  const Grid g = Grid::unit(static_cast<std::size_t>(state.range(0)));
  const std::vector<double> a{0.3, 0.7, 0.0};
  const std::vector<double> b{0.6, 0.4, 0.0};
  const Srvf q1 = to_srvf(synthetic::example1_curve(g, a));
  const Srvf q2 = to_srvf(synthetic::example1_curve(g, b));
  for (auto _ : state) benchmark::DoNotOptimize(dp_align(q1, q2));
}
BENCHMARK(BM_DpAlign)->Arg(101)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_EmulatorPredict(benchmark::State& state) {
  const Fixture f = example1_runs(static_cast<std::size_t>(state.range(0)), 100);
  const Emulator em = Emulator::train(f.inputs, f.curves);
  const std::vector<double> u{0.4, 0.5, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(em.predict(u));
}
BENCHMARK(BM_EmulatorPredict)->Arg(101)->Arg(401)->Unit(benchmark::kMicrosecond);

void BM_LogLikelihood(benchmark::State& state) {
  const Fixture f = example1_runs(static_cast<std::size_t>(state.range(0)), 100);
  auto em = std::make_shared<const Emulator>(Emulator::train(f.inputs, f.curves));
  CalibrationProblem p;
  const std::vector<double> truth{0.1028, 0.593, 0.5};
  p.experiments = {Experiment{synthetic::example1_curve(f.grid, truth), ShootingVector::zero(f.grid), {}}};
  p.forward = std::make_shared<EmulatorForward>(em, nullptr);
  p.theta_priors = {Prior::uniform(0.0, 1.0), Prior::uniform(0.0, 1.0), Prior::uniform(0.0, 1.0)};
  p.use_shooting = false;
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(truth, 1e-3, 1.0, {}, p));
}
BENCHMARK(BM_LogLikelihood)->Arg(101)->Arg(401)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
