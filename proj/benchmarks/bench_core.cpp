#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "torusppca/model_selection.hpp"
#include "torusppca/simulation.hpp"
#include "torusppca/tppca.hpp"
#include "torusppca/wrapped_normal.hpp"

using namespace torusppca;

namespace {

// Scenario of the reference grid with D = 5, d = 2; sigma index from the range argument.
SimScenario scenario(int n, int sigma_eighths) {
  SimScenario s;
  s.n = n;
  s.D = 5;
  s.d_true = 2;
  s.sigma = sigma_eighths * std::numbers::pi / 8;
  s.seed = 11;
  return s;
}

WnParams true_params(const SimScenario& s) {
  const SimDataset d = gen_dataset(s, 0);
  return WnParams{d.mu_true, d.w_true * d.w_true.transpose() +
                                 s.sigma * s.sigma * Eigen::MatrixXd::Identity(s.D, s.D)};
}

void BM_LogDensity(benchmark::State& state) {
  const SimScenario s = scenario(100, static_cast<int>(state.range(0)));
  LatticeOptions opts;
  opts.radius = static_cast<int>(state.range(1));
  const WrappedNormalLattice lat(true_params(s), opts);
  const AngleMatrix y = gen_dataset(s, 1).y;
  Eigen::Index j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lat.log_density(y.row(j)));
    j = (j + 1) % y.rows();
  }
}
BENCHMARK(BM_LogDensity)->ArgsProduct({{1, 4, 16}, {2, 6}});

void BM_BestWinding(benchmark::State& state) {
  const SimScenario s = scenario(100, static_cast<int>(state.range(0)));
  const WrappedNormalLattice lat(true_params(s), LatticeOptions{});
  const AngleMatrix y = gen_dataset(s, 1).y;
  Eigen::Index j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lat.best_winding(y.row(j)));
    j = (j + 1) % y.rows();
  }
}
BENCHMARK(BM_BestWinding)->Arg(1)->Arg(4)->Arg(16);

void BM_TppcaFit(benchmark::State& state) {
  const SimScenario s = scenario(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const AngleMatrix y = gen_dataset(s, 0).y;
  TppcaConfig cfg;
  cfg.d = 2;
  for (auto _ : state) benchmark::DoNotOptimize(tppca_fit(y, cfg).model.sigma2);
}
BENCHMARK(BM_TppcaFit)->ArgsProduct({{100, 500}, {1, 8}})->Unit(benchmark::kMillisecond);

void BM_CvSelect(benchmark::State& state) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(state.range(0), 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(g);
  for (auto _ : state) benchmark::DoNotOptimize(cv_select(x).chosen_d);
}
BENCHMARK(BM_CvSelect)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
