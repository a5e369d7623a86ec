#include <benchmark/benchmark.h>

#include <random>

#include "plsivc/estimator.hpp"
#include "plsivc/simulation.hpp"
#include "plsivc/spline_basis.hpp"

using namespace plsivc;

static void BM_EvalBasis(benchmark::State& state) {
  const KnotVector kv(3, -1.0, 1.0, {-0.5, 0.0, 0.5});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> points(1024);
  for (auto& p : points) p = u(rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_local(kv, points[i++ & 1023], state.range(0) != 0));
  }
}
BENCHMARK(BM_EvalBasis)->Arg(0)->Arg(1);

static void BM_GramMatrix(benchmark::State& state) {
  std::vector<double> interior;
  for (int k = 1; k <= state.range(0); ++k) interior.push_back(-1.0 + 2.0 * k / (state.range(0) + 1));
  const KnotVector kv(3, -1.0, 1.0, interior);
  for (auto _ : state) benchmark::DoNotOptimize(gram_matrix(kv));
}
BENCHMARK(BM_GramMatrix)->Arg(2)->Arg(8);

static void BM_FitPenalized(benchmark::State& state) {
  SimConfig sim;
  sim.n = state.range(0);
  const Dataset data = gen_dataset(sim, default_truth(), 0);
  FitConfig cfg;
  cfg.num_interior = 2;
  cfg.penalty.lambda = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(fit_penalized(data, cfg));
}
BENCHMARK(BM_FitPenalized)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Replication(benchmark::State& state) {
  SimConfig sim;
  sim.n = 200;
  sim.tuning.knots = {2};
  sim.tuning.lambdas = {0.01, 0.05, 0.2};
  const Truth truth = default_truth();
  int r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replication(sim, truth, r++));
}
BENCHMARK(BM_Replication)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
