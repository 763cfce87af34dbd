#include <benchmark/benchmark.h>

#include "pls/safe_optimizer.hpp"
#include "pls/synthetic.hpp"

using namespace pls;

namespace {

// One full optimizer run on a synthetic 21x21 problem.
void BM_RunPls(benchmark::State& state) {
  synthetic::SyntheticSpec spec;
  spec.lattice = {0, 20, 21, 0, 20, 21};
  spec.kernel_r = spec.kernel_g = {5.0, 5.0, 1.0};
  spec.mean_g = 3.0;
  const auto problem = synthetic::make_problem(spec, 17, safe::Metric::chebyshev);
  const auto evaluator = synthetic::make_evaluator(problem, 0.1, 0.1);

  safe::PlsConfig cfg;
  cfg.threshold = 3.0;
  cfg.grid = problem.grid;
  cfg.kernel_r = cfg.kernel_g = spec.kernel_r;
  cfg.noise_variance_r = cfg.noise_variance_g = 0.01;
  cfg.prior_mean_r = 0.0;
  cfg.prior_mean_g = 3.0;
  cfg.initial_safe_set = {problem.seed_index};
  cfg.max_exploration_iters = static_cast<int>(state.range(0));
  cfg.max_maximization_iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(safe::run_pls(cfg, evaluator));
}
BENCHMARK(BM_RunPls)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
