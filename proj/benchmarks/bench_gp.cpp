#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pls/gp.hpp"
#include "pls/safe_optimizer.hpp"

using namespace pls;

namespace {

std::vector<TargetReturn> random_inputs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::vector<TargetReturn> x(n);
  for (auto& z : x) z = {u(rng), u(rng)};
  return x;
}

void BM_FitPosterior(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_inputs(n, 1);
  const std::vector<double> y(n, 0.5);
  const gp::KernelSpec spec{5.0, 5.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(gp::fit_posterior(x, y, 0.01, spec));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitPosterior)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_PredictGrid(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_inputs(n, 2);
  const std::vector<double> y(n, 0.5);
  const auto model = gp::fit_posterior(x, y, 0.01, {5.0, 5.0, 1.0});
  const auto grid = safe::Lattice{0, 20, 21, 0, 20, 21}.points();
  for (auto _ : state) benchmark::DoNotOptimize(gp::predict(model, std::span<const TargetReturn>(grid)));
}
BENCHMARK(BM_PredictGrid)->RangeMultiplier(2)->Range(8, 256);

}  // namespace
