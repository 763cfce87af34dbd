#pragma once

#include <cstdint>
#include <vector>

#include "pls/gp.hpp"
#include "pls/safe_optimizer.hpp"

namespace pls::synthetic {

/// Benchmark whose J_r and J_g are GP prior sample paths (plus constant
/// means) drawn with the same kernels the optimizer uses.
struct SyntheticSpec {
  safe::Lattice lattice;
  gp::KernelSpec kernel_r;
  gp::KernelSpec kernel_g;
  double mean_r = 0.0;
  double mean_g = 0.0;
  double noise_std_r = 0.1;
  double noise_std_g = 0.1;
};

struct SyntheticProblem {
  std::vector<TargetReturn> grid;
  std::vector<double> reward;
  std::vector<double> cost;
  std::size_t seed_index = 0;  // argmin of the true cost: the known-safe seed
  double lipschitz = 0.0;      // smallest L making J_g L-Lipschitz on the grid
};

/// Reward path uses derive_seed(seed, 0), cost path derive_seed(seed, 1).
SyntheticProblem make_problem(const SyntheticSpec& spec, std::uint64_t seed, safe::Metric metric);

/// Noisy evaluator y = J(z) + N(0, noise_std^2), reporting the truth too.
safe::Evaluator make_evaluator(const SyntheticProblem& problem, double noise_std_r, double noise_std_g);

/// Grid indices of the feasible (J_g <= b) component containing `start`,
/// using 8-neighbour lattice adjacency. Empty if `start` is infeasible.
std::vector<std::size_t> reachable_feasible(const safe::Lattice& lattice, const std::vector<double>& cost,
                                            double threshold, std::size_t start);

}  // namespace pls::synthetic
