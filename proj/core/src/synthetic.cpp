#include "pls/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pls::synthetic {

SyntheticProblem make_problem(const SyntheticSpec& spec, std::uint64_t seed, safe::Metric metric) {
  SyntheticProblem p;
  p.grid = spec.lattice.points();
  p.reward = gp::sample_prior_path(spec.kernel_r, p.grid, derive_seed(seed, 0));
  p.cost = gp::sample_prior_path(spec.kernel_g, p.grid, derive_seed(seed, 1));
  for (double& v : p.reward) v += spec.mean_r;
  for (double& v : p.cost) v += spec.mean_g;
  p.seed_index = static_cast<std::size_t>(std::min_element(p.cost.begin(), p.cost.end()) - p.cost.begin());

  for (std::size_t i = 0; i < p.grid.size(); ++i)
    for (std::size_t k = i + 1; k < p.grid.size(); ++k) {
      const double d = safe::distance(p.grid[i], p.grid[k], metric);
      if (d > 0.0) p.lipschitz = std::max(p.lipschitz, std::abs(p.cost[i] - p.cost[k]) / d);
    }
  return p;
}

safe::Evaluator make_evaluator(const SyntheticProblem& problem, double noise_std_r, double noise_std_g) {
  return [&problem, noise_std_r, noise_std_g](const TargetReturn&, std::size_t index, std::uint64_t seed) {
    if (index >= problem.grid.size()) throw std::out_of_range("synthetic evaluator: grid index");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    safe::Observation obs;
    obs.reward = problem.reward[index] + noise_std_r * normal(rng);
    obs.cost = problem.cost[index] + noise_std_g * normal(rng);
    obs.reward_se = noise_std_r;
    obs.cost_se = noise_std_g;
    obs.true_reward = problem.reward[index];
    obs.true_cost = problem.cost[index];
    return obs;
  };
}

std::vector<std::size_t> reachable_feasible(const safe::Lattice& lattice, const std::vector<double>& cost,
                                            double threshold, std::size_t start) {
  if (cost.size() != lattice.size()) throw std::invalid_argument("reachable_feasible: size mismatch");
  std::vector<std::size_t> out;
  if (start >= cost.size() || !(cost[start] <= threshold)) return out;

  std::vector<bool> seen(cost.size(), false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    const int ir = static_cast<int>(cur / static_cast<std::size_t>(lattice.g_points));
    const int ig = static_cast<int>(cur % static_cast<std::size_t>(lattice.g_points));
    for (int dr = -1; dr <= 1; ++dr)
      for (int dg = -1; dg <= 1; ++dg) {
        const int nr = ir + dr, ng = ig + dg;
        if (nr < 0 || ng < 0 || nr >= lattice.r_points || ng >= lattice.g_points) continue;
        const std::size_t k = lattice.index(nr, ng);
        if (seen[k] || !(cost[k] <= threshold)) continue;
        seen[k] = true;
        stack.push_back(k);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pls::synthetic
