#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace pls::cmdp {

using Rng = std::mt19937_64;
using ActionDistribution = std::vector<double>;

/// Finite-horizon tabular CMDP <S, A, P, H, s1, r, g>.
///
/// Time steps are 0-based internally (t = 0 .. horizon-1). Rewards and costs
/// are per-step table values in [0, 1]; with jitter > 0 every sampled value
/// gets independent uniform noise on [-jitter, jitter], clamped to [0, 1].
struct TabularCmdp {
  std::string name;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int initial_state = 0;
  double jitter = 0.0;
  std::vector<double> transition;  // [s][a][s'] row-major
  std::vector<double> reward;      // [s][a]
  std::vector<double> cost;        // [s][a]

  /// Zero-filled tables of the right shape.
  static TabularCmdp zeros(int num_states, int num_actions, int horizon);

  std::size_t sa(int s, int a) const noexcept {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions) +
           static_cast<std::size_t>(a);
  }
  double& p(int s, int a, int next) {
    return transition[sa(s, a) * static_cast<std::size_t>(num_states) + static_cast<std::size_t>(next)];
  }
  double p(int s, int a, int next) const {
    return transition[sa(s, a) * static_cast<std::size_t>(num_states) + static_cast<std::size_t>(next)];
  }
  double r(int s, int a) const { return reward[sa(s, a)]; }
  double g(int s, int a) const { return cost[sa(s, a)]; }
};

struct Violation {
  std::string message;
  int state = -1;
  int action = -1;
};

/// Every violated invariant, with indices. Empty means valid.
std::vector<Violation> validate_cmdp(const TabularCmdp& cmdp);

/// Throws std::invalid_argument listing the violations, if any.
void require_valid(const TabularCmdp& cmdp);

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  double cost = 0.0;
};

struct Episode {
  std::vector<Step> steps;
  double total_reward = 0.0;
  double total_cost = 0.0;
};

/// Behavior policies see only (t, s_t); the signature has no access to past
/// rewards or costs.
using BehaviorPolicy = std::function<ActionDistribution(int t, int state)>;

BehaviorPolicy uniform_policy(int num_actions);

struct Dataset {
  std::vector<Episode> episodes;
  std::uint64_t seed = 0;
  std::string behavior;
};

struct Transition {
  int next_state = 0;
  double reward = 0.0;
  double cost = 0.0;
};

/// Index drawn from `dist`. Throws std::invalid_argument if `dist` is not a
/// probability vector over `num_actions` entries.
int sample_action(const ActionDistribution& dist, int num_actions, Rng& rng);

/// One environment transition from (s, a): successor, then reward/cost jitter.
Transition step(const TabularCmdp& cmdp, int state, int action, Rng& rng);

Episode sample_episode(const TabularCmdp& cmdp, const BehaviorPolicy& policy, std::uint64_t seed);

/// n i.i.d. episodes; episode i uses derive_seed(seed, i).
Dataset generate_dataset(const TabularCmdp& cmdp, const BehaviorPolicy& behavior, int n,
                         std::uint64_t seed, std::string behavior_id = "custom");

/// Exact per-step state-visit probabilities under `behavior`: [t][s].
std::vector<std::vector<double>> state_occupancy(const TabularCmdp& cmdp,
                                                 const BehaviorPolicy& behavior);

// CMDP files are JSON documents (tables row by row); numbers round-trip exactly.
TabularCmdp load_cmdp(const std::string& path);
void save_cmdp(const TabularCmdp& cmdp, const std::string& path);
TabularCmdp parse_cmdp(const std::string& text);
std::string format_cmdp(const TabularCmdp& cmdp);

// Dataset text: "# key=value" header lines, then one step per line:
// episode t s a r g
void write_dataset(std::ostream& os, const Dataset& dataset);
Dataset read_dataset(std::istream& is);

}  // namespace pls::cmdp
