#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pls/cmdp.hpp"
#include "pls/types.hpp"

namespace pls::rcsl {

/// Discretization of reward-to-go and cost-to-go on [0, H].
///
/// Bins are half-open [k w, (k+1) w); the last bin is closed at H and absorbs
/// a trailing partial bin. Values are clamped to [0, H] before binning.
struct ReturnBinning {
  double reward_width = 1.0;
  double cost_width = 1.0;
  int horizon = 1;

  void validate() const;
  int reward_bins() const;
  int cost_bins() const;
  int reward_bin(double value) const;
  int cost_bin(double value) const;
};

struct PolicyKey {
  int t = 0;
  int state = 0;
  int reward_bin = 0;
  int cost_bin = 0;

  auto operator<=>(const PolicyKey&) const = default;
};

/// Action distribution at one key. Empirical tables carry visit counts
/// (mass = count / episodes); exact tables carry probability mass and count 0.
struct PolicyEntry {
  std::vector<double> probs;
  std::uint64_t count = 0;
  double mass = 0.0;
};

/// Tabular return-conditioned behavior policy.
///
/// Unseen keys fall back to the (t, s) marginal behavior frequencies, then to
/// the uniform distribution.
struct RcbPolicyTable {
  ReturnBinning binning;
  int num_actions = 0;
  std::map<PolicyKey, PolicyEntry> entries;
  std::map<std::pair<int, int>, PolicyEntry> marginals;

  PolicyKey key(int t, int state, double remaining_reward, double remaining_cost) const;
  cmdp::ActionDistribution lookup(const PolicyKey& key) const;
  cmdp::ActionDistribution lookup(int t, int state, double remaining_reward,
                                  double remaining_cost) const {
    return lookup(key(t, state, remaining_reward, remaining_cost));
  }
};

RcbPolicyTable estimate_rcb_policy(const cmdp::Dataset& dataset, const ReturnBinning& binning,
                                   int num_actions);

struct ConditionedRollout {
  cmdp::Episode episode;
  std::vector<TargetReturn> targets;  // (R_t, G_t) before step t, unclamped
};

/// Rolls out the table with targets decremented by observed rewards/costs:
/// R_t = R_1 - sum_{h<t} r_h, G_t likewise.
ConditionedRollout rollout_conditioned(const cmdp::TabularCmdp& cmdp, const RcbPolicyTable& table,
                                       const TargetReturn& z, std::uint64_t seed);

struct PolicyValueEstimate {
  double reward = 0.0;
  double cost = 0.0;
  double reward_se = 0.0;
  double cost_se = 0.0;
  int episodes = 0;
  std::uint64_t seed = 0;
};

/// Mean returns over `episodes` conditioned rollouts (rollout i uses
/// derive_seed(seed, i)), with standard errors of the mean.
PolicyValueEstimate evaluate_policy_mc(const cmdp::TabularCmdp& cmdp, const RcbPolicyTable& table,
                                       const TargetReturn& z, int episodes, std::uint64_t seed);

/// Total variation distance between two action distributions.
double total_variation(const cmdp::ActionDistribution& a, const cmdp::ActionDistribution& b);

void write_policy_table(std::ostream& os, const RcbPolicyTable& table);
RcbPolicyTable read_policy_table(std::istream& is);

}  // namespace pls::rcsl
