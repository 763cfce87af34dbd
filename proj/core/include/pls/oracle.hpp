#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pls/cmdp.hpp"
#include "pls/rcsl.hpp"
#include "pls/types.hpp"

namespace pls::oracle {

/// Thrown when an exact computation would exceed its size guard.
class SizeGuardExceeded : public std::length_error {
 public:
  SizeGuardExceeded(const std::string& what, std::size_t measured)
      : std::length_error(what + " (measured " + std::to_string(measured) + ")"), measured_(measured) {}
  std::size_t measured() const noexcept { return measured_; }

 private:
  std::size_t measured_;
};

inline constexpr std::size_t kDefaultSizeGuard = 10'000'000;

struct PolicyValue {
  double reward = 0.0;
  double cost = 0.0;
};

/// Policy over the augmented state (t, s, reward bin, cost bin).
using ConditionedPolicy = std::function<cmdp::ActionDistribution(const rcsl::PolicyKey&)>;

/// Exact (J_r, J_g) of the conditioned rollout with initial targets z.
///
/// Forward DP over (s, spent reward, spent cost), with the same decrement,
/// clamping and binning as rcsl::rollout_conditioned. Requires jitter = 0.
PolicyValue exact_policy_value(const cmdp::TabularCmdp& cmdp, const ConditionedPolicy& policy,
                               const rcsl::ReturnBinning& binning, const TargetReturn& z,
                               std::size_t size_guard = kDefaultSizeGuard);

PolicyValue exact_policy_value(const cmdp::TabularCmdp& cmdp, const rcsl::RcbPolicyTable& table,
                               const TargetReturn& z, std::size_t size_guard = kDefaultSizeGuard);

/// Binned return-to-go distribution per (t, s) under the behavior policy,
/// including unreachable states: dist[t][s][(reward bin, cost bin)].
using ReturnDistribution = std::vector<std::vector<std::map<std::pair<int, int>, double>>>;

ReturnDistribution exact_return_distribution(const cmdp::TabularCmdp& cmdp,
                                             const cmdp::BehaviorPolicy& behavior,
                                             const rcsl::ReturnBinning& binning,
                                             std::size_t size_guard = kDefaultSizeGuard);

/// Exact binned RCB policy by Bayes' rule at every key reachable with
/// positive probability under the behavior policy. Requires jitter = 0.
rcsl::RcbPolicyTable exact_rcb_policy(const cmdp::TabularCmdp& cmdp,
                                      const cmdp::BehaviorPolicy& behavior,
                                      const rcsl::ReturnBinning& binning,
                                      std::size_t size_guard = kDefaultSizeGuard);

struct GroundTruthPoint {
  std::size_t index = 0;
  TargetReturn z;
  double reward = 0.0;
  double cost = 0.0;
};

struct GroundTruth {
  std::vector<GroundTruthPoint> points;
  bool feasible = false;
  std::optional<GroundTruthPoint> optimum;
};

/// Exhaustive scan for the best J_r with J_g <= b. Ties go to the lowest grid
/// index, so the result does not depend on the order of `points`.
GroundTruth brute_force_optimum(std::span<const GroundTruthPoint> points, double threshold);

std::vector<GroundTruthPoint> compute_ground_truth(const cmdp::TabularCmdp& cmdp,
                                                   const rcsl::RcbPolicyTable& table,
                                                   std::span<const TargetReturn> grid);

// CSV: "# key=value" header lines, then index,R,G,true_Jr,true_Jg
void write_ground_truth_csv(std::ostream& os, std::span<const GroundTruthPoint> points,
                            const std::map<std::string, std::string>& header);
std::vector<GroundTruthPoint> read_ground_truth_csv(std::istream& is);

}  // namespace pls::oracle
