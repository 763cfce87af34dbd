#include "pls/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace pls::oracle {
namespace {

using ValueDist = std::map<std::pair<double, double>, double>;
using BinDist = std::map<std::pair<int, int>, double>;

void require_exact_eligible(const cmdp::TabularCmdp& c) {
  cmdp::require_valid(c);
  if (c.jitter != 0.0)
    throw std::invalid_argument("exact oracle needs jitter = 0 (continuous rewards cannot be enumerated)");
}

BinDist to_bins(const ValueDist& d, const rcsl::ReturnBinning& binning) {
  BinDist out;
  for (const auto& [v, p] : d) out[{binning.reward_bin(v.first), binning.cost_bin(v.second)}] += p;
  return out;
}

struct BackwardPass {
  // value_dist[t][s]: exact return-to-go distribution from (t, s).
  std::vector<std::vector<ValueDist>> value_dist;
  // action_bins[t][s][a]: binned return-to-go distribution after taking a.
  std::vector<std::vector<std::vector<BinDist>>> action_bins;
};

BackwardPass backward(const cmdp::TabularCmdp& c, const cmdp::BehaviorPolicy& behavior,
                      const rcsl::ReturnBinning& binning, std::size_t guard) {
  const auto H = static_cast<std::size_t>(c.horizon);
  const auto S = static_cast<std::size_t>(c.num_states);
  BackwardPass pass;
  pass.value_dist.assign(H + 1, std::vector<ValueDist>(S));
  pass.action_bins.assign(H, std::vector<std::vector<BinDist>>(S));
  for (auto& d : pass.value_dist[H]) d[{0.0, 0.0}] = 1.0;

  std::size_t total = S;
  for (int t = c.horizon - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    for (int s = 0; s < c.num_states; ++s) {
      const auto si = static_cast<std::size_t>(s);
      const auto beta = behavior(t, s);
      auto& here = pass.value_dist[ti][si];
      auto& bins = pass.action_bins[ti][si];
      bins.assign(static_cast<std::size_t>(c.num_actions), {});
      for (int a = 0; a < c.num_actions; ++a) {
        ValueDist after;
        for (int n = 0; n < c.num_states; ++n) {
          const double p = c.p(s, a, n);
          if (p == 0.0) continue;
          for (const auto& [v, q] : pass.value_dist[ti + 1][static_cast<std::size_t>(n)])
            after[{c.r(s, a) + v.first, c.g(s, a) + v.second}] += p * q;
        }
        bins[static_cast<std::size_t>(a)] = to_bins(after, binning);
        const double w = beta.at(static_cast<std::size_t>(a));
        if (w == 0.0) continue;
        for (const auto& [v, q] : after) here[v] += w * q;
      }
      total += here.size();
      if (total > guard) throw SizeGuardExceeded("exact return distribution exceeds size guard", total);
    }
  }
  return pass;
}

}  // namespace

PolicyValue exact_policy_value(const cmdp::TabularCmdp& c, const ConditionedPolicy& policy,
                               const rcsl::ReturnBinning& binning, const TargetReturn& z,
                               std::size_t size_guard) {
  require_exact_eligible(c);
  binning.validate();

  using State = std::tuple<int, double, double>;  // s, spent reward, spent cost
  std::map<State, double> layer{{{c.initial_state, 0.0, 0.0}, 1.0}};
  PolicyValue value;
  std::size_t measured = 1;
  for (int t = 0; t < c.horizon; ++t) {
    std::map<State, double> next;
    for (const auto& [state, prob] : layer) {
      const auto& [s, spent_r, spent_g] = state;
      const rcsl::PolicyKey key{t, s, binning.reward_bin(z.reward - spent_r),
                                binning.cost_bin(z.cost - spent_g)};
      const auto pi = policy(key);
      if (pi.size() != static_cast<std::size_t>(c.num_actions))
        throw std::invalid_argument("exact_policy_value: policy returned a wrongly sized distribution");
      for (int a = 0; a < c.num_actions; ++a) {
        const double pa = pi[static_cast<std::size_t>(a)];
        if (pa == 0.0) continue;
        value.reward += prob * pa * c.r(s, a);
        value.cost += prob * pa * c.g(s, a);
        if (t + 1 == c.horizon) continue;
        for (int n = 0; n < c.num_states; ++n) {
          const double pn = c.p(s, a, n);
          if (pn == 0.0) continue;
          next[{n, spent_r + c.r(s, a), spent_g + c.g(s, a)}] += prob * pa * pn;
        }
      }
    }
    measured = std::max(measured, next.size());
    if (next.size() > size_guard)
      throw SizeGuardExceeded("exact_policy_value: augmented state space exceeds size guard", measured);
    layer = std::move(next);
  }
  return value;
}

PolicyValue exact_policy_value(const cmdp::TabularCmdp& c, const rcsl::RcbPolicyTable& table,
                               const TargetReturn& z, std::size_t size_guard) {
  return exact_policy_value(
      c, [&table](const rcsl::PolicyKey& k) { return table.lookup(k); }, table.binning, z, size_guard);
}

ReturnDistribution exact_return_distribution(const cmdp::TabularCmdp& c,
                                             const cmdp::BehaviorPolicy& behavior,
                                             const rcsl::ReturnBinning& binning, std::size_t size_guard) {
  require_exact_eligible(c);
  binning.validate();
  const auto pass = backward(c, behavior, binning, size_guard);
  ReturnDistribution out(static_cast<std::size_t>(c.horizon));
  for (std::size_t t = 0; t < out.size(); ++t)
    for (const auto& d : pass.value_dist[t]) out[t].push_back(to_bins(d, binning));
  return out;
}

rcsl::RcbPolicyTable exact_rcb_policy(const cmdp::TabularCmdp& c, const cmdp::BehaviorPolicy& behavior,
                                      const rcsl::ReturnBinning& binning, std::size_t size_guard) {
  require_exact_eligible(c);
  binning.validate();
  const auto pass = backward(c, behavior, binning, size_guard);
  const auto occupancy = cmdp::state_occupancy(c, behavior);

  rcsl::RcbPolicyTable table;
  table.binning = binning;
  table.num_actions = c.num_actions;
  const auto A = static_cast<std::size_t>(c.num_actions);

  for (int t = 0; t < c.horizon; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    for (int s = 0; s < c.num_states; ++s) {
      const auto si = static_cast<std::size_t>(s);
      const double reach = occupancy[ti][si];
      if (reach == 0.0) continue;
      const auto beta = behavior(t, s);
      table.marginals[{t, s}] = {beta, 0, reach};

      // Bayes' rule with binned masses: beta_z(a) = beta(a) f(z|s,a) / f(z|s).
      BinDist marginal;
      for (std::size_t a = 0; a < A; ++a) {
        if (beta[a] == 0.0) continue;
        for (const auto& [bin, q] : pass.action_bins[ti][si][a]) marginal[bin] += beta[a] * q;
      }
      for (const auto& [bin, mass] : marginal) {
        if (mass == 0.0) continue;
        rcsl::PolicyEntry e;
        e.probs.assign(A, 0.0);
        double total = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          if (beta[a] == 0.0) continue;
          const auto& ab = pass.action_bins[ti][si][a];
          if (auto it = ab.find(bin); it != ab.end()) e.probs[a] = beta[a] * it->second / mass;
          total += e.probs[a];
        }
        for (double& p : e.probs) p /= total;
        e.mass = reach * mass;
        table.entries[{t, s, bin.first, bin.second}] = std::move(e);
      }
    }
  }
  return table;
}

GroundTruth brute_force_optimum(std::span<const GroundTruthPoint> points, double threshold) {
  GroundTruth out;
  out.points.assign(points.begin(), points.end());
  for (const auto& p : points) {
    if (!(p.cost <= threshold)) continue;
    if (!out.optimum || p.reward > out.optimum->reward ||
        (p.reward == out.optimum->reward && p.index < out.optimum->index))
      out.optimum = p;
  }
  out.feasible = out.optimum.has_value();
  return out;
}

std::vector<GroundTruthPoint> compute_ground_truth(const cmdp::TabularCmdp& c,
                                                   const rcsl::RcbPolicyTable& table,
                                                   std::span<const TargetReturn> grid) {
  std::vector<GroundTruthPoint> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto v = exact_policy_value(c, table, grid[i]);
    out.push_back({i, grid[i], v.reward, v.cost});
  }
  return out;
}

void write_ground_truth_csv(std::ostream& os, std::span<const GroundTruthPoint> points,
                            const std::map<std::string, std::string>& header) {
  for (const auto& [k, v] : header) os << "# " << k << '=' << v << '\n';
  os << "index,R,G,true_Jr,true_Jg\n";
  os << std::setprecision(17);
  for (const auto& p : points)
    os << p.index << ',' << p.z.reward << ',' << p.z.cost << ',' << p.reward << ',' << p.cost << '\n';
}

std::vector<GroundTruthPoint> read_ground_truth_csv(std::istream& is) {
  std::vector<GroundTruthPoint> out;
  std::string line;
  bool seen_columns = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_columns) {
      if (line != "index,R,G,true_Jr,true_Jg") throw std::invalid_argument("ground truth CSV: bad column header");
      seen_columns = true;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    GroundTruthPoint p;
    if (!(in >> p.index >> p.z.reward >> p.z.cost >> p.reward >> p.cost))
      throw std::invalid_argument("ground truth CSV: malformed row '" + line + "'");
    out.push_back(p);
  }
  return out;
}

}  // namespace pls::oracle
