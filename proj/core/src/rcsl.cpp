#include "pls/rcsl.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pls::rcsl {
namespace {

int bin_count(double horizon, double width) {
  return std::max(1, static_cast<int>(std::ceil(horizon / width - 1e-9)));
}

int bin_of(double value, double horizon, double width) {
  const double x = std::clamp(value, 0.0, horizon);
  const int last = bin_count(horizon, width) - 1;
  return std::min(static_cast<int>(std::floor(x / width)), last);
}

void normalize(PolicyEntry& e) {
  double total = 0.0;
  for (double c : e.probs) total += c;
  for (double& c : e.probs) c /= total;
}

}  // namespace

void ReturnBinning::validate() const {
  if (horizon < 1) throw std::invalid_argument("ReturnBinning: horizon must be >= 1");
  if (!(reward_width > 0.0) || !(cost_width > 0.0) || !std::isfinite(reward_width) ||
      !std::isfinite(cost_width))
    throw std::invalid_argument("ReturnBinning: widths must be positive and finite");
}

int ReturnBinning::reward_bins() const { return bin_count(horizon, reward_width); }
int ReturnBinning::cost_bins() const { return bin_count(horizon, cost_width); }
int ReturnBinning::reward_bin(double value) const { return bin_of(value, horizon, reward_width); }
int ReturnBinning::cost_bin(double value) const { return bin_of(value, horizon, cost_width); }

PolicyKey RcbPolicyTable::key(int t, int state, double remaining_reward, double remaining_cost) const {
  return {t, state, binning.reward_bin(remaining_reward), binning.cost_bin(remaining_cost)};
}

cmdp::ActionDistribution RcbPolicyTable::lookup(const PolicyKey& k) const {
  if (auto it = entries.find(k); it != entries.end()) return it->second.probs;
  if (auto it = marginals.find({k.t, k.state}); it != marginals.end()) return it->second.probs;
  return cmdp::ActionDistribution(static_cast<std::size_t>(num_actions), 1.0 / num_actions);
}

RcbPolicyTable estimate_rcb_policy(const cmdp::Dataset& dataset, const ReturnBinning& binning,
                                   int num_actions) {
  binning.validate();
  if (dataset.episodes.empty()) throw std::invalid_argument("estimate_rcb_policy: empty dataset");
  if (num_actions < 1) throw std::invalid_argument("estimate_rcb_policy: num_actions must be >= 1");

  RcbPolicyTable table;
  table.binning = binning;
  table.num_actions = num_actions;
  const auto zero = PolicyEntry{std::vector<double>(static_cast<std::size_t>(num_actions), 0.0), 0, 0.0};

  std::vector<double> rtg_r, rtg_g;
  for (const auto& ep : dataset.episodes) {
    const std::size_t h = ep.steps.size();
    rtg_r.assign(h, 0.0);
    rtg_g.assign(h, 0.0);
    double acc_r = 0.0, acc_g = 0.0;
    for (std::size_t t = h; t-- > 0;) {
      acc_r = ep.steps[t].reward + acc_r;
      acc_g = ep.steps[t].cost + acc_g;
      rtg_r[t] = acc_r;
      rtg_g[t] = acc_g;
    }
    for (std::size_t t = 0; t < h; ++t) {
      const auto& st = ep.steps[t];
      if (st.action < 0 || st.action >= num_actions)
        throw std::invalid_argument("estimate_rcb_policy: action index out of range");
      const int ti = static_cast<int>(t);
      auto [it, inserted] = table.entries.try_emplace(table.key(ti, st.state, rtg_r[t], rtg_g[t]), zero);
      it->second.probs[static_cast<std::size_t>(st.action)] += 1.0;
      ++it->second.count;
      auto [mit, minserted] = table.marginals.try_emplace({ti, st.state}, zero);
      mit->second.probs[static_cast<std::size_t>(st.action)] += 1.0;
      ++mit->second.count;
    }
  }

  const double n = static_cast<double>(dataset.episodes.size());
  for (auto& [k, e] : table.entries) {
    normalize(e);
    e.mass = static_cast<double>(e.count) / n;
  }
  for (auto& [k, e] : table.marginals) {
    normalize(e);
    e.mass = static_cast<double>(e.count) / n;
  }
  return table;
}

ConditionedRollout rollout_conditioned(const cmdp::TabularCmdp& c, const RcbPolicyTable& table,
                                       const TargetReturn& z, std::uint64_t seed) {
  const double h = static_cast<double>(c.horizon);
  if (!(z.reward >= 0.0 && z.reward <= h && z.cost >= 0.0 && z.cost <= h))
    throw std::invalid_argument("rollout_conditioned: target return outside [0, H]^2");
  if (table.num_actions != c.num_actions)
    throw std::invalid_argument("rollout_conditioned: table and CMDP disagree on |A|");

  cmdp::Rng rng(seed);
  ConditionedRollout out;
  out.episode.steps.reserve(static_cast<std::size_t>(c.horizon));
  out.targets.reserve(static_cast<std::size_t>(c.horizon));

  int s = c.initial_state;
  double spent_r = 0.0, spent_g = 0.0;
  for (int t = 0; t < c.horizon; ++t) {
    const TargetReturn target{z.reward - spent_r, z.cost - spent_g};
    out.targets.push_back(target);
    const int a = cmdp::sample_action(table.lookup(t, s, target.reward, target.cost), c.num_actions, rng);
    const cmdp::Transition tr = cmdp::step(c, s, a, rng);
    out.episode.steps.push_back({s, a, tr.reward, tr.cost});
    spent_r += tr.reward;
    spent_g += tr.cost;
    s = tr.next_state;
  }
  out.episode.total_reward = spent_r;
  out.episode.total_cost = spent_g;
  return out;
}

PolicyValueEstimate evaluate_policy_mc(const cmdp::TabularCmdp& c, const RcbPolicyTable& table,
                                       const TargetReturn& z, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate_policy_mc: need at least one episode");
  std::vector<double> rs, gs;
  rs.reserve(static_cast<std::size_t>(episodes));
  gs.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) {
    const auto roll = rollout_conditioned(c, table, z, derive_seed(seed, static_cast<std::uint64_t>(i)));
    rs.push_back(roll.episode.total_reward);
    gs.push_back(roll.episode.total_cost);
  }

  auto mean_se = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return std::pair{mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(v.size());
    return std::pair{mean, std::sqrt(ss / (n - 1.0) / n)};
  };

  PolicyValueEstimate est;
  std::tie(est.reward, est.reward_se) = mean_se(rs);
  std::tie(est.cost, est.cost_se) = mean_se(gs);
  est.episodes = episodes;
  est.seed = seed;
  return est;
}

double total_variation(const cmdp::ActionDistribution& a, const cmdp::ActionDistribution& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

void write_policy_table(std::ostream& os, const RcbPolicyTable& table) {
  os << std::setprecision(17);
  os << "# pls-rcb-table v1\n";
  os << "binning " << table.binning.reward_width << ' ' << table.binning.cost_width << ' '
     << table.binning.horizon << '\n';
  os << "actions " << table.num_actions << '\n';
  os << "fallback marginal-then-uniform\n";
  for (const auto& [k, e] : table.entries) {
    os << "entry " << k.t << ' ' << k.state << ' ' << k.reward_bin << ' ' << k.cost_bin << ' ' << e.count
       << ' ' << e.mass;
    for (double p : e.probs) os << ' ' << p;
    os << '\n';
  }
  for (const auto& [k, e] : table.marginals) {
    os << "marginal " << k.first << ' ' << k.second << ' ' << e.count << ' ' << e.mass;
    for (double p : e.probs) os << ' ' << p;
    os << '\n';
  }
}

RcbPolicyTable read_policy_table(std::istream& is) {
  RcbPolicyTable table;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("policy table line " + std::to_string(line_no) + ": " + why);
  };
  auto read_probs = [&](std::istringstream& in, PolicyEntry& e) {
    e.probs.assign(static_cast<std::size_t>(table.num_actions), 0.0);
    for (double& p : e.probs)
      if (!(in >> p)) fail("expected " + std::to_string(table.num_actions) + " probabilities");
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "binning") {
      if (!(in >> table.binning.reward_width >> table.binning.cost_width >> table.binning.horizon))
        fail("malformed binning");
      table.binning.validate();
    } else if (tag == "actions") {
      if (!(in >> table.num_actions) || table.num_actions < 1) fail("malformed action count");
    } else if (tag == "fallback") {
      std::string rule;
      in >> rule;
      if (rule != "marginal-then-uniform") fail("unsupported fallback rule '" + rule + "'");
    } else if (tag == "entry") {
      PolicyKey k;
      PolicyEntry e;
      if (!(in >> k.t >> k.state >> k.reward_bin >> k.cost_bin >> e.count >> e.mass)) fail("malformed entry");
      read_probs(in, e);
      table.entries.emplace(k, std::move(e));
    } else if (tag == "marginal") {
      std::pair<int, int> k;
      PolicyEntry e;
      if (!(in >> k.first >> k.second >> e.count >> e.mass)) fail("malformed marginal");
      read_probs(in, e);
      table.marginals.emplace(k, std::move(e));
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (table.num_actions < 1) throw std::invalid_argument("policy table: missing 'actions' record");
  return table;
}

}  // namespace pls::rcsl
