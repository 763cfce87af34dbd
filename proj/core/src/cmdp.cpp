#include "pls/cmdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pls/types.hpp"

namespace pls::cmdp {
namespace {

constexpr double kRowTolerance = 1e-12;

std::string at(int s, int a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

TabularCmdp TabularCmdp::zeros(int num_states, int num_actions, int horizon) {
  TabularCmdp c;
  c.num_states = num_states;
  c.num_actions = num_actions;
  c.horizon = horizon;
  const auto sa = static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions);
  c.transition.assign(sa * static_cast<std::size_t>(num_states), 0.0);
  c.reward.assign(sa, 0.0);
  c.cost.assign(sa, 0.0);
  return c;
}

std::vector<Violation> validate_cmdp(const TabularCmdp& c) {
  std::vector<Violation> out;
  if (c.num_states < 1) out.push_back({"num_states must be >= 1"});
  if (c.num_actions < 1) out.push_back({"num_actions must be >= 1"});
  if (c.horizon < 1) out.push_back({"horizon must be >= 1"});
  if (!out.empty()) return out;

  if (c.initial_state < 0 || c.initial_state >= c.num_states)
    out.push_back({"initial_state out of range", c.initial_state});
  if (!(c.jitter >= 0.0) || !std::isfinite(c.jitter)) out.push_back({"jitter must be finite and >= 0"});
  if (c.jitter >= 0.5) out.push_back({"jitter must be < 0.5 for the near-deterministic model"});

  const auto sa = static_cast<std::size_t>(c.num_states) * static_cast<std::size_t>(c.num_actions);
  bool shaped = true;
  if (c.transition.size() != sa * static_cast<std::size_t>(c.num_states)) {
    out.push_back({"transition table has wrong size"});
    shaped = false;
  }
  if (c.reward.size() != sa || c.cost.size() != sa) {
    out.push_back({"reward/cost table has wrong size"});
    shaped = false;
  }
  if (!shaped) return out;

  for (int s = 0; s < c.num_states; ++s) {
    for (int a = 0; a < c.num_actions; ++a) {
      double total = 0.0;
      bool negative = false;
      for (int n = 0; n < c.num_states; ++n) {
        const double p = c.p(s, a, n);
        if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
        total += p;
      }
      if (negative) out.push_back({"transition row has a negative or non-finite entry " + at(s, a), s, a});
      if (!(std::abs(total - 1.0) <= kRowTolerance)) {
        std::ostringstream os;
        os << "transition row " << at(s, a) << " sums to " << total;
        out.push_back({os.str(), s, a});
      }
      if (!(c.r(s, a) >= 0.0 && c.r(s, a) <= 1.0))
        out.push_back({"reward outside [0, 1] at " + at(s, a), s, a});
      if (!(c.g(s, a) >= 0.0 && c.g(s, a) <= 1.0))
        out.push_back({"cost outside [0, 1] at " + at(s, a), s, a});
    }
  }
  return out;
}

void require_valid(const TabularCmdp& cmdp) {
  const auto violations = validate_cmdp(cmdp);
  if (violations.empty()) return;
  std::string msg = "invalid CMDP '" + cmdp.name + "':";
  for (const auto& v : violations) msg += "\n  " + v.message;
  throw std::invalid_argument(msg);
}

BehaviorPolicy uniform_policy(int num_actions) {
  return [num_actions](int, int) {
    return ActionDistribution(static_cast<std::size_t>(num_actions), 1.0 / num_actions);
  };
}

int sample_action(const ActionDistribution& dist, int num_actions, Rng& rng) {
  if (dist.size() != static_cast<std::size_t>(num_actions))
    throw std::invalid_argument("action distribution has " + std::to_string(dist.size()) +
                                " entries, expected " + std::to_string(num_actions));
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("action distribution has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("action distribution sums to " + std::to_string(total));

  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int a = 0; a < num_actions; ++a) {
    const double p = dist[static_cast<std::size_t>(a)];
    if (p <= 0.0) continue;
    last_positive = a;
    acc += p;
    if (u < acc) return a;
  }
  return last_positive;
}

Transition step(const TabularCmdp& c, int state, int action, Rng& rng) {
  Transition out;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  out.next_state = -1;
  int last_positive = 0;
  for (int n = 0; n < c.num_states; ++n) {
    const double p = c.p(state, action, n);
    if (p <= 0.0) continue;
    last_positive = n;
    acc += p;
    if (u < acc) {
      out.next_state = n;
      break;
    }
  }
  if (out.next_state < 0) out.next_state = last_positive;

  out.reward = c.r(state, action);
  out.cost = c.g(state, action);
  if (c.jitter > 0.0) {
    std::uniform_real_distribution<double> noise(-c.jitter, c.jitter);
    out.reward = clamp_unit(out.reward + noise(rng));
    out.cost = clamp_unit(out.cost + noise(rng));
  }
  return out;
}

Episode sample_episode(const TabularCmdp& c, const BehaviorPolicy& policy, std::uint64_t seed) {
  Rng rng(seed);
  Episode ep;
  ep.steps.reserve(static_cast<std::size_t>(c.horizon));
  int s = c.initial_state;
  for (int t = 0; t < c.horizon; ++t) {
    int a = 0;
    try {
      a = sample_action(policy(t, s), c.num_actions, rng);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("policy at step t=" + std::to_string(t) + ", s=" + std::to_string(s) +
                                  ": " + e.what());
    }
    const Transition tr = step(c, s, a, rng);
    ep.steps.push_back({s, a, tr.reward, tr.cost});
    ep.total_reward += tr.reward;
    ep.total_cost += tr.cost;
    s = tr.next_state;
  }
  return ep;
}

Dataset generate_dataset(const TabularCmdp& c, const BehaviorPolicy& behavior, int n,
                         std::uint64_t seed, std::string behavior_id) {
  if (n <= 0) throw std::invalid_argument("generate_dataset: n must be positive");
  require_valid(c);
  Dataset d;
  d.seed = seed;
  d.behavior = std::move(behavior_id);
  d.episodes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    d.episodes.push_back(sample_episode(c, behavior, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return d;
}

std::vector<std::vector<double>> state_occupancy(const TabularCmdp& c, const BehaviorPolicy& behavior) {
  require_valid(c);
  std::vector<std::vector<double>> occ(static_cast<std::size_t>(c.horizon),
                                       std::vector<double>(static_cast<std::size_t>(c.num_states), 0.0));
  occ[0][static_cast<std::size_t>(c.initial_state)] = 1.0;
  for (int t = 0; t + 1 < c.horizon; ++t) {
    for (int s = 0; s < c.num_states; ++s) {
      const double mass = occ[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      if (mass == 0.0) continue;
      const auto pi = behavior(t, s);
      for (int a = 0; a < c.num_actions; ++a)
        for (int n = 0; n < c.num_states; ++n)
          occ[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(n)] +=
              mass * pi[static_cast<std::size_t>(a)] * c.p(s, a, n);
    }
  }
  return occ;
}

}  // namespace pls::cmdp
