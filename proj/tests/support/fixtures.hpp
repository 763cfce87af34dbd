#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "pls/cmdp.hpp"

namespace fixtures {

using pls::cmdp::TabularCmdp;

// n-state chain, one action, deterministic move right (absorbing at the end).
inline TabularCmdp deterministic_chain(int n, int horizon, double r, double g) {
  auto c = TabularCmdp::zeros(n, 1, horizon);
  c.name = "chain";
  for (int s = 0; s < n; ++s) {
    c.p(s, 0, std::min(s + 1, n - 1)) = 1.0;
    c.reward[c.sa(s, 0)] = r;
    c.cost[c.sa(s, 0)] = g;
  }
  return c;
}

// Action at t = 0 picks branch 1 (reward 0) or branch 2 (reward 1); both
// branches are absorbing and pay their reward each step. Deterministic.
inline TabularCmdp two_branch(int horizon) {
  auto c = TabularCmdp::zeros(3, 2, horizon);
  c.name = "two-branch";
  c.p(0, 0, 1) = 1.0;
  c.p(0, 1, 2) = 1.0;
  for (int a = 0; a < 2; ++a) {
    c.p(1, a, 1) = 1.0;
    c.p(2, a, 2) = 1.0;
    c.reward[c.sa(1, a)] = 0.0;
    c.reward[c.sa(2, a)] = 1.0;
    c.cost[c.sa(2, a)] = 0.5;
  }
  c.reward[c.sa(0, 1)] = 0.25;
  return c;
}

// Rewards and costs on multiples of 1/4 so sums are exact in binary.
inline TabularCmdp random_cmdp(std::uint64_t seed, int states, int actions, int horizon, bool deterministic) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> quarter(0, 4), pick(0, states - 1);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  auto c = TabularCmdp::zeros(states, actions, horizon);
  c.name = "random";
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      c.reward[c.sa(s, a)] = 0.25 * quarter(rng);
      c.cost[c.sa(s, a)] = 0.25 * quarter(rng);
      if (deterministic) {
        c.p(s, a, pick(rng)) = 1.0;
        continue;
      }
      double total = 0.0;
      for (int n = 0; n < states; ++n) total += (c.p(s, a, n) = unif(rng));
      for (int n = 0; n < states; ++n) c.p(s, a, n) /= total;
      // Rows must sum to 1 within 1e-12; push the rounding residue into one entry.
      double sum = 0.0;
      for (int n = 0; n < states - 1; ++n) sum += c.p(s, a, n);
      c.p(s, a, states - 1) = 1.0 - sum;
    }
  return c;
}

// Fixed 3-state, 2-action stochastic instance.
inline TabularCmdp three_state() {
  auto c = TabularCmdp::zeros(3, 2, 4);
  c.name = "three-state";
  const double p[3][2][3] = {{{0.6, 0.3, 0.1}, {0.1, 0.5, 0.4}},
                             {{0.5, 0.5, 0.0}, {0.0, 0.25, 0.75}},
                             {{0.3, 0.0, 0.7}, {0.0, 0.5, 0.5}}};
  const double r[3][2] = {{0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}};
  const double g[3][2] = {{0.0, 0.25}, {0.25, 0.5}, {0.5, 1.0}};
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a) {
      for (int n = 0; n < 3; ++n) c.p(s, a, n) = p[s][a][n];
      c.reward[c.sa(s, a)] = r[s][a];
      c.cost[c.sa(s, a)] = g[s][a];
    }
  return c;
}

}  // namespace fixtures
