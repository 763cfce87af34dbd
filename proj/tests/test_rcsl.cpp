#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pls/rcsl.hpp"
#include "support/fixtures.hpp"

using namespace pls;
using namespace pls::rcsl;
using pls::cmdp::uniform_policy;

TEST_CASE("binning") {
  const ReturnBinning b{0.5, 1.0, 3};
  CHECK(b.reward_bins() == 6);
  CHECK(b.cost_bins() == 3);
  CHECK(b.reward_bin(0.0) == 0);
  CHECK(b.reward_bin(0.49) == 0);
  CHECK(b.reward_bin(0.5) == 1);
  CHECK(b.reward_bin(3.0) == 5);
  CHECK(b.reward_bin(9.0) == 5);
  CHECK(b.reward_bin(-2.0) == 0);
  const ReturnBinning partial{0.4, 0.4, 1};
  CHECK(partial.reward_bins() == 3);
  CHECK(partial.reward_bin(0.95) == 2);
  CHECK_THROWS_AS((ReturnBinning{0.0, 1.0, 3}.validate()), std::invalid_argument);
}

TEST_CASE("one deterministic episode gives point masses") {
  const auto c = fixtures::two_branch(3);
  const cmdp::BehaviorPolicy always_one = [](int, int) { return cmdp::ActionDistribution{0.0, 1.0}; };
  const auto d = cmdp::generate_dataset(c, always_one, 1, 3);
  const ReturnBinning bins{0.25, 0.25, 3};
  const auto table = estimate_rcb_policy(d, bins, 2);
  CHECK(table.entries.size() == 3);
  for (const auto& [key, entry] : table.entries) {
    CHECK(entry.count == 1);
    CHECK(entry.probs == std::vector<double>{0.0, 1.0});
  }
}

TEST_CASE("separate return bins do not mix") {
  const auto c = fixtures::two_branch(3);
  cmdp::Dataset d;
  for (int a = 0; a < 2; ++a) {
    const cmdp::BehaviorPolicy fixed = [a](int, int) {
      cmdp::ActionDistribution p(2, 0.0);
      p[static_cast<std::size_t>(a)] = 1.0;
      return p;
    };
    d.episodes.push_back(cmdp::sample_episode(c, fixed, 1));
  }
  const ReturnBinning bins{0.25, 0.25, 3};
  const auto table = estimate_rcb_policy(d, bins, 2);
  const auto low = table.lookup(0, 0, d.episodes[0].total_reward, d.episodes[0].total_cost);
  const auto high = table.lookup(0, 0, d.episodes[1].total_reward, d.episodes[1].total_cost);
  CHECK(low == std::vector<double>{1.0, 0.0});
  CHECK(high == std::vector<double>{0.0, 1.0});
  CHECK(table.lookup(0, 0, 0.5, 3.0) == std::vector<double>{0.5, 0.5});
  CHECK(table.lookup(2, 0, 0.0, 0.0) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("conditioned rollouts") {
  const auto c = fixtures::two_branch(4);
  const auto d = cmdp::generate_dataset(c, uniform_policy(2), 200, 5);
  const ReturnBinning bins{0.25, 0.25, 4};
  const auto table = estimate_rcb_policy(d, bins, 2);

  SUBCASE("high target picks the high branch") {
    const auto hi = rollout_conditioned(c, table, {3.25, 1.5}, 1);
    CHECK(hi.episode.steps[0].action == 1);
    CHECK(hi.episode.total_reward == 3.25);
    const auto lo = rollout_conditioned(c, table, {0.0, 0.0}, 1);
    CHECK(lo.episode.steps[0].action == 0);
    CHECK(lo.episode.total_reward == 0.0);
  }
  SUBCASE("decrement identity holds exactly") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const TargetReturn z{0.5 * static_cast<double>(s % 9), 0.25 * static_cast<double>(s % 7)};
      const auto r = rollout_conditioned(c, table, z, s);
      double spent_r = 0.0, spent_g = 0.0;
      for (std::size_t t = 0; t < r.targets.size(); ++t) {
        CHECK(r.targets[t].reward == z.reward - spent_r);
        CHECK(r.targets[t].cost == z.cost - spent_g);
        spent_r += r.episode.steps[t].reward;
        spent_g += r.episode.steps[t].cost;
      }
    }
  }
  SUBCASE("targets outside the return box are rejected") {
    CHECK_THROWS_AS(rollout_conditioned(c, table, {-1.0, 0.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(rollout_conditioned(c, table, {0.0, 4.5}, 1), std::invalid_argument);
  }
}

TEST_CASE("one-path dataset is reproduced by conditioning on its returns") {
  const auto c = fixtures::deterministic_chain(4, 5, 0.5, 0.25);
  const auto d = cmdp::generate_dataset(c, uniform_policy(1), 1, 2);
  const auto table = estimate_rcb_policy(d, {0.25, 0.25, 5}, 1);
  const auto r = rollout_conditioned(c, table, {d.episodes[0].total_reward, d.episodes[0].total_cost}, 8);
  CHECK(r.episode.total_reward == d.episodes[0].total_reward);
  CHECK(r.episode.total_cost == d.episodes[0].total_cost);
}

TEST_CASE("Monte Carlo policy value") {
  const auto c = fixtures::deterministic_chain(3, 4, 1.0, 0.5);
  const auto d = cmdp::generate_dataset(c, uniform_policy(1), 1, 2);
  const auto table = estimate_rcb_policy(d, {0.5, 0.5, 4}, 1);
  const auto many = evaluate_policy_mc(c, table, {4.0, 2.0}, 30, 5);
  CHECK(many.reward == 4.0);
  CHECK(many.cost == 2.0);
  CHECK(many.reward_se == 0.0);

  const auto s = fixtures::random_cmdp(9, 3, 2, 4, false);
  const auto ds = cmdp::generate_dataset(s, uniform_policy(2), 500, 4);
  const auto ts = estimate_rcb_policy(ds, {0.5, 0.5, 4}, 2);
  const auto one = evaluate_policy_mc(s, ts, {2.0, 1.0}, 1, 77);
  const auto ep = rollout_conditioned(s, ts, {2.0, 1.0}, derive_seed(77, 0));
  CHECK(one.reward == ep.episode.total_reward);
  CHECK(one.cost == ep.episode.total_cost);
  CHECK_THROWS_AS(evaluate_policy_mc(s, ts, {2.0, 1.0}, 0, 1), std::invalid_argument);
}

TEST_CASE("total variation") {
  CHECK(total_variation({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  CHECK(total_variation({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(total_variation({0.25, 0.75}, {0.5, 0.5}) == 0.25);
}

TEST_CASE("policy table text round trip") {
  const auto c = fixtures::random_cmdp(31, 4, 3, 5, false);
  const auto d = cmdp::generate_dataset(c, uniform_policy(3), 300, 2);
  const auto table = estimate_rcb_policy(d, {0.5, 0.75, 5}, 3);
  std::stringstream ss;
  write_policy_table(ss, table);
  const auto back = read_policy_table(ss);
  CHECK(back.num_actions == 3);
  CHECK(back.binning.cost_width == 0.75);
  REQUIRE(back.entries.size() == table.entries.size());
  for (const auto& [k, e] : table.entries) {
    const auto& f = back.entries.at(k);
    CHECK(f.probs == e.probs);
    CHECK(f.count == e.count);
    CHECK(f.mass == e.mass);
  }
  CHECK(back.marginals.size() == table.marginals.size());
}
