#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pls/oracle.hpp"
#include "support/fixtures.hpp"

using namespace pls;
using namespace pls::oracle;
using pls::cmdp::uniform_policy;

TEST_CASE("exact policy value on hand-solvable instances") {
  SUBCASE("forced chain") {
    const auto c = fixtures::deterministic_chain(3, 6, 1.0, 0.0);
    const auto d = cmdp::generate_dataset(c, uniform_policy(1), 1, 1);
    const auto table = rcsl::estimate_rcb_policy(d, {1.0, 1.0, 6}, 1);
    const auto v = exact_policy_value(c, table, {6.0, 0.0});
    CHECK(v.reward == 6.0);
    CHECK(v.cost == 0.0);
  }
  SUBCASE("coin flip under a uniform policy") {
    auto c = cmdp::TabularCmdp::zeros(1, 2, 8);
    c.p(0, 0, 0) = c.p(0, 1, 0) = 1.0;
    c.reward[c.sa(0, 1)] = 1.0;
    const ConditionedPolicy uniform = [](const rcsl::PolicyKey&) { return cmdp::ActionDistribution{0.5, 0.5}; };
    const auto v = exact_policy_value(c, uniform, {1.0, 1.0, 8}, {3.0, 0.0});
    CHECK(v.reward == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("exact value agrees with Monte Carlo") {
  const auto c = fixtures::random_cmdp(14, 3, 2, 4, false);
  const auto d = cmdp::generate_dataset(c, uniform_policy(2), 2000, 3);
  const auto table = rcsl::estimate_rcb_policy(d, {0.5, 0.5, 4}, 2);
  for (const TargetReturn z : {TargetReturn{1.0, 1.0}, TargetReturn{3.0, 0.5}, TargetReturn{2.0, 2.5}}) {
    const auto exact = exact_policy_value(c, table, z);
    const auto mc = rcsl::evaluate_policy_mc(c, table, z, 100000, 9);
    CHECK(std::abs(mc.reward - exact.reward) <= 4.0 * mc.reward_se + 1e-12);
    CHECK(std::abs(mc.cost - exact.cost) <= 4.0 * mc.cost_se + 1e-12);
  }
}

TEST_CASE("exact RCB policy") {
  SUBCASE("deterministic CMDP and behavior match the one-episode table") {
    const auto c = fixtures::two_branch(3);
    const cmdp::BehaviorPolicy always_one = [](int, int) { return cmdp::ActionDistribution{0.0, 1.0}; };
    const rcsl::ReturnBinning bins{0.25, 0.25, 3};
    const auto exact = exact_rcb_policy(c, always_one, bins);
    const auto empirical = rcsl::estimate_rcb_policy(cmdp::generate_dataset(c, always_one, 1, 0), bins, 2);
    REQUIRE(exact.entries.size() == empirical.entries.size());
    for (const auto& [k, e] : empirical.entries) {
      REQUIRE(exact.entries.count(k) == 1);
      CHECK(exact.entries.at(k).probs == e.probs);
      CHECK(exact.entries.at(k).mass == 1.0);
    }
  }
  SUBCASE("branch recovery by conditioning") {
    const auto c = fixtures::two_branch(4);
    const rcsl::ReturnBinning bins{0.25, 0.25, 4};
    const auto exact = exact_rcb_policy(c, uniform_policy(2), bins);
    CHECK(exact.lookup(0, 0, 0.0, 0.0) == std::vector<double>{1.0, 0.0});
    CHECK(exact.lookup(0, 0, 3.25, 1.5) == std::vector<double>{0.0, 1.0});
    CHECK(exact.marginals.at({0, 0}).probs == std::vector<double>{0.5, 0.5});
  }
  SUBCASE("binned return distributions are normalized where reachable") {
    const auto c = fixtures::random_cmdp(5, 4, 2, 5, false);
    const auto dist = exact_return_distribution(c, uniform_policy(2), {0.5, 0.5, 5});
    const auto occ = cmdp::state_occupancy(c, uniform_policy(2));
    for (int t = 0; t < 5; ++t)
      for (int s = 0; s < 4; ++s) {
        double total = 0.0;
        for (const auto& [bins, p] : dist[t][s]) total += p;
        if (occ[t][s] > 0.0) CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("exact oracle guards") {
  auto c = fixtures::random_cmdp(2, 6, 3, 8, false);
  CHECK_THROWS_AS(exact_rcb_policy(c, uniform_policy(3), {0.25, 0.25, 8}, 50), SizeGuardExceeded);
  c.jitter = 0.1;
  CHECK_THROWS_AS(exact_rcb_policy(c, uniform_policy(3), {0.25, 0.25, 8}), std::invalid_argument);
}

TEST_CASE("brute-force optimum") {
  SUBCASE("single feasible point") {
    const std::vector<GroundTruthPoint> pts{{0, {0, 0}, 5.0, 3.0}, {1, {1, 0}, 1.0, 0.5}};
    const auto gt = brute_force_optimum(pts, 1.0);
    CHECK(gt.feasible);
    CHECK(gt.optimum->index == 1);
  }
  SUBCASE("nothing feasible") {
    const std::vector<GroundTruthPoint> pts{{0, {0, 0}, 5.0, 3.0}};
    const auto gt = brute_force_optimum(pts, 1.0);
    CHECK_FALSE(gt.feasible);
    CHECK_FALSE(gt.optimum.has_value());
  }
  SUBCASE("planted optimum away from any smooth ascent") {
    std::vector<GroundTruthPoint> pts;
    for (std::size_t i = 0; i < 25; ++i) {
      const double r = static_cast<double>(i / 5), g = static_cast<double>(i % 5);
      pts.push_back({i, {r, g}, r + g, 0.1 * g});
    }
    pts[24].cost = 9.0;  // the smooth maximum is infeasible
    pts[3].reward = 50.0;
    const auto gt = brute_force_optimum(pts, 1.0);
    CHECK(gt.optimum->index == 3);
  }
  SUBCASE("ties go to the lowest index regardless of order") {
    const std::vector<GroundTruthPoint> pts{{7, {0, 0}, 2.0, 0.0}, {2, {1, 0}, 2.0, 0.0}};
    CHECK(brute_force_optimum(pts, 1.0).optimum->index == 2);
  }
}

TEST_CASE("ground truth CSV round trip") {
  const auto c = fixtures::random_cmdp(3, 3, 2, 3, false);
  const auto table = rcsl::estimate_rcb_policy(cmdp::generate_dataset(c, uniform_policy(2), 200, 1),
                                               {0.5, 0.5, 3}, 2);
  std::vector<TargetReturn> grid;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) grid.push_back({i * 1.0, k * 0.7});
  const auto gt = compute_ground_truth(c, table, grid);
  std::stringstream ss;
  write_ground_truth_csv(ss, gt, {{"cmdp", "random"}});
  const auto back = read_ground_truth_csv(ss);
  REQUIRE(back.size() == gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    CHECK(back[i].index == gt[i].index);
    CHECK(back[i].z == gt[i].z);
    CHECK(back[i].reward == gt[i].reward);
    CHECK(back[i].cost == gt[i].cost);
  }
}
