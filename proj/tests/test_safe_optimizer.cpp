#include "doctest.h"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "pls/safe_optimizer.hpp"

using namespace pls;
using namespace pls::safe;

namespace {

PlsConfig line_config(std::size_t n, double b, double lipschitz) {
  PlsConfig cfg;
  for (std::size_t i = 0; i < n; ++i) cfg.grid.push_back({static_cast<double>(i), 0.0});
  cfg.threshold = b;
  cfg.lipschitz = lipschitz;
  cfg.initial_safe_set = {0};
  return cfg;
}

double beta_reference(std::uint64_t j, std::size_t n, double delta) {
  using boost::multiprecision::cpp_bin_float_50;
  const cpp_bin_float_50 pi = boost::math::constants::pi<cpp_bin_float_50>();
  const cpp_bin_float_50 jj = j;
  const cpp_bin_float_50 arg = cpp_bin_float_50(n) * jj * jj * pi * pi / (6 * cpp_bin_float_50(delta));
  return static_cast<double>(sqrt(2 * log(arg)));
}

}  // namespace

TEST_CASE("phase names round-trip") {
  for (auto p : {Phase::seed, Phase::exploration, Phase::maximization, Phase::operate})
    CHECK(parse_phase(to_string(p)) == p);
  CHECK_THROWS_AS(parse_phase("warmup"), std::invalid_argument);
}

TEST_CASE("distances") {
  CHECK(distance({0, 0}, {3, 4}, Metric::chebyshev) == 4.0);
  CHECK(distance({0, 0}, {3, 4}, Metric::euclidean) == 5.0);
}

TEST_CASE("lattice layout") {
  const Lattice lat{0, 4, 3, 10, 11, 2};
  const auto pts = lat.points();
  REQUIRE(pts.size() == 6);
  CHECK(pts[lat.index(1, 1)] == TargetReturn{2.0, 11.0});
  CHECK(pts[lat.index(2, 0)] == TargetReturn{4.0, 10.0});
  CHECK_THROWS_AS((Lattice{0, 1, 0, 0, 1, 2}.validate()), std::invalid_argument);
}

TEST_CASE("beta schedule") {
  CHECK(beta_schedule(1, 1, std::numbers::pi * std::numbers::pi / 6.0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(std::abs(beta_schedule(1, 441, 0.1) - 4.2164748951966113) < 1e-12);
  CHECK(std::abs(beta_schedule(10, 441, 0.1) - 5.1950939273317722) < 1e-12);
  CHECK(std::abs(beta_schedule(7, 121, 0.05) - 4.9357964746800701) < 1e-12);
  CHECK(beta_schedule(10, 441, 0.1) > beta_schedule(1, 441, 0.1));
  CHECK_THROWS_AS(beta_schedule(0, 4, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(beta_schedule(1, 4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_schedule(1, 1, 10.0), std::invalid_argument);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint64_t> j(1, 500);
  std::uniform_int_distribution<std::size_t> n(1, 5000);
  std::uniform_real_distribution<double> d(1e-4, 0.999);
  for (int i = 0; i < 20; ++i) {
    const auto jj = j(rng);
    const auto nn = n(rng);
    const double dd = d(rng);
    CHECK(std::abs(beta_schedule(jj, nn, dd) - beta_reference(jj, nn, dd)) < 1e-12);
  }
}

TEST_CASE("nested intersection") {
  bool misfit = true;
  auto r = nested_intersection({0, 20}, {-5, 3}, misfit);
  CHECK(r.lo == 0.0);
  CHECK(r.hi == 3.0);
  CHECK_FALSE(misfit);

  r = nested_intersection({1, 2}, {-10, 10}, misfit);
  CHECK(r.lo == 1.0);
  CHECK(r.hi == 2.0);

  r = nested_intersection({1, 2}, {5, 6}, misfit);
  CHECK(misfit);
  CHECK(r.lo == 2.0);
  CHECK(r.hi == 2.0);
}

TEST_CASE("confidence intervals only shrink") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> mean(1.0, 2.0);
  std::uniform_real_distribution<double> var(0.0, 4.0), alpha(0.5, 4.0);
  const std::size_t n = 12;
  auto state = ConfidenceState::initial(n, 2.0);
  for (int step = 0; step < 200; ++step) {
    std::vector<gp::Prediction> pr(n), pg(n);
    for (std::size_t i = 0; i < n; ++i) {
      pr[i] = {mean(rng), var(rng)};
      pg[i] = {mean(rng), var(rng)};
    }
    const auto next = update_confidence(state, pr, pg, alpha(rng), alpha(rng));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(next.upper(i) <= state.upper(i));
      CHECK(next.lower(i) >= state.lower(i));
      CHECK(next.lower(i) <= next.upper(i));
      CHECK(state.certified[i].contains(next.certified[i]));
    }
    state = next;
  }
}

TEST_CASE("safe set expansion") {
  SUBCASE("L = 0 with every certified upper bound below b gives the whole grid") {
    auto cfg = line_config(4, 5.0, 0.0);
    auto conf = ConfidenceState::initial(4, 5.0);
    for (auto& c : conf.certified) c = {0.0, 4.0};
    const auto next = compute_safe_set(SafeSetState::initial(4, {0}), conf, cfg);
    CHECK(next.count() == 4);
  }
  SUBCASE("huge L blocks expansion") {
    auto cfg = line_config(4, 5.0, 1e12);
    auto conf = ConfidenceState::initial(4, 5.0);
    const auto next = compute_safe_set(SafeSetState::initial(4, {0, 2}), conf, cfg);
    CHECK(next.safe == std::vector<bool>{true, false, true, false});
  }
  SUBCASE("L = 1 three-point line") {
    const double b = 10.0;
    auto cfg = line_config(4, b, 1.0);
    auto conf = ConfidenceState::initial(4, b);
    conf.contained = {{0, b - 2}, {0, b}, {0, b}, {0, b}};
    const auto next = compute_safe_set(SafeSetState::initial(4, {0}), conf, cfg);
    CHECK(next.safe == std::vector<bool>{true, true, true, false});
  }
  SUBCASE("the safe set never shrinks") {
    auto cfg = line_config(3, 1.0, 0.0);
    auto conf = ConfidenceState::initial(3, 1.0);
    const auto next = compute_safe_set(SafeSetState::initial(3, {1}), conf, cfg);
    CHECK(next.safe[1]);
  }
}

TEST_CASE("expander scores") {
  SUBCASE("nothing to expand into") {
    auto cfg = line_config(3, 1.0, 1.0);
    auto conf = ConfidenceState::initial(3, 1.0);
    auto state = SafeSetState::initial(3, {0, 1, 2});
    CHECK(expander_scores(state, conf, cfg) == std::vector<std::size_t>{0, 0, 0});
  }
  SUBCASE("single plausible unsafe point, L = 0") {
    auto cfg = line_config(3, 1.0, 0.0);
    auto conf = ConfidenceState::initial(3, 1.0);
    conf.certified[2] = {0.5, 3.0};
    auto state = SafeSetState::initial(3, {0, 1});
    CHECK(expander_scores(state, conf, cfg) == std::vector<std::size_t>{1, 1, 0});
    conf.certified[2] = {1.5, 3.0};
    CHECK(expander_scores(state, conf, cfg) == std::vector<std::size_t>{0, 0, 0});
  }
  SUBCASE("random instances match a double loop") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
      PlsConfig cfg;
      for (int i = 0; i < 5; ++i) cfg.grid.push_back({u(rng), u(rng)});
      cfg.threshold = 2.0;
      cfg.lipschitz = 1.0;
      cfg.initial_safe_set = {0};
      auto conf = ConfidenceState::initial(5, 2.0);
      for (auto& c : conf.contained) {
        const double lo = u(rng) * 0.6;
        c = {lo, std::min(2.0, lo + u(rng))};
      }
      SafeSetState state = SafeSetState::initial(5, {0});
      for (std::size_t i = 1; i < 5; ++i) state.safe[i] = rng() % 2 == 0;
      const auto got = expander_scores(state, conf, cfg);
      for (std::size_t i = 0; i < 5; ++i) {
        std::size_t want = 0;
        if (state.safe[i])
          for (std::size_t k = 0; k < 5; ++k) {
            const double d = std::max(std::abs(cfg.grid[i].reward - cfg.grid[k].reward),
                                      std::abs(cfg.grid[i].cost - cfg.grid[k].cost));
            if (!state.safe[k] && conf.contained[i].lo + d <= 2.0) ++want;
          }
        CHECK(got[i] == want);
      }
    }
  }
}

TEST_CASE("exploration target") {
  auto cfg = line_config(3, 10.0, 0.0);
  cfg.tolerance = 0.1;
  auto conf = ConfidenceState::initial(3, 10.0);
  conf.contained = {{1.0, 1.5}, {1.0, 1.2}, {1.0, 1.9}};
  auto state = SafeSetState::initial(3, {0, 1, 2});
  state.expanders = {1, 1, 1};
  CHECK(select_exploration_target(state, conf, cfg) == std::optional<std::size_t>(2));

  conf.contained = {{1.0, 1.05}, {1.0, 1.08}, {1.0, 1.02}};
  CHECK_FALSE(select_exploration_target(state, conf, cfg).has_value());

  conf.contained = {{1.0, 5.0}, {1.0, 5.0}, {1.0, 5.0}};
  state.expanders = {0, 0, 0};
  CHECK_FALSE(select_exploration_target(state, conf, cfg).has_value());
}

TEST_CASE("maximization target") {
  auto conf = ConfidenceState::initial(3, 1.0);
  SUBCASE("single safe point") {
    conf.reward_ucb = {9.0, 1.0, 7.0};
    CHECK(select_maximization_target(SafeSetState::initial(3, {1}), conf) == 1);
  }
  SUBCASE("argmax of UCB") {
    conf.reward_ucb = {3.0, 3.5, 9.0};
    CHECK(select_maximization_target(SafeSetState::initial(3, {0, 1}), conf) == 1);
  }
  SUBCASE("ties go to the lowest index") {
    conf.reward_ucb = {2.0, 4.0, 4.0};
    CHECK(select_maximization_target(SafeSetState::initial(3, {0, 1, 2}), conf) == 1);
  }
  SUBCASE("empty safe set is an invariant violation") {
    SafeSetState empty = SafeSetState::initial(3, {});
    CHECK_THROWS_AS(select_maximization_target(empty, conf), InvariantViolation);
  }
  SUBCASE("random instances match a scan") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto c10 = ConfidenceState::initial(10, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      SafeSetState s = SafeSetState::initial(10, {rng() % 10});
      for (std::size_t i = 0; i < 10; ++i) {
        c10.reward_ucb[i] = u(rng);
        if (rng() % 2) s.safe[i] = true;
      }
      std::size_t want = 10;
      for (std::size_t i = 0; i < 10; ++i)
        if (s.safe[i] && (want == 10 || c10.reward_ucb[i] > c10.reward_ucb[want])) want = i;
      CHECK(select_maximization_target(s, c10) == want);
    }
  }
}

TEST_CASE("run_pls on a constant objective") {
  PlsConfig cfg;
  cfg.grid = {{0, 0}, {1, 0}};
  cfg.threshold = 1.0;
  cfg.initial_safe_set = {0};
  cfg.kernel_r = cfg.kernel_g = {10.0, 10.0, 1.0};
  cfg.max_exploration_iters = 5;
  cfg.max_maximization_iters = 5;
  const Evaluator constant = [](const TargetReturn&, std::size_t, std::uint64_t) {
    Observation o;
    o.reward = 1.0;
    o.cost = 0.0;
    o.true_reward = 1.0;
    o.true_cost = 0.0;
    return o;
  };
  std::vector<std::pair<std::size_t, std::size_t>> picks;  // (chosen, brute-force argmax)
  const auto res = run_pls(cfg, constant, [&](const IterationSnapshot& s) {
    if (s.phase != Phase::maximization) return;
    std::size_t best = 0;
    for (std::size_t i = 1; i < 2; ++i)
      if (s.safe_set.safe[i] && s.confidence.reward_ucb[i] > s.confidence.reward_ucb[best]) best = i;
    picks.emplace_back(*s.chosen, best);
  });
  CHECK_FALSE(res.aborted);
  CHECK(res.invariant_failures.empty());
  CHECK(res.trace.back().phase == Phase::operate);
  CHECK(res.trace.back().safe_set_size == 2);
  for (const auto& r : res.trace) CHECK_FALSE(r.violation);
  REQUIRE_FALSE(picks.empty());
  for (const auto& [chosen, best] : picks) CHECK(chosen == best);
}

TEST_CASE("run_pls is deterministic and keeps partial traces on failure") {
  PlsConfig cfg = line_config(6, 2.0, 0.0);
  cfg.kernel_r = cfg.kernel_g = {3.0, 3.0, 1.0};
  cfg.max_exploration_iters = 8;
  cfg.max_maximization_iters = 8;
  cfg.seed = 99;
  const Evaluator noisy = [](const TargetReturn& z, std::size_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.1);
    Observation o;
    o.reward = z.reward / 5.0 + n(rng);
    o.cost = z.reward / 4.0 + n(rng);
    o.reward_se = o.cost_se = 0.1;
    return o;
  };
  const auto a = run_pls(cfg, noisy);
  const auto b = run_pls(cfg, noisy);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a.trace, {});
  write_trace_csv(sb, b.trace, {});
  CHECK(sa.str() == sb.str());

  int calls = 0;
  const Evaluator flaky = [&](const TargetReturn& z, std::size_t i, std::uint64_t seed) {
    if (++calls == 4) throw std::runtime_error("simulator crashed");
    return noisy(z, i, seed);
  };
  const auto c = run_pls(cfg, flaky);
  CHECK(c.aborted);
  CHECK(c.abort_reason == "simulator crashed");
  CHECK(c.trace.size() == 3);
}

TEST_CASE("config validation") {
  PlsConfig cfg = line_config(3, 1.0, 0.0);
  CHECK_NOTHROW(cfg.validate());
  cfg.initial_safe_set = {};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.initial_safe_set = {5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = line_config(3, 1.0, 0.0);
  cfg.failure_probability = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("trace CSV round trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<TraceRecord> trace;
  for (int i = 0; i < 50; ++i) {
    TraceRecord r;
    r.iteration = static_cast<std::uint64_t>(i + 1);
    r.phase = static_cast<Phase>(i % 4);
    r.z = {u(rng), u(rng)};
    r.y_r = u(rng) / 3.0;
    r.y_g = u(rng) * 1e-7;
    r.true_jr = i % 5 ? u(rng) : std::nan("");
    r.true_jg = u(rng);
    r.safe_set_size = static_cast<std::size_t>(i);
    r.alpha_r = u(rng);
    r.alpha_g = std::numeric_limits<double>::infinity();
    r.violation = i % 3 == 0;
    trace.push_back(r);
  }
  std::stringstream ss;
  write_trace_csv(ss, trace, {{"master_seed", "42"}, {"note", "a=b"}});
  const auto back = read_trace_csv(ss);
  CHECK(back.header.at("master_seed") == "42");
  CHECK(back.header.at("note") == "a=b");
  REQUIRE(back.records.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& x = trace[i];
    const auto& y = back.records[i];
    CHECK(x.phase == y.phase);
    CHECK(x.z == y.z);
    CHECK(x.y_r == y.y_r);
    CHECK(x.y_g == y.y_g);
    CHECK((std::isnan(x.true_jr) ? std::isnan(y.true_jr) : x.true_jr == y.true_jr));
    CHECK(x.alpha_g == y.alpha_g);
    CHECK(x.violation == y.violation);
  }
  std::istringstream bad("iter,phase\n1,seed\n");
  CHECK_THROWS_AS(read_trace_csv(bad), std::invalid_argument);
}
