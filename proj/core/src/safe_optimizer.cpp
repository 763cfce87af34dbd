#include "pls/safe_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pls::safe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_size(const ConfidenceState& conf, const PlsConfig& cfg) {
  if (conf.size() != cfg.grid.size())
    throw std::invalid_argument("confidence state does not match the grid size");
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::seed: return "seed";
    case Phase::exploration: return "exploration";
    case Phase::maximization: return "maximization";
    case Phase::operate: return "operate";
  }
  return "unknown";
}

Phase parse_phase(std::string_view text) {
  if (text == "seed") return Phase::seed;
  if (text == "exploration") return Phase::exploration;
  if (text == "maximization") return Phase::maximization;
  if (text == "operate") return Phase::operate;
  throw std::invalid_argument("unknown phase '" + std::string(text) + "'");
}

double distance(const TargetReturn& a, const TargetReturn& b, Metric metric) noexcept {
  const double dr = std::abs(a.reward - b.reward);
  const double dg = std::abs(a.cost - b.cost);
  return metric == Metric::chebyshev ? std::max(dr, dg) : std::hypot(dr, dg);
}

void Lattice::validate() const {
  if (r_points < 1 || g_points < 1) throw std::invalid_argument("lattice needs at least one point per axis");
  if (!(r_lo <= r_hi) || !(g_lo <= g_hi)) throw std::invalid_argument("lattice bounds are inverted");
  if ((r_points == 1 && r_lo != r_hi) || (g_points == 1 && g_lo != g_hi))
    throw std::invalid_argument("single-point lattice axis needs equal bounds");
}

std::vector<TargetReturn> Lattice::points() const {
  validate();
  auto axis = [](double lo, double hi, int n, int i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<TargetReturn> out;
  out.reserve(size());
  for (int i = 0; i < r_points; ++i)
    for (int k = 0; k < g_points; ++k)
      out.push_back({axis(r_lo, r_hi, r_points, i), axis(g_lo, g_hi, g_points, k)});
  return out;
}

void PlsConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("PlsConfig: grid is empty");
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw std::invalid_argument("PlsConfig: threshold must be positive");
  if (!(failure_probability > 0.0 && failure_probability < 1.0))
    throw std::invalid_argument("PlsConfig: failure probability must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw std::invalid_argument("PlsConfig: tolerance must be positive");
  if (!(lipschitz >= 0.0)) throw std::invalid_argument("PlsConfig: Lipschitz constant must be nonnegative");
  if (episodes_per_eval < 1) throw std::invalid_argument("PlsConfig: episodes_per_eval must be >= 1");
  if (max_exploration_iters < 0 || max_maximization_iters < 0)
    throw std::invalid_argument("PlsConfig: iteration budgets must be nonnegative");
  if (initial_safe_set.empty()) throw std::invalid_argument("PlsConfig: initial safe set is empty");
  for (auto i : initial_safe_set)
    if (i >= grid.size()) throw std::invalid_argument("PlsConfig: initial safe index outside the grid");
  for (const auto& nv : {noise_variance_r, noise_variance_g})
    if (nv && !(*nv >= 0.0)) throw std::invalid_argument("PlsConfig: noise variance must be nonnegative");
  if (!(min_noise_variance >= 0.0))
    throw std::invalid_argument("PlsConfig: min_noise_variance must be nonnegative");
  kernel_r.validate();
  kernel_g.validate();
}

double beta_schedule(std::uint64_t j, std::size_t grid_size, double delta) {
  // Only PlsConfig restricts delta to (0, 1); the formula itself needs delta > 0.
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("beta_schedule: delta must be positive");
  if (j < 1 || grid_size < 1) throw std::invalid_argument("beta_schedule: j and grid size must be >= 1");
  const double jj = static_cast<double>(j);
  const double arg = static_cast<double>(grid_size) * jj * jj * std::numbers::pi * std::numbers::pi /
                     (6.0 * delta);
  if (arg < 1.0 - 1e-12) throw std::invalid_argument("beta_schedule: log argument below 1");
  return std::sqrt(2.0 * std::max(std::log(arg), 0.0));
}

Interval nested_intersection(const Interval& prev, const Interval& omega, bool& misfit) noexcept {
  misfit = false;
  const double lo = std::max(prev.lo, omega.lo);
  const double hi = std::min(prev.hi, omega.hi);
  if (lo <= hi) return {lo, hi};
  misfit = true;
  const double point = omega.hi < prev.lo ? prev.lo : prev.hi;
  return {point, point};
}

ConfidenceState ConfidenceState::initial(std::size_t grid_size, double threshold) {
  ConfidenceState s;
  s.reward.assign(grid_size, {-kInf, kInf});
  s.cost.assign(grid_size, {-kInf, kInf});
  s.contained.assign(grid_size, {0.0, threshold});
  s.certified.assign(grid_size, {0.0, kInf});
  s.reward_ucb.assign(grid_size, kInf);
  return s;
}

ConfidenceState update_confidence(const ConfidenceState& prev, std::span<const gp::Prediction> reward,
                                  std::span<const gp::Prediction> cost, double alpha_r,
                                  double alpha_g) {
  const std::size_t n = prev.size();
  if (reward.size() != n || cost.size() != n)
    throw std::invalid_argument("update_confidence: prediction count does not match the grid");

  ConfidenceState next = prev;
  next.alpha_r = alpha_r;
  next.alpha_g = alpha_g;
  for (std::size_t i = 0; i < n; ++i) {
    const double sr = std::sqrt(reward[i].variance);
    const double sg = std::sqrt(cost[i].variance);
    next.reward[i] = {reward[i].mean - alpha_r * sr, reward[i].mean + alpha_r * sr};
    next.reward_ucb[i] = next.reward[i].hi;
    next.cost[i] = {cost[i].mean - alpha_g * sg, cost[i].mean + alpha_g * sg};

    bool misfit = false;
    next.contained[i] = nested_intersection(prev.contained[i], next.cost[i], misfit);
    if (misfit) ++next.misfits;
    next.certified[i] = nested_intersection(prev.certified[i], next.cost[i], misfit);
  }
  return next;
}

ConfidenceState update_confidence(const ConfidenceState& prev, const gp::GpModel& gp_r,
                                  const gp::GpModel& gp_g, std::uint64_t j, const PlsConfig& cfg) {
  check_size(prev, cfg);
  const double alpha = beta_schedule(j, cfg.grid.size(), cfg.failure_probability);
  const auto pr = gp::predict(gp_r, cfg.grid);
  const auto pg = gp::predict(gp_g, cfg.grid);
  return update_confidence(prev, pr, pg, alpha, alpha);
}

SafeSetState SafeSetState::initial(std::size_t grid_size, const std::vector<std::size_t>& seeds) {
  SafeSetState s;
  s.safe.assign(grid_size, false);
  for (auto i : seeds) s.safe.at(i) = true;
  s.expanders.assign(grid_size, 0);
  return s;
}

std::size_t SafeSetState::count() const noexcept {
  return static_cast<std::size_t>(std::count(safe.begin(), safe.end(), true));
}

SafeSetState compute_safe_set(const SafeSetState& prev, const ConfidenceState& conf,
                              const PlsConfig& cfg) {
  check_size(conf, cfg);
  const std::size_t n = cfg.grid.size();
  SafeSetState next = prev;
  next.expanders.assign(n, 0);
  const double b = cfg.threshold;

  if (cfg.lipschitz == 0.0) {
    for (std::size_t k = 0; k < n; ++k)
      if (conf.certified[k].hi <= b) next.safe[k] = true;
    return next;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!prev.safe[i]) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (next.safe[k]) continue;
      if (conf.upper(i) + cfg.lipschitz * distance(cfg.grid[i], cfg.grid[k], cfg.metric) <= b)
        next.safe[k] = true;
    }
  }
  return next;
}

std::vector<std::size_t> expander_scores(const SafeSetState& state, const ConfidenceState& conf,
                                         const PlsConfig& cfg) {
  check_size(conf, cfg);
  const std::size_t n = cfg.grid.size();
  const double b = cfg.threshold;
  std::vector<std::size_t> scores(n, 0);

  if (cfg.lipschitz == 0.0) {
    std::size_t plausible = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (!state.safe[k] && conf.certified[k].lo <= b) ++plausible;
    for (std::size_t i = 0; i < n; ++i)
      if (state.safe[i]) scores[i] = plausible;
    return scores;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!state.safe[i]) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (state.safe[k]) continue;
      if (conf.lower(i) + cfg.lipschitz * distance(cfg.grid[i], cfg.grid[k], cfg.metric) <= b)
        ++scores[i];
    }
  }
  return scores;
}

std::optional<std::size_t> select_exploration_target(const SafeSetState& state,
                                                     const ConfidenceState& conf,
                                                     const PlsConfig& cfg) {
  check_size(conf, cfg);
  std::optional<std::size_t> best;
  double best_width = -kInf;
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!state.safe[i] || state.expanders[i] == 0) continue;
    const double w = conf.contained[i].width();
    if (w > best_width) {
      best_width = w;
      best = i;
    }
  }
  if (!best || best_width <= cfg.tolerance) return std::nullopt;
  return best;
}

std::size_t select_maximization_target(const SafeSetState& state, const ConfidenceState& conf) {
  std::optional<std::size_t> best;
  double best_ucb = -kInf;
  for (std::size_t i = 0; i < state.safe.size(); ++i) {
    if (!state.safe[i]) continue;
    if (!best || conf.reward_ucb[i] > best_ucb) {
      best_ucb = conf.reward_ucb[i];
      best = i;
    }
  }
  if (!best) throw InvariantViolation("select_maximization_target: safe set is empty");
  return *best;
}

namespace {

class Run {
 public:
  Run(const PlsConfig& cfg, const Evaluator& evaluator, const IterationObserver& observer)
      : cfg_(cfg), evaluator_(evaluator), observer_(observer) {}

  PlsResult execute() {
    cfg_.validate();
    const std::size_t n = cfg_.grid.size();
    safe_ = SafeSetState::initial(n, cfg_.initial_safe_set);
    conf_ = ConfidenceState::initial(n, cfg_.threshold);

    try {
      seed_phase();
      explore();
      maximize();
      finish();
    } catch (const std::exception& e) {
      result_.aborted = true;
      result_.abort_reason = e.what();
    }
    result_.misfits = conf_.misfits;
    return std::move(result_);
  }

 private:
  void evaluate(std::size_t index, Phase phase) {
    const auto seed = derive_seed(cfg_.seed, evaluations_++);
    const Observation obs = evaluator_(cfg_.grid[index], index, seed);
    if (!std::isfinite(obs.reward) || !std::isfinite(obs.cost))
      throw std::runtime_error("evaluator returned a non-finite observation");

    inputs_.push_back(cfg_.grid[index]);
    y_r_.push_back(obs.reward);
    y_g_.push_back(obs.cost);
    indices_.push_back(index);
    se_r_.push_back(obs.reward_se);
    se_g_.push_back(obs.cost_se);

    TraceRecord rec;
    rec.iteration = result_.trace.size() + 1;
    rec.phase = phase;
    rec.grid_index = index;
    rec.z = cfg_.grid[index];
    rec.y_r = obs.reward;
    rec.y_g = obs.cost;
    if (obs.true_reward) rec.true_jr = *obs.true_reward;
    if (obs.true_cost) rec.true_jg = *obs.true_cost;
    rec.safe_set_size = safe_.count();
    rec.alpha_r = conf_.alpha_r;
    rec.alpha_g = conf_.alpha_g;
    rec.violation = obs.true_cost ? *obs.true_cost > cfg_.threshold : obs.cost > cfg_.threshold;
    result_.trace.push_back(rec);
  }

  void seed_phase() {
    for (auto index : cfg_.initial_safe_set) evaluate(index, Phase::seed);

    auto mean_se2 = [](const std::vector<double>& se) {
      double acc = 0.0;
      for (double s : se) acc += std::isfinite(s) ? s * s : 0.0;
      return acc / static_cast<double>(se.size());
    };
    auto mean = [](const std::vector<double>& y) {
      double acc = 0.0;
      for (double v : y) acc += v;
      return acc / static_cast<double>(y.size());
    };
    result_.noise_variance_r =
        cfg_.noise_variance_r.value_or(std::max(mean_se2(se_r_), cfg_.min_noise_variance));
    result_.noise_variance_g =
        cfg_.noise_variance_g.value_or(std::max(mean_se2(se_g_), cfg_.min_noise_variance));
    result_.prior_mean_r = cfg_.prior_mean_r.value_or(mean(y_r_));
    result_.prior_mean_g = cfg_.prior_mean_g.value_or(mean(y_g_));
    refit();
  }

  void refit() {
    gp_r_ = gp::fit_posterior(inputs_, y_r_, result_.noise_variance_r, cfg_.kernel_r,
                              result_.prior_mean_r);
    gp_g_ = gp::fit_posterior(inputs_, y_g_, result_.noise_variance_g, cfg_.kernel_g,
                              result_.prior_mean_g);
  }

  void advance(Phase phase) {
    const ConfidenceState prev_conf = conf_;
    const SafeSetState prev_safe = safe_;
    conf_ = update_confidence(conf_, gp_r_, gp_g_, inputs_.size() + 1, cfg_);
    safe_ = compute_safe_set(safe_, conf_, cfg_);
    safe_.phase = phase;
    safe_.iteration = result_.trace.size() + 1;
    check_nesting(prev_conf, prev_safe);
  }

  void explore() {
    for (int it = 0; it < cfg_.max_exploration_iters; ++it) {
      advance(Phase::exploration);
      safe_.expanders = expander_scores(safe_, conf_, cfg_);
      const auto target = select_exploration_target(safe_, conf_, cfg_);
      notify(Phase::exploration, target);
      if (!target) return;
      check_chosen(*target);
      evaluate(*target, Phase::exploration);
      ++result_.exploration_iterations;
      refit();
    }
  }

  void maximize() {
    for (int it = 0; it < cfg_.max_maximization_iters; ++it) {
      advance(Phase::maximization);
      const auto target = select_maximization_target(safe_, conf_);
      notify(Phase::maximization, target);
      check_chosen(target);
      evaluate(target, Phase::maximization);
      ++result_.maximization_iterations;
      refit();
    }
  }

  void finish() {
    // Mean observation per distinct queried point.
    std::map<std::size_t, std::pair<double, double>> sums;
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      auto& s = sums[indices_[k]];
      s.first += y_r_[k];
      s.second += y_g_[k];
      ++counts[indices_[k]];
    }
    std::optional<std::size_t> best;
    double best_reward = -kInf;
    for (const auto& [index, s] : sums) {
      const double c = static_cast<double>(counts[index]);
      if (s.second / c > cfg_.threshold) continue;
      if (s.first / c > best_reward) {
        best_reward = s.first / c;
        best = index;
      }
    }
    if (!best) best = cfg_.initial_safe_set.front();
    result_.operating_index = best;

    const double c = static_cast<double>(counts[*best]);
    TraceRecord rec;
    rec.iteration = result_.trace.size() + 1;
    rec.phase = Phase::operate;
    rec.grid_index = *best;
    rec.z = cfg_.grid[*best];
    rec.y_r = sums[*best].first / c;
    rec.y_g = sums[*best].second / c;
    for (auto it = result_.trace.rbegin(); it != result_.trace.rend(); ++it) {
      if (it->grid_index != *best) continue;
      rec.true_jr = it->true_jr;
      rec.true_jg = it->true_jg;
      break;
    }
    rec.safe_set_size = safe_.count();
    rec.alpha_r = conf_.alpha_r;
    rec.alpha_g = conf_.alpha_g;
    rec.violation = std::isnan(rec.true_jg) ? rec.y_g > cfg_.threshold : rec.true_jg > cfg_.threshold;
    result_.trace.push_back(rec);
  }

  void notify(Phase phase, std::optional<std::size_t> chosen) {
    if (observer_) observer_({safe_.iteration, phase, conf_, safe_, chosen});
  }

  void fail(const std::string& what) {
    std::ostringstream os;
    os << "iteration " << result_.trace.size() + 1 << ": " << what;
    result_.invariant_failures.push_back(os.str());
  }

  void check_nesting(const ConfidenceState& prev_conf, const SafeSetState& prev_safe) {
    for (std::size_t i = 0; i < conf_.size(); ++i) {
      if (!prev_conf.contained[i].contains(conf_.contained[i]))
        fail("contained interval not nested at grid index " + std::to_string(i));
      if (!prev_conf.certified[i].contains(conf_.certified[i]))
        fail("certified interval not nested at grid index " + std::to_string(i));
      if (conf_.contained[i].lo > conf_.contained[i].hi)
        fail("lower bound above upper bound at grid index " + std::to_string(i));
      if (prev_safe.safe[i] && !safe_.safe[i])
        fail("safe set shrank at grid index " + std::to_string(i));
    }
  }

  void check_chosen(std::size_t index) {
    if (!safe_.safe.at(index)) fail("query outside the safe set at grid index " + std::to_string(index));
  }

  const PlsConfig& cfg_;
  const Evaluator& evaluator_;
  const IterationObserver& observer_;

  PlsResult result_;
  ConfidenceState conf_;
  SafeSetState safe_;
  gp::GpModel gp_r_;
  gp::GpModel gp_g_;
  std::vector<TargetReturn> inputs_;
  std::vector<double> y_r_, y_g_, se_r_, se_g_;
  std::vector<std::size_t> indices_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace

PlsResult run_pls(const PlsConfig& cfg, const Evaluator& evaluator, const IterationObserver& observer) {
  return Run(cfg, evaluator, observer).execute();
}

}  // namespace pls::safe
