#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pls/gp.hpp"
#include "pls/types.hpp"

namespace pls::safe {

enum class Phase { seed, exploration, maximization, operate };

std::string_view to_string(Phase phase) noexcept;
Phase parse_phase(std::string_view text);

enum class Metric { chebyshev, euclidean };

double distance(const TargetReturn& a, const TargetReturn& b, Metric metric) noexcept;

/// Uniform lattice over [r_lo, r_hi] x [g_lo, g_hi]. Points are ordered
/// reward-major: index = i_r * g_points + i_g.
struct Lattice {
  double r_lo = 0.0;
  double r_hi = 1.0;
  int r_points = 1;
  double g_lo = 0.0;
  double g_hi = 1.0;
  int g_points = 1;

  void validate() const;
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(r_points) * static_cast<std::size_t>(g_points);
  }
  std::size_t index(int i_r, int i_g) const noexcept {
    return static_cast<std::size_t>(i_r) * static_cast<std::size_t>(g_points) +
           static_cast<std::size_t>(i_g);
  }
  std::vector<TargetReturn> points() const;
};

struct PlsConfig {
  double threshold = 1.0;             // b
  double failure_probability = 0.1;   // Delta
  double tolerance = 0.1;             // zeta
  double lipschitz = 0.0;             // L
  std::vector<TargetReturn> grid;     // Z
  Metric metric = Metric::chebyshev;  // d
  int episodes_per_eval = 20;
  int max_exploration_iters = 50;
  int max_maximization_iters = 50;
  // Observation noise. When unset, estimated from the evaluator's standard
  // errors at the seed set, floored at min_noise_variance.
  std::optional<double> noise_variance_r;
  std::optional<double> noise_variance_g;
  double min_noise_variance = 1e-4;
  gp::KernelSpec kernel_r;
  gp::KernelSpec kernel_g;
  // Constant GP prior means. When unset, the mean of the seed observations.
  std::optional<double> prior_mean_r;
  std::optional<double> prior_mean_g;
  std::uint64_t seed = 0;
  std::vector<std::size_t> initial_safe_set;  // Z0, as grid indices

  void validate() const;
};

/// sqrt(2 ln(|Z| j^2 pi^2 / (6 Delta))).
double beta_schedule(std::uint64_t j, std::size_t grid_size, double delta);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(const Interval& inner) const noexcept {
    return lo <= inner.lo && inner.hi <= hi;
  }
  double width() const noexcept { return hi - lo; }
};

/// prev ∩ omega. When the two are disjoint the result collapses to the
/// endpoint of prev nearest omega and `misfit` is set.
Interval nested_intersection(const Interval& prev, const Interval& omega, bool& misfit) noexcept;

/// Per-grid-point confidence bookkeeping.
///
/// `contained` is the cost interval sequence started at [0, b]; u and l are
/// its endpoints. `certified` is the same running intersection started at
/// [0, +inf); its upper end is the tightest cost upper bound seen so far and
/// drives the per-point gate used when L = 0 (the [0, b] sequence alone can
/// never rise above b, so it cannot distinguish certified points).
struct ConfidenceState {
  std::vector<Interval> reward;
  std::vector<Interval> cost;
  std::vector<Interval> contained;
  std::vector<Interval> certified;
  std::vector<double> reward_ucb;
  double alpha_r = 0.0;
  double alpha_g = 0.0;
  std::size_t misfits = 0;

  static ConfidenceState initial(std::size_t grid_size, double threshold);

  std::size_t size() const noexcept { return contained.size(); }
  double upper(std::size_t i) const noexcept { return contained[i].hi; }
  double lower(std::size_t i) const noexcept { return contained[i].lo; }
};

/// New intervals from posteriors fitted on the first N-1 observations.
ConfidenceState update_confidence(const ConfidenceState& prev, const gp::GpModel& gp_r,
                                  const gp::GpModel& gp_g, std::uint64_t j, const PlsConfig& cfg);

/// Same update from precomputed posterior predictions over the grid.
ConfidenceState update_confidence(const ConfidenceState& prev,
                                  std::span<const gp::Prediction> reward,
                                  std::span<const gp::Prediction> cost, double alpha_r,
                                  double alpha_g);

struct SafeSetState {
  std::vector<bool> safe;
  std::vector<std::size_t> expanders;  // e_N, zero outside the safe set
  Phase phase = Phase::exploration;
  std::uint64_t iteration = 0;

  static SafeSetState initial(std::size_t grid_size, const std::vector<std::size_t>& seeds);
  std::size_t count() const noexcept;
};

SafeSetState compute_safe_set(const SafeSetState& prev, const ConfidenceState& conf,
                              const PlsConfig& cfg);

std::vector<std::size_t> expander_scores(const SafeSetState& state, const ConfidenceState& conf,
                                         const PlsConfig& cfg);

/// Highest-width expander, or nullopt when exploration should stop.
std::optional<std::size_t> select_exploration_target(const SafeSetState& state,
                                                     const ConfidenceState& conf,
                                                     const PlsConfig& cfg);

/// Highest reward UCB inside the safe set. Throws InvariantViolation if the
/// safe set is empty.
std::size_t select_maximization_target(const SafeSetState& state, const ConfidenceState& conf);

struct Observation {
  double reward = 0.0;
  double cost = 0.0;
  double reward_se = std::numeric_limits<double>::quiet_NaN();
  double cost_se = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> true_reward;
  std::optional<double> true_cost;
};

/// Evaluates the policy conditioned on `z`. `seed` is derived by the optimizer
/// so that a run is reproducible.
using Evaluator =
    std::function<Observation(const TargetReturn& z, std::size_t grid_index, std::uint64_t seed)>;

struct TraceRecord {
  std::uint64_t iteration = 0;
  Phase phase = Phase::seed;
  std::size_t grid_index = 0;
  TargetReturn z;
  double y_r = 0.0;
  double y_g = 0.0;
  double true_jr = std::numeric_limits<double>::quiet_NaN();
  double true_jg = std::numeric_limits<double>::quiet_NaN();
  std::size_t safe_set_size = 0;
  double alpha_r = 0.0;
  double alpha_g = 0.0;
  bool violation = false;
};

struct IterationSnapshot {
  std::uint64_t iteration;
  Phase phase;
  const ConfidenceState& confidence;
  const SafeSetState& safe_set;
  std::optional<std::size_t> chosen;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

struct PlsResult {
  std::vector<TraceRecord> trace;
  std::optional<std::size_t> operating_index;
  std::vector<std::string> invariant_failures;
  std::size_t misfits = 0;
  std::size_t exploration_iterations = 0;
  std::size_t maximization_iterations = 0;
  double noise_variance_r = 0.0;
  double noise_variance_g = 0.0;
  double prior_mean_r = 0.0;
  double prior_mean_g = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

/// Seed evaluations, safe exploration, then reward maximization. The final
/// trace record (phase `operate`) is the queried point with the best mean
/// observed reward among those whose mean observed cost is within b.
PlsResult run_pls(const PlsConfig& cfg, const Evaluator& evaluator,
                  const IterationObserver& observer = {});

// Trace CSV: "# key=value" header lines followed by
// iter,phase,R,G,y_r,y_g,true_Jr,true_Jg,safe_set_size,alpha_r,alpha_g,violation
using TraceHeader = std::map<std::string, std::string>;

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace,
                     const TraceHeader& header);

struct TraceFile {
  TraceHeader header;
  std::vector<TraceRecord> records;
};

TraceFile read_trace_csv(std::istream& is);

}  // namespace pls::safe
