#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pls/rcsl.hpp"
#include "pls/safe_optimizer.hpp"
#include "pls/synthetic.hpp"

namespace pls::harness {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { synthetic, cmdp, theory_check };

std::string_view to_string(ExperimentKind kind) noexcept;

struct CmdpSettings {
  std::filesystem::path file;  // resolved against the config file's directory
  int dataset_size = 1000;
  std::uint64_t dataset_seed = 0;
  std::string behavior = "uniform";
  rcsl::ReturnBinning binning;
};

struct SyntheticSettings {
  double mean_r = 0.0;
  double mean_g = 0.0;
  double noise_std_r = 0.1;
  double noise_std_g = 0.1;
  // Use the grid Lipschitz constant of each drawn J_g as L.
  bool lipschitz_from_truth = false;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::synthetic;
  std::string name;
  std::uint64_t master_seed = 0;
  int seeds = 1;
  std::filesystem::path output_dir;
  safe::Lattice lattice;
  safe::PlsConfig pls;  // grid filled from `lattice`; seed set per run
  std::optional<CmdpSettings> cmdp;
  std::optional<SyntheticSettings> synthetic;
  // R†_min,b / R†_max,b. When unset: dataset worst/best trajectory (cmdp) or
  // min/max of the true J_r over the grid (synthetic).
  std::optional<double> r_min;
  std::optional<double> r_max;

  void validate() const;
};

/// Parses a JSON config (schema_version 1). Errors name the file and field.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

/// ((R - R_min) / (R_max - R_min), G / b).
std::pair<double, double> normalized_metrics(double reward, double cost, double r_min, double r_max,
                                             double threshold);

struct RunOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> master_seed;
  std::optional<int> seeds;
  int jobs = 1;
  // Optional per-seed hook into every optimizer iteration. Called from worker
  // threads; each seed gets its own observer.
  std::function<safe::IterationObserver(int seed_index)> observer;
};

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> trace_files;
  std::filesystem::path summary_file;
  std::vector<std::string> invariant_failures;
  std::vector<std::string> errors;
};

/// Writes trace_seed_XXX.csv per seed, ground_truth.csv when an exact oracle
/// applies, summary.csv and summary.txt. Exit code is 1 if any invariant
/// assertion failed, 2 if a run aborted, else 0.
RunOutcome run_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});
RunOutcome run_experiment(const std::filesystem::path& config_path, const RunOverrides& overrides = {});

struct BinomialInterval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Exact (Clopper-Pearson) one-sided bounds at the given confidence.
BinomialInterval clopper_pearson(std::size_t successes, std::size_t trials, double confidence = 0.95);

struct RunSummary {
  std::string trace_file;
  std::string seed;
  bool any_violation = false;
  std::map<safe::Phase, std::size_t> violations;
  double normalized_reward = 0.0;
  double normalized_cost = 0.0;
  std::vector<double> regret;  // best-so-far simple regret per query; empty if no optimum recorded
};

struct Report {
  std::vector<RunSummary> runs;
  double delta = 0.1;
  std::size_t violating_runs = 0;
  double violation_frequency = 0.0;
  BinomialInterval interval;
  bool pass = true;  // false iff the 95% lower bound exceeds delta
  double mean_normalized_reward = 0.0;
  double std_normalized_reward = 0.0;
  double mean_normalized_cost = 0.0;
  double std_normalized_cost = 0.0;
  std::vector<double> mean_regret;
};

Report safety_report(const std::filesystem::path& trace_dir, double delta);

/// Same statistics from already-loaded traces.
Report safety_report(const std::vector<std::pair<std::string, safe::TraceFile>>& traces, double delta);

std::string format_report(const Report& report);

}  // namespace pls::harness
