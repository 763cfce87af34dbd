#include "pls/harness.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "pls/cmdp.hpp"
#include "pls/oracle.hpp"

namespace pls::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return std::stod(s);
}

class ConfigReader {
 public:
  ConfigReader(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {}

  template <typename T>
  T get(const char* key) const {
    if (!doc_.contains(key)) throw std::invalid_argument(where_ + ": missing field '" + key + "'");
    return as<T>(key);
  }

  template <typename T>
  T get(const char* key, T fallback) const {
    return doc_.contains(key) ? as<T>(key) : fallback;
  }

  template <typename T>
  std::optional<T> optional(const char* key) const {
    if (!doc_.contains(key) || doc_.at(key).is_null()) return std::nullopt;
    return as<T>(key);
  }

  ConfigReader child(const char* key) const {
    if (!doc_.contains(key) || !doc_.at(key).is_object())
      throw std::invalid_argument(where_ + ": missing object '" + key + "'");
    return {doc_.at(key), where_ + "." + key};
  }

  bool has(const char* key) const { return doc_.contains(key); }
  const std::string& where() const { return where_; }

 private:
  template <typename T>
  T as(const char* key) const {
    try {
      return doc_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where_ + ": field '" + key + "': " + e.what());
    }
  }

  const json& doc_;
  std::string where_;
};

gp::KernelSpec read_kernel(const ConfigReader& r) {
  return {r.get<double>("lengthscale_r"), r.get<double>("lengthscale_g"), r.get<double>("signal_variance")};
}

safe::Metric read_metric(const std::string& name, const std::string& where) {
  if (name == "chebyshev") return safe::Metric::chebyshev;
  if (name == "euclidean") return safe::Metric::euclidean;
  throw std::invalid_argument(where + ": unknown metric '" + name + "'");
}

std::string trace_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trace_seed_%03d.csv", k);
  return buf;
}

struct SharedCmdp {
  cmdp::TabularCmdp model;
  rcsl::RcbPolicyTable table;
  std::vector<oracle::GroundTruthPoint> truth;
  double r_min = 0.0;
  double r_max = 0.0;
};

struct SeedOutcome {
  safe::PlsResult result;
  safe::TraceHeader header;
};

double best_safe_reward(const std::vector<safe::TraceRecord>& trace, double threshold) {
  double best = -INFINITY;
  for (const auto& r : trace) {
    if (r.phase == safe::Phase::operate) continue;
    if (!std::isnan(r.true_jg) && r.true_jg <= threshold) best = std::max(best, r.true_jr);
  }
  return best;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, int k, std::uint64_t master, const SharedCmdp* shared,
                     const safe::IterationObserver& observer) {
  safe::PlsConfig pls = cfg.pls;
  pls.grid = cfg.lattice.points();
  safe::TraceHeader header;
  header["format"] = "pls-trace v1";
  header["kind"] = std::string(to_string(cfg.kind));
  header["experiment"] = cfg.name;
  header["master_seed"] = std::to_string(master);
  header["seed_index"] = std::to_string(k);
  header["threshold"] = num(pls.threshold);
  header["delta"] = num(pls.failure_probability);

  SeedOutcome out;
  if (shared) {
    pls.seed = derive_seed(master, static_cast<std::uint64_t>(k));
    const auto& truth = shared->truth;
    safe::Evaluator eval = [&](const TargetReturn& z, std::size_t index, std::uint64_t seed) {
      const auto est = rcsl::evaluate_policy_mc(shared->model, shared->table, z, pls.episodes_per_eval, seed);
      safe::Observation obs;
      obs.reward = est.reward;
      obs.cost = est.cost;
      obs.reward_se = est.reward_se;
      obs.cost_se = est.cost_se;
      obs.true_reward = truth[index].reward;
      obs.true_cost = truth[index].cost;
      return obs;
    };
    const auto optimum = oracle::brute_force_optimum(truth, pls.threshold);
    header["r_min"] = num(cfg.r_min.value_or(shared->r_min));
    header["r_max"] = num(cfg.r_max.value_or(shared->r_max));
    if (optimum.optimum) header["optimum_jr"] = num(optimum.optimum->reward);
    out.result = safe::run_pls(pls, eval, observer);
  } else {
    const auto& syn = *cfg.synthetic;
    const std::uint64_t run_seed = derive_seed(master, static_cast<std::uint64_t>(k));
    synthetic::SyntheticSpec spec{cfg.lattice, pls.kernel_r, pls.kernel_g, syn.mean_r, syn.mean_g,
                                  syn.noise_std_r, syn.noise_std_g};
    // The known-safe seed must actually be safe: redraw problems whose
    // cheapest grid point is infeasible.
    int redraws = 0;
    auto problem = synthetic::make_problem(spec, run_seed, pls.metric);
    while (problem.cost[problem.seed_index] > pls.threshold) {
      if (++redraws > 100) throw std::runtime_error("synthetic: no problem with a feasible seed in 100 draws");
      problem = synthetic::make_problem(spec, derive_seed(run_seed, 100 + static_cast<std::uint64_t>(redraws)),
                                        pls.metric);
    }
    pls.seed = derive_seed(run_seed, 2);
    pls.initial_safe_set = {problem.seed_index};
    if (!pls.prior_mean_r) pls.prior_mean_r = syn.mean_r;
    if (!pls.prior_mean_g) pls.prior_mean_g = syn.mean_g;
    if (!pls.noise_variance_r) pls.noise_variance_r = syn.noise_std_r * syn.noise_std_r;
    if (!pls.noise_variance_g) pls.noise_variance_g = syn.noise_std_g * syn.noise_std_g;
    if (syn.lipschitz_from_truth) pls.lipschitz = problem.lipschitz;

    std::vector<oracle::GroundTruthPoint> truth;
    for (std::size_t i = 0; i < problem.grid.size(); ++i)
      truth.push_back({i, problem.grid[i], problem.reward[i], problem.cost[i]});
    const auto reachable =
        synthetic::reachable_feasible(cfg.lattice, problem.cost, pls.threshold, problem.seed_index);
    std::vector<oracle::GroundTruthPoint> reach_truth;
    for (auto i : reachable) reach_truth.push_back(truth[i]);
    const auto global = oracle::brute_force_optimum(truth, pls.threshold);
    const auto local = oracle::brute_force_optimum(reach_truth, pls.threshold);

    const auto [lo, hi] = std::minmax_element(problem.reward.begin(), problem.reward.end());
    header["r_min"] = num(cfg.r_min.value_or(*lo));
    header["r_max"] = num(cfg.r_max.value_or(*hi));
    header["jr_range"] = num(*hi - *lo);
    header["run_seed"] = std::to_string(run_seed);
    header["redraws"] = std::to_string(redraws);
    header["lipschitz"] = num(pls.lipschitz);
    if (local.optimum) header["optimum_jr"] = num(local.optimum->reward);
    if (global.optimum) header["global_optimum_jr"] = num(global.optimum->reward);
    const auto evaluator = synthetic::make_evaluator(problem, syn.noise_std_r, syn.noise_std_g);
    out.result = safe::run_pls(pls, evaluator, observer);
  }

  header["optimizer_seed"] = std::to_string(pls.seed);
  header["misfits"] = std::to_string(out.result.misfits);
  header["noise_variance_r"] = num(out.result.noise_variance_r);
  header["noise_variance_g"] = num(out.result.noise_variance_g);
  header["invariant_failures"] = std::to_string(out.result.invariant_failures.size());
  if (out.result.aborted) header["aborted"] = out.result.abort_reason;
  out.header = std::move(header);
  return out;
}

SharedCmdp prepare_cmdp(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto& cs = *cfg.cmdp;
  SharedCmdp shared;
  shared.model = cmdp::load_cmdp(cs.file.string());
  cmdp::require_valid(shared.model);
  if (cs.behavior != "uniform")
    throw std::invalid_argument("cmdp.behavior: only \"uniform\" is supported");
  const auto dataset = cmdp::generate_dataset(shared.model, cmdp::uniform_policy(shared.model.num_actions),
                                              cs.dataset_size, cs.dataset_seed, cs.behavior);
  auto binning = cs.binning;
  binning.horizon = shared.model.horizon;
  shared.table = rcsl::estimate_rcb_policy(dataset, binning, shared.model.num_actions);

  shared.r_min = INFINITY;
  shared.r_max = -INFINITY;
  for (const auto& ep : dataset.episodes) {
    shared.r_min = std::min(shared.r_min, ep.total_reward);
    shared.r_max = std::max(shared.r_max, ep.total_reward);
  }

  const auto grid = cfg.lattice.points();
  if (shared.model.jitter == 0.0) {
    shared.truth = oracle::compute_ground_truth(shared.model, shared.table, grid);
    std::ofstream gt(out_dir / "ground_truth.csv");
    oracle::write_ground_truth_csv(gt, shared.truth,
                                   {{"cmdp", shared.model.name},
                                    {"dataset_seed", std::to_string(cs.dataset_seed)},
                                    {"dataset_size", std::to_string(cs.dataset_size)}});
  } else {
    // No exact oracle: a large Monte Carlo estimate stands in for the truth.
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto est = rcsl::evaluate_policy_mc(shared.model, shared.table, grid[i], 2000,
                                                derive_seed(cs.dataset_seed, 1000000 + i));
      shared.truth.push_back({i, grid[i], est.reward, est.cost});
    }
  }
  return shared;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::synthetic: return "synthetic";
    case ExperimentKind::cmdp: return "cmdp";
    case ExperimentKind::theory_check: return "theory-check";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (seeds < 1) throw std::invalid_argument("config: seeds must be >= 1");
  lattice.validate();
  if (r_min && r_max && !(*r_max > *r_min)) throw std::invalid_argument("config: r_max must exceed r_min");
  if (kind == ExperimentKind::cmdp && !cmdp) throw std::invalid_argument("config: cmdp experiment needs 'cmdp'");
  if (kind != ExperimentKind::cmdp && !synthetic)
    throw std::invalid_argument("config: synthetic experiment needs 'synthetic'");
  if (kind == ExperimentKind::cmdp && pls.initial_safe_set.empty())
    throw std::invalid_argument("config: optimizer.initial_safe_set is required for cmdp experiments");
  auto probe = pls;
  probe.grid = lattice.points();
  if (probe.initial_safe_set.empty()) probe.initial_safe_set = {0};
  probe.validate();
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const ConfigReader root(doc, "config");
  if (root.get<int>("schema_version") != kConfigSchemaVersion)
    throw std::invalid_argument("config: unsupported schema_version");

  ExperimentConfig cfg;
  const auto kind = root.get<std::string>("kind");
  if (kind == "synthetic") cfg.kind = ExperimentKind::synthetic;
  else if (kind == "cmdp") cfg.kind = ExperimentKind::cmdp;
  else if (kind == "theory-check") cfg.kind = ExperimentKind::theory_check;
  else throw std::invalid_argument("config: unknown kind '" + kind + "'");

  cfg.name = root.get<std::string>("name", kind);
  cfg.master_seed = root.get<std::uint64_t>("master_seed", 0);
  cfg.seeds = root.get<int>("seeds", 1);
  if (auto out = root.optional<std::string>("output_dir")) cfg.output_dir = base_dir / *out;
  cfg.r_min = root.optional<double>("r_min");
  cfg.r_max = root.optional<double>("r_max");

  const auto opt = root.child("optimizer");
  const auto grid = opt.child("grid");
  cfg.lattice = {grid.get<double>("r_lo"), grid.get<double>("r_hi"), grid.get<int>("r_points"),
                 grid.get<double>("g_lo"), grid.get<double>("g_hi"), grid.get<int>("g_points")};
  auto& p = cfg.pls;
  p.threshold = opt.get<double>("threshold");
  p.failure_probability = opt.get<double>("failure_probability", 0.1);
  p.tolerance = opt.get<double>("tolerance");
  p.lipschitz = opt.get<double>("lipschitz", 0.0);
  p.metric = read_metric(opt.get<std::string>("metric", "chebyshev"), opt.where());
  p.episodes_per_eval = opt.get<int>("episodes_per_eval", 20);
  p.max_exploration_iters = opt.get<int>("max_exploration_iters");
  p.max_maximization_iters = opt.get<int>("max_maximization_iters");
  p.noise_variance_r = opt.optional<double>("noise_variance_r");
  p.noise_variance_g = opt.optional<double>("noise_variance_g");
  p.min_noise_variance = opt.get<double>("min_noise_variance", 1e-4);
  p.kernel_r = read_kernel(opt.child("kernel_r"));
  p.kernel_g = read_kernel(opt.child("kernel_g"));
  p.prior_mean_r = opt.optional<double>("prior_mean_r");
  p.prior_mean_g = opt.optional<double>("prior_mean_g");
  p.initial_safe_set = opt.get<std::vector<std::size_t>>("initial_safe_set", {});

  if (root.has("cmdp")) {
    const auto c = root.child("cmdp");
    CmdpSettings cs;
    cs.file = base_dir / c.get<std::string>("file");
    cs.dataset_size = c.get<int>("dataset_size");
    cs.dataset_seed = c.get<std::uint64_t>("dataset_seed", 0);
    cs.behavior = c.get<std::string>("behavior", "uniform");
    const auto b = c.child("binning");
    cs.binning.reward_width = b.get<double>("reward_width");
    cs.binning.cost_width = b.get<double>("cost_width");
    cfg.cmdp = cs;
  }
  if (root.has("synthetic")) {
    const auto s = root.child("synthetic");
    SyntheticSettings ss;
    ss.mean_r = s.get<double>("mean_r", 0.0);
    ss.mean_g = s.get<double>("mean_g", 0.0);
    ss.noise_std_r = s.get<double>("noise_std_r");
    ss.noise_std_g = s.get<double>("noise_std_g");
    ss.lipschitz_from_truth = s.get<bool>("lipschitz_from_truth", false);
    cfg.synthetic = ss;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_config(os.str(), path.parent_path());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::pair<double, double> normalized_metrics(double reward, double cost, double r_min, double r_max,
                                             double threshold) {
  if (!(r_max > r_min) || !std::isfinite(r_min) || !std::isfinite(r_max))
    throw std::invalid_argument("normalized_metrics: need finite r_max > r_min");
  if (!(threshold > 0.0)) throw std::invalid_argument("normalized_metrics: threshold must be positive");
  return {(reward - r_min) / (r_max - r_min), cost / threshold};
}

RunOutcome run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  ExperimentConfig cfg = config;
  if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
  if (overrides.master_seed) cfg.master_seed = *overrides.master_seed;
  if (overrides.seeds) cfg.seeds = *overrides.seeds;
  cfg.validate();
  if (cfg.output_dir.empty()) throw std::invalid_argument("run_experiment: no output directory");
  fs::create_directories(cfg.output_dir);

  std::optional<SharedCmdp> shared;
  if (cfg.kind == ExperimentKind::cmdp) shared = prepare_cmdp(cfg, cfg.output_dir);

  std::vector<std::optional<SeedOutcome>> outcomes(static_cast<std::size_t>(cfg.seeds));
  std::vector<std::string> errors(outcomes.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.seeds; k = next++) {
      try {
        const auto observer = overrides.observer ? overrides.observer(k) : safe::IterationObserver{};
        auto seed = run_seed(cfg, k, cfg.master_seed, shared ? &*shared : nullptr, observer);
        std::ofstream os(cfg.output_dir / trace_name(k));
        safe::write_trace_csv(os, seed.result.trace, seed.header);
        outcomes[static_cast<std::size_t>(k)] = std::move(seed);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(k)] = "seed " + std::to_string(k) + ": " + e.what();
      }
    }
  };
  const int jobs = std::clamp(overrides.jobs, 1, cfg.seeds);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunOutcome outcome;
  for (const auto& e : errors)
    if (!e.empty()) outcome.errors.push_back(e);

  std::ofstream summary(cfg.output_dir / "summary.csv");
  summary << "# format=pls-summary v1\n";
  summary << "# experiment=" << cfg.name << "\n";
  summary << "# kind=" << to_string(cfg.kind) << "\n";
  summary << "# master_seed=" << cfg.master_seed << "\n";
  summary << "seed_index,operating_R,operating_G,operating_Jr,operating_Jg,normalized_reward,"
             "normalized_cost,violations_seed,violations_exploration,violations_maximization,"
             "optimum_Jr,best_safe_Jr,simple_regret,invariant_failures\n";
  for (int k = 0; k < cfg.seeds; ++k) {
    const auto& o = outcomes[static_cast<std::size_t>(k)];
    if (!o) continue;
    const auto& r = o->result;
    outcome.trace_files.push_back(cfg.output_dir / trace_name(k));
    for (const auto& f : r.invariant_failures) outcome.invariant_failures.push_back("seed " + std::to_string(k) + ": " + f);
    if (r.aborted) outcome.errors.push_back("seed " + std::to_string(k) + " aborted: " + r.abort_reason);

    const auto& op = r.trace.back();
    const double threshold = cfg.pls.threshold;
    const double jr = std::isnan(op.true_jr) ? op.y_r : op.true_jr;
    const double jg = std::isnan(op.true_jg) ? op.y_g : op.true_jg;
    const auto [nr, nc] = normalized_metrics(jr, jg, parse_double(o->header.at("r_min")),
                                             parse_double(o->header.at("r_max")), threshold);
    std::map<safe::Phase, int> viol;
    for (const auto& rec : r.trace)
      if (rec.violation && rec.phase != safe::Phase::operate) ++viol[rec.phase];
    const double optimum = o->header.count("optimum_jr") ? parse_double(o->header.at("optimum_jr")) : NAN;
    const double best = best_safe_reward(r.trace, threshold);
    summary << k << ',' << num(op.z.reward) << ',' << num(op.z.cost) << ',' << num(jr) << ',' << num(jg) << ','
            << num(nr) << ',' << num(nc) << ',' << viol[safe::Phase::seed] << ','
            << viol[safe::Phase::exploration] << ',' << viol[safe::Phase::maximization] << ',' << num(optimum)
            << ',' << num(best) << ',' << num(optimum - best) << ',' << r.invariant_failures.size() << '\n';
  }
  summary.close();
  outcome.summary_file = cfg.output_dir / "summary.csv";

  if (!outcome.trace_files.empty()) {
    const Report report = safety_report(cfg.output_dir, cfg.pls.failure_probability);
    std::ofstream txt(cfg.output_dir / "summary.txt");
    txt << "experiment: " << cfg.name << " (" << to_string(cfg.kind) << ")\n";
    txt << "master_seed: " << cfg.master_seed << "\n";
    txt << format_report(report);
    if (cfg.kind == ExperimentKind::theory_check) {
      std::size_t near = 0, counted = 0;
      for (int k = 0; k < cfg.seeds; ++k) {
        const auto& o = outcomes[static_cast<std::size_t>(k)];
        if (!o || !o->header.count("optimum_jr")) continue;
        ++counted;
        const double regret =
            parse_double(o->header.at("optimum_jr")) - best_safe_reward(o->result.trace, cfg.pls.threshold);
        if (regret <= 0.1 * parse_double(o->header.at("jr_range"))) ++near;
      }
      txt << "near-optimal runs (regret <= 0.1 * range of J_r): " << near << " / " << counted << "\n";
    }
  }

  if (!outcome.errors.empty()) outcome.exit_code = 2;
  else if (!outcome.invariant_failures.empty()) outcome.exit_code = 1;
  return outcome;
}

RunOutcome run_experiment(const fs::path& config_path, const RunOverrides& overrides) {
  return run_experiment(load_config(config_path), overrides);
}

BinomialInterval clopper_pearson(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw std::invalid_argument("clopper_pearson: no trials");
  if (successes > trials) throw std::invalid_argument("clopper_pearson: successes exceed trials");
  using boost::math::binomial_distribution;
  const double alpha = 1.0 - confidence;
  const auto n = static_cast<double>(trials);
  const auto k = static_cast<double>(successes);
  return {binomial_distribution<>::find_lower_bound_on_p(n, k, alpha),
          binomial_distribution<>::find_upper_bound_on_p(n, k, alpha)};
}

Report safety_report(const std::vector<std::pair<std::string, safe::TraceFile>>& traces, double delta) {
  if (traces.empty()) throw std::invalid_argument("safety_report: no traces");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("safety_report: delta must lie in (0, 1)");
  Report rep;
  rep.delta = delta;
  std::size_t longest = 0;
  for (const auto& [name, tf] : traces) {
    RunSummary run;
    run.trace_file = name;
    run.seed = tf.header.count("seed_index") ? tf.header.at("seed_index") : "";
    const double threshold = parse_double(tf.header.at("threshold"));
    const double r_min = parse_double(tf.header.at("r_min"));
    const double r_max = parse_double(tf.header.at("r_max"));
    const bool has_opt = tf.header.count("optimum_jr") > 0;
    const double optimum = has_opt ? parse_double(tf.header.at("optimum_jr")) : NAN;
    double best = -INFINITY;
    for (const auto& rec : tf.records) {
      if (rec.phase == safe::Phase::operate) {
        const double jr = std::isnan(rec.true_jr) ? rec.y_r : rec.true_jr;
        const double jg = std::isnan(rec.true_jg) ? rec.y_g : rec.true_jg;
        std::tie(run.normalized_reward, run.normalized_cost) = normalized_metrics(jr, jg, r_min, r_max, threshold);
        continue;
      }
      if (rec.violation) {
        run.any_violation = true;
        ++run.violations[rec.phase];
      }
      if (has_opt) {
        if (!std::isnan(rec.true_jg) && rec.true_jg <= threshold) best = std::max(best, rec.true_jr);
        run.regret.push_back(optimum - best);
      }
    }
    longest = std::max(longest, run.regret.size());
    if (run.any_violation) ++rep.violating_runs;
    rep.runs.push_back(std::move(run));
  }

  const auto n = static_cast<double>(rep.runs.size());
  rep.violation_frequency = static_cast<double>(rep.violating_runs) / n;
  rep.interval = clopper_pearson(rep.violating_runs, rep.runs.size());
  rep.pass = rep.interval.lower <= delta;

  double sr = 0.0, sc = 0.0;
  for (const auto& r : rep.runs) {
    sr += r.normalized_reward;
    sc += r.normalized_cost;
  }
  rep.mean_normalized_reward = sr / n;
  rep.mean_normalized_cost = sc / n;
  double vr = 0.0, vc = 0.0;
  for (const auto& r : rep.runs) {
    vr += (r.normalized_reward - rep.mean_normalized_reward) * (r.normalized_reward - rep.mean_normalized_reward);
    vc += (r.normalized_cost - rep.mean_normalized_cost) * (r.normalized_cost - rep.mean_normalized_cost);
  }
  rep.std_normalized_reward = rep.runs.size() > 1 ? std::sqrt(vr / (n - 1.0)) : 0.0;
  rep.std_normalized_cost = rep.runs.size() > 1 ? std::sqrt(vc / (n - 1.0)) : 0.0;

  for (std::size_t i = 0; i < longest; ++i) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const auto& r : rep.runs) {
      if (r.regret.empty()) continue;
      // Runs that stopped early hold their final best-so-far regret.
      const double v = i < r.regret.size() ? r.regret[i] : r.regret.back();
      if (std::isfinite(v)) {
        acc += v;
        ++cnt;
      }
    }
    rep.mean_regret.push_back(cnt ? acc / static_cast<double>(cnt) : NAN);
  }
  return rep;
}

Report safety_report(const fs::path& trace_dir, double delta) {
  if (!fs::is_directory(trace_dir))
    throw std::invalid_argument("safety_report: '" + trace_dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(trace_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  if (files.empty()) throw std::invalid_argument("safety_report: no trace files in '" + trace_dir.string() + "'");
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, safe::TraceFile>> traces;
  for (const auto& f : files) {
    std::ifstream in(f);
    traces.emplace_back(f.filename().string(), safe::read_trace_csv(in));
  }
  return safety_report(traces, delta);
}

std::string format_report(const Report& rep) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "runs: " << rep.runs.size() << "\n";
  os << "runs with any violation: " << rep.violating_runs << " (frequency " << rep.violation_frequency << ")\n";
  os << "95% Clopper-Pearson bounds: [" << rep.interval.lower << ", " << rep.interval.upper << "]\n";
  os << "delta: " << rep.delta << " -> " << (rep.pass ? "PASS" : "FAIL") << "\n";
  os << "normalized reward: " << rep.mean_normalized_reward << " +- " << rep.std_normalized_reward << "\n";
  os << "normalized cost: " << rep.mean_normalized_cost << " +- " << rep.std_normalized_cost << "\n";
  if (!rep.mean_regret.empty()) os << "final mean simple regret: " << rep.mean_regret.back() << "\n";
  return os.str();
}

}  // namespace pls::harness
