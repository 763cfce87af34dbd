#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pls/cmdp.hpp"
#include "pls/harness.hpp"

using namespace pls;

int main(int argc, char** argv) {
  CLI::App app{"pls: safe target-return search for return-conditioned policies"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> seeds;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("-c,--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output_dir, "Output directory (overrides the config)");
  run->add_option("--seed", seed, "Master seed override");
  run->add_option("--seeds", seeds, "Number of seeds override")->check(CLI::PositiveNumber);
  run->add_option("-j,--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);

  std::string trace_dir;
  double delta = 0.1;
  auto* report = app.add_subcommand("report", "Safety report over a directory of traces");
  report->add_option("-t,--traces", trace_dir, "Directory with trace_*.csv")->required();
  report->add_option("-d,--delta", delta, "Allowed failure probability")->check(CLI::Range(0.0, 1.0));

  std::string validate_cmdp, validate_config;
  auto* validate = app.add_subcommand("validate", "Check a CMDP file or experiment config");
  validate->add_option("--cmdp", validate_cmdp, "CMDP JSON file");
  validate->add_option("--config", validate_config, "Experiment config");
  validate->require_option(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      harness::RunOverrides ov;
      if (!output_dir.empty()) ov.output_dir = output_dir;
      ov.master_seed = seed;
      ov.seeds = seeds;
      ov.jobs = jobs;
      const auto out = harness::run_experiment(std::filesystem::path(config_path), ov);
      for (const auto& e : out.errors) std::cerr << "error: " << e << '\n';
      for (const auto& f : out.invariant_failures) std::cerr << "invariant: " << f << '\n';
      std::cout << "wrote " << out.trace_files.size() << " traces and " << out.summary_file.string() << '\n';
      return out.exit_code;
    }
    if (*report) {
      const auto rep = harness::safety_report(trace_dir, delta);
      std::cout << harness::format_report(rep);
      return rep.pass ? 0 : 1;
    }
    if (!validate_cmdp.empty()) {
      const auto model = cmdp::load_cmdp(validate_cmdp);
      const auto problems = cmdp::validate_cmdp(model);
      for (const auto& v : problems) std::cerr << v.message << '\n';
      if (!problems.empty()) return 1;
      std::cout << model.name << ": ok (" << model.num_states << " states, " << model.num_actions
                << " actions, horizon " << model.horizon << ")\n";
      return 0;
    }
    const auto cfg = harness::load_config(validate_config);
    std::cout << cfg.name << ": ok (" << harness::to_string(cfg.kind) << ", " << cfg.seeds << " seeds)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
