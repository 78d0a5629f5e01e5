#include "nodal/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Positive and sign-changing solutions of -Lap u + V u = f(u) on exterior domains"};
  app.require_subcommand(1, 1);
  nodal::RunOptions options;
  std::uint64_t seed = 0;
  int threads = 0;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "run configuration (YAML)")->check(CLI::ExistingFile);
    sub->add_option("--out", options.out_dir, "output directory (overrides the config)");
    sub->add_flag("--force", options.force, "run without a recorded hypothesis pass");
    sub->add_option("--seed", seed, "rng seed (overrides the config)");
    sub->add_option("--max-threads", threads, "worker threads for multi-start solves")->check(CLI::PositiveNumber);
  };
  add_flags(app.add_subcommand("check", "verify (V1) and (f1)-(f3)"));
  add_flags(app.add_subcommand("ladder", "energy ladder c_k and ell_k = c_k / c_inf"));
  add_flags(app.add_subcommand("orbit", "minimal orbit size, isotropy and threshold verdict"));
  add_flags(app.add_subcommand("solve", "positive ground state and nodal solutions from the ladder"));
  add_flags(app.add_subcommand("report", "summary and CSV extracts of a run directory"));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nodal::exit_usage;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--max-threads")) options.max_threads = threads;
  return nodal::run_command(sub->get_name(), options, std::cout, std::cerr);
}
