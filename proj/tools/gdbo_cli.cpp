#include <gdbo/cli.hpp>

#include <CLI11.hpp>

int main(int argc, char** argv) {
  using namespace gdbo::cli;
  CLI::App app{"Guided discrete optimization experiments"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* c, bool seeds) {
    c->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--out", opt.out, std::string("output root; overrides $") + output_root_env + " and the config");
    if (seeds) {
      c->add_option("--seeds", opt.seeds, "seed list, e.g. 1,2,10-20");
      c->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    }
  };
  auto* sim = app.add_subcommand("simulate", "run the guided optimizer across seeds");
  common(sim, true);
  auto* base = app.add_subcommand("baseline", "run matched-budget random search across seeds");
  common(base, true);
  auto* bnd = app.add_subcommand("bounds", "evaluate bound scenarios to CSV");
  common(bnd, false);
  auto* dia = app.add_subcommand("diagnose", "phase, hazard, mass-lift and exponent tables from traces");
  dia->add_option("trace_dir", opt.trace_dir, "directory holding .jsonl traces")->required();
  dia->add_option("--config", opt.config, "config supplying N, K, J when no manifest is present")
      ->check(CLI::ExistingFile);
  dia->add_option("--out", opt.out, "output directory (default <trace_dir>/diagnostics)");
  dia->add_option("--svg", opt.svg, "write a regret plot to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }
  if (sim->parsed()) return cmd_simulate(opt);
  if (base->parsed()) return cmd_baseline(opt);
  if (bnd->parsed()) return cmd_bounds(opt);
  return cmd_diagnose(opt);
}
