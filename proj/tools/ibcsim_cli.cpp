#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ibcsim/errors.hpp"
#include "ibcsim/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bell-type IBC process simulator"};
  app.require_subcommand(1);

  std::string config_path;
  ibc::RunOptions options;
  std::uint64_t seed = 0;
  std::string out;

  const std::map<std::string, int (*)(const ibc::RunContext&)> commands{
      {"evolve", ibc::cmd_evolve},           {"sample", ibc::cmd_sample},
      {"equivariance", ibc::cmd_equivariance}, {"reverse", ibc::cmd_reverse},
      {"rates", ibc::cmd_rates},             {"lattice-limit", ibc::cmd_lattice_limit}};
  const std::map<std::string, std::string> help{
      {"evolve", "evolve psi and write the record with norm and energy"},
      {"sample", "simulate the trajectory ensemble and write JSONL"},
      {"equivariance", "compare the ensemble law against |psi_t|^2"},
      {"reverse", "compare forward and conjugate-reversed ensembles"},
      {"rates", "write jump-rate and velocity fields"},
      {"lattice-limit", "lattice rates against the continuum probe as eps shrinks"}};

  for (const auto& [name, fn] : commands) {
    (void)fn;
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides ensemble.seed");
    sub->add_option("--out", out, "output directory, overrides output.dir");
    sub->add_option("--threads", options.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", options.quiet, "suppress the console summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ibc::kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--out")) options.out_dir = out;

  try {
    const ibc::RunContext ctx = ibc::RunContext::make(ibc::load_config(config_path), options);
    return commands.at(sub->get_name())(ctx);
  } catch (const ibc::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return ibc::kConfigError;
  } catch (const std::invalid_argument& e) {
    // Probe, model and shape mismatches all trace back to the configuration.
    std::cerr << "configuration rejected: " << e.what() << "\n";
    return ibc::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << sub->get_name() << " failed: " << e.what() << "\n";
    return ibc::kTestFailure;
  }
}
