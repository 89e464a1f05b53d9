#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibcsim/analysis.hpp"
#include "ibcsim/config.hpp"
#include "ibcsim/lattice_bell.hpp"
#include "ibcsim/process.hpp"
#include "ibcsim/propagator.hpp"

namespace ibc {

enum ExitCode : int { kPass = 0, kTestFailure = 1, kConfigError = 2 };

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides ensemble.seed
  std::optional<std::string> out_dir; // overrides output.dir
  int threads = 1;
  bool quiet = false;
};

/// Config plus command-line overrides, with the hash of the effective config.
struct RunContext {
  RunConfig config;
  std::string hash;
  int threads = 1;
  bool quiet = false;

  static RunContext make(RunConfig config, const RunOptions& options);
  std::uint64_t seed() const { return config.ensemble.seed; }
  double t_max() const { return config.time.t_max; }
  std::vector<double> analysis_times() const;
  std::vector<double> compare_times() const;
};

EvolutionRecord run_evolution(const RunContext& ctx);
Ensemble run_ensemble(const RunContext& ctx, const EvolutionRecord& record, const std::vector<double>& sample_times,
                      double rate_scale = 1.0);

/// Pass rule for a report: |z| <= 4 for every sector estimate, TV <= 0.05
/// (or 3x the sampling-noise scale when that is larger), aborts < 0.5%.
bool equivariance_pass(const EnsembleStats& stats);
bool sweep_pass(const SweepTable& table);
/// Probe used by the sweep: sweep.probe, else init.probe, else the default.
ProbeSpec sweep_probe(const RunConfig& config);
/// Sweep eps values, defaulting to eps, eps/2, eps/4, eps/8.
std::vector<double> sweep_eps(const RunConfig& config);

/// One JSON object per event: {traj, t, kind, sector, coords, [to_sector, to_coords]}.
nlohmann::json trajectory_to_json(const Trajectory& traj);

// Subcommands. Each writes its artifacts under the output directory and
// returns an ExitCode.
int cmd_evolve(const RunContext& ctx);
int cmd_sample(const RunContext& ctx);
int cmd_equivariance(const RunContext& ctx);
int cmd_reverse(const RunContext& ctx);
int cmd_rates(const RunContext& ctx);
int cmd_lattice_limit(const RunContext& ctx);

}  // namespace ibc
