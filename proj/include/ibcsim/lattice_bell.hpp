#pragma once

#include <cstddef>
#include <vector>

#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/models.hpp"
#include "ibcsim/process.hpp"
#include "ibcsim/propagator.hpp"

namespace ibc {

struct BellRate {
  std::size_t site = 0;
  double rate = 0.0;
};

/// Bell jump rates out of `from`:
///   sigma(q' -> q) = (2/hbar) Im+[psi(q)* <q|H|q'> psi(q')] / (|psi(q')|^2 mu(q'))
/// over the stencil neighbours q of q'. Throws NodeProximityError when
/// |psi(q')|^2 <= node_threshold * ||psi||^2 / mu(Q).
std::vector<BellRate> bell_rates(const HamiltonianOp& h, const SectoredWaveFunction& psi, std::size_t from,
                                 double node_threshold = 1e-12);

/// Per-site balance of the master equation at frozen psi: net probability
/// inflow from the Bell rates minus (2/hbar) Im[psi* (H psi)] mu. Returns the
/// largest absolute residual. Sites below the node floor contribute their
/// outflow as zero.
double master_equation_residual(const HamiltonianOp& h, const SectoredWaveFunction& psi);

struct BellOptions {
  double node_threshold = 1e-12;
  double rate_scale = 1.0;  // negative controls only
};

/// Continuous-time jump chain on the lattice. Rates are frozen at the
/// snapshot that opens each record interval; within an interval the next jump
/// is the first of the competing exponential clocks.
Trajectory simulate_bell(const HamiltonianOp& h, const EvolutionRecord& record, std::size_t start_site, double t0,
                         double t_max, RandomStream& rng, const std::vector<double>& sample_times,
                         const BellOptions& options = {});

/// Bell ensemble; trajectory k draws its start site from |psi_0|^2 with
/// RandomStream(seed, k).
Ensemble simulate_bell_ensemble(const HamiltonianOp& h, const EvolutionRecord& record, const EnsembleOptions& options,
                                const BellOptions& bell = {});

struct SweepRow {
  double eps = 0.0;
  double up_rate = 0.0;
  double up_err = 0.0;        // up_rate minus the continuum rate
  double down_rate = 0.0;     // on the conjugate probe
  double eps_times_down = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double continuum_rate = 0.0;        // boundary-current rate of the continuum probe
  double eps_down_limit = 0.0;        // (hbar/m) |b/a|, limit of eps * down_rate
  double up_order = 0.0;              // log-log slope of |up_err| against eps
  double down_order = 0.0;            // log-log slope of down_rate against eps
  double eps_down_last_change = 0.0;  // relative change of eps * down_rate over the last two eps
};

/// Continuum jump rate of the probe at (x0, 0) from the exact boundary
/// derivative of (a + i b y) G.
double probe_continuum_rate(const ModelParams& params, const ProbeSpec& probe);

/// Lattice up and down rates at x = x0 for each eps, compared against the
/// continuum rate. Throws ProbeSpecError for an invalid probe and
/// DomainError for fewer than two eps values.
SweepTable continuum_limit_sweep(const ModelParams& params, const std::vector<double>& eps_list,
                                 const ProbeSpec& probe);

}  // namespace ibc
