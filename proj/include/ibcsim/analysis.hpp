#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/process.hpp"
#include "ibcsim/propagator.hpp"

namespace ibc {

struct SectorEstimate {
  int sector = 0;
  double empirical = 0.0;
  double std_error = 0.0;  // sqrt(p (1 - p) / n) of the empirical p
  double theory = 0.0;
  double z = 0.0;          // (empirical - theory) / sqrt(theory (1 - theory) / n)
};

/// Coordinate marginal with whole-sector categories where a sector has no
/// such coordinate. Probabilities over all categories sum to 1.
struct MarginalHistogram {
  std::string coordinate;
  std::vector<int> sector;
  std::vector<double> lo, hi;  // NaN for a whole-sector category
  std::vector<double> empirical, theory;
  double tv = 0.0;
  double noise = 0.0;  // sqrt(B / (2 pi n)), the expected sampling TV
};

struct TimeStats {
  double t = 0.0;
  std::size_t n_used = 0;
  std::vector<SectorEstimate> sectors;
  std::vector<MarginalHistogram> histograms;
  double tv = 0.0;        // largest marginal TV
  double tv_noise = 0.0;  // matching sampling-noise scale
  bool flagged = false;   // tv above 3x the noise scale
};

struct EnsembleStats {
  std::vector<TimeStats> times;
  ProcessCounters diagnostics;
  std::size_t n_traj = 0;
  std::size_t aborted = 0;
  double abort_fraction = 0.0;
  std::string config_hash;
  std::uint64_t seed = 0;

  double max_abs_z(int sector) const;
  double max_tv() const;
};

/// Empirical law of the ensemble against |psi_t|^2 at each requested time.
/// Bins: `bins` per coordinate over the region holding 99.9% of the mass,
/// aligned to lattice cells, plus under- and overflow bins. Throws
/// HorizonError for times outside the record and MismatchedRecordError when
/// the ensemble was generated from a different configuration.
EnsembleStats equivariance_report(const EvolutionRecord& record, const Ensemble& ensemble,
                                  const std::vector<double>& times, int bins = 32);

struct ReversalTest {
  std::string name;
  double t_forward = 0.0;
  double t_reverse = 0.0;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

struct ReversalSummary {
  std::vector<ReversalTest> tests;
  double min_p = 1.0;
  double corrected_p = 1.0;  // Bonferroni: min(1, min_p * tests)
  double alpha = 0.01;
  bool pass = true;
};

/// Two-sample chi-square tests of (Q_{T - t}) from the forward ensemble
/// against (Q~_t) from the ensemble run on the conjugate-reversed record, at
/// each t in t_compare, plus the per-trajectory jump-count laws (forward
/// creations against reverse absorptions and vice versa).
ReversalSummary time_reversal_report(const EvolutionRecord& forward_record, const Ensemble& forward,
                                     const Ensemble& reverse, const std::vector<double>& t_compare,
                                     double alpha = 0.01);

struct ReversibilityCheck {
  double max_residual = 0.0;
  double scale = 0.0;
  std::size_t sites = 0;
};

/// Compares rho_lower sigma^psi with rho_upper(boundary) [-v_normal^{psi*}]^+
/// at every boundary site.
ReversibilityCheck reversibility_identity_check(const HamiltonianOp& h, const SectoredWaveFunction& psi);

struct RadialFlatness {
  std::vector<double> bin_lo, bin_hi;
  std::vector<double> ratio;  // empirical mass / |w|^2 mass per bin
  double max_deviation = 0.0; // max |ratio / mean - 1|
};

/// Empirical radial mass near r = 0 relative to |w_t|^2 over the first
/// `n_bins` bins of `cells_per_bin` lattice cells each.
RadialFlatness radial_flatness(const EvolutionRecord& record, const Ensemble& ensemble, double t, int n_bins = 5,
                               int cells_per_bin = 2);
/// Same ratio with counts and |w_t|^2 masses summed over several sample times.
RadialFlatness radial_flatness(const EvolutionRecord& record, const Ensemble& ensemble,
                               const std::vector<double>& times, int n_bins = 5, int cells_per_bin = 2);

nlohmann::json stats_to_json(const EnsembleStats& stats);
nlohmann::json reversal_to_json(const ReversalSummary& summary);
/// Rows t, sector, bin_lo, bin_hi, emp, theory.
std::string histograms_csv(const EnsembleStats& stats);

}  // namespace ibc
