#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/state.hpp"

namespace ibc {

struct StepOptions {
  double tolerance = 1e-13;  // relative residual of the implicit solve
  int max_iterations = 1000;
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Crank-Nicolson step (1 + i H dt / 2 hbar)^{-1} (1 - i H dt / 2 hbar) psi.
/// The implicit system is solved by conjugate gradients on the normal
/// equations 1 + (dt/2hbar)^2 H^2, which is self-adjoint in the weighted inner
/// product. Throws PropagationError if the solve stalls.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const HamiltonianOp& h, double dt, StepOptions options = {});

  SectoredWaveFunction step(const SectoredWaveFunction& psi, StepStats* stats = nullptr);
  double dt() const { return dt_; }

 private:
  void apply_h(const std::vector<cplx>& in, std::vector<cplx>& out) const;
  double wnorm2(const std::vector<cplx>& v) const;
  cplx wdot(const std::vector<cplx>& a, const std::vector<cplx>& b) const;

  const HamiltonianOp& h_;
  double dt_;
  double tau_;
  StepOptions options_;
  std::vector<double> weights_;
  std::vector<cplx> b_, x_, r_, p_, tmp_, mp_;
};

SectoredWaveFunction step_crank_nicolson(const HamiltonianOp& h, const SectoredWaveFunction& psi, double dt,
                                         const StepOptions& options = {}, StepStats* stats = nullptr);

/// Snapshots psi_t at t = 0, dt_snap, 2 dt_snap, ...
struct EvolutionRecord {
  std::vector<SectoredWaveFunction> snapshots;
  double step_dt = 0.0;
  int stride = 1;
  double t_max = 0.0;
  std::string config_hash;
  double max_edge_band_norm = 0.0;

  double snapshot_dt() const { return step_dt * stride; }
  double time_of(std::size_t k) const { return snapshots.at(k).time(); }
  double horizon() const { return snapshots.empty() ? 0.0 : snapshots.back().time(); }
  const LatticeSpec& spec() const { return snapshots.front().spec(); }

  /// Snapshot interval containing t: returns k with time_of(k) <= t <= time_of(k+1)
  /// and the fraction of the interval. Throws HorizonError outside [0, horizon].
  std::pair<std::size_t, double> locate(double t) const;

  /// psi_t by linear interpolation between snapshots.
  SectoredWaveFunction interpolate(double t) const;
};

/// Evolve psi0 to t_max with step dt, keeping every `stride`-th step. The step
/// count is rounded up to a multiple of `stride`, so the final snapshot time is
/// >= t_max. psi0 must be normalized.
EvolutionRecord evolve(const HamiltonianOp& h, const SectoredWaveFunction& psi0, double dt, double t_max,
                       int stride = 1, const StepOptions& options = {});

/// Conjugate-reversed record: evolve time_conjugate(psi_T) forward over the
/// same horizon.
EvolutionRecord evolve_reversed(const HamiltonianOp& h, const EvolutionRecord& forward,
                                const StepOptions& options = {});

/// Default time step 0.1 * (2 m eps^2 / hbar).
double default_time_step(const ModelParams& params, const LatticeSpec& spec);

/// Norm carried by the two outermost rows (y or r) of the lattice.
double edge_band_norm(const SectoredWaveFunction& psi);

}  // namespace ibc
