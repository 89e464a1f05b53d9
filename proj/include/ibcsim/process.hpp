#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ibcsim/rng.hpp"
#include "ibcsim/state.hpp"

namespace ibc {

/// Piecewise-deterministic process contract: deterministic flow inside each
/// sector, deterministic jumps q' -> f(q') when the flow reaches a boundary,
/// and stochastic jumps onto the boundary at a supplied rate.
class Dynamics {
 public:
  virtual ~Dynamics() = default;

  virtual int dimension(int sector) const = 0;
  /// Throws NodeProximityError where the velocity is undefined.
  virtual std::array<double, 2> velocity(double t, const Configuration& q) const = 0;
  /// Signed distance to the boundary of q's sector; +inf when there is none.
  virtual double boundary_distance(const Configuration& q) const = 0;
  /// Move a refined hit point exactly onto the boundary.
  virtual Configuration project_to_boundary(const Configuration& q) const = 0;
  /// Deterministic destination f(q') of a boundary point.
  virtual Configuration boundary_map(const Configuration& q_boundary) const = 0;

  virtual bool can_jump_up(int sector) const = 0;
  /// Total stochastic jump rate at (t, q). May throw NodeProximityError.
  virtual double upward_rate(double t, const Configuration& q) const = 0;
  /// Upper bound for upward_rate along the flow from q over [t0, t1].
  virtual double rate_majorant(double t0, double t1, const Configuration& q) const = 0;
  /// End of the majorant window that contains t (strictly greater than t).
  virtual double next_rate_break(double t) const = 0;
  /// Boundary point the stochastic jump lands on; u is uniform on [0, 1).
  virtual Configuration arrival_config(double t, const Configuration& q, double u) const = 0;

  /// Canonical representative of q (periodic wrap).
  virtual void normalize_position(Configuration& q) const { (void)q; }
  virtual bool in_edge_band(const Configuration& q) const {
    (void)q;
    return false;
  }
  /// Scale factor applied to upward rates (negative controls only).
  virtual double rate_scale() const { return 1.0; }
};

enum class EventKind { FlowSample, JumpDown, JumpUp, NodeAbort, LatticeHop };

std::string to_string(EventKind kind);

struct TrajectoryEvent {
  double t = 0.0;
  EventKind kind = EventKind::FlowSample;
  Configuration before;
  Configuration after;
};

struct ProcessCounters {
  std::uint64_t node_aborts = 0;
  std::uint64_t majorant_violations = 0;
  std::uint64_t edge_excursions = 0;  // trajectories that entered the far-edge band
  std::uint64_t boundary_hits = 0;
  std::uint64_t stochastic_jumps = 0;
  std::uint64_t proposals = 0;

  ProcessCounters& operator+=(const ProcessCounters& o);
};

struct Trajectory {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  std::vector<TrajectoryEvent> events;
  double final_time = 0.0;
  bool aborted = false;
  ProcessCounters counters;

  /// Configuration recorded by a FlowSample at time t (within 1e-9).
  std::optional<Configuration> sample_at(double t) const;
  std::size_t count(EventKind kind) const;
};

struct FlowOptions {
  double step = 0.01;                // RK4 step bound h
  double boundary_tolerance = 1e-10;
  int max_bisection = 200;
};

enum class LegOutcome { ReachedLimit, HitBoundary, StochasticFire, NodeAbort };

struct FlowLeg {
  Configuration q;
  double t = 0.0;
  LegOutcome outcome = LegOutcome::ReachedLimit;
};

/// One deterministic leg: RK4 with step bound h, boundary hits refined by
/// bisection, stochastic firing by thinning against a piecewise-constant
/// majorant (doubled and redrawn whenever an acceptance test exceeds it).
FlowLeg integrate_flow(const Dynamics& dyn, Configuration q0, double t0, double t_limit, const FlowOptions& options,
                       RandomStream& rng, ProcessCounters& counters);

/// Single trajectory from q0 over [t0, t_max]. Configurations are recorded as
/// FlowSample events at the requested sample times; jump events record the
/// configuration on both sides, and the lower-sector value is the state at
/// the jump time.
Trajectory simulate_trajectory(const Dynamics& dyn, const Configuration& q0, double t0, double t_max,
                               RandomStream& rng, const std::vector<double>& sample_times,
                               const FlowOptions& options);

/// Draws initial configurations from the discrete |psi|^2 law: sector by its
/// probability, site by weight within the sector, then a uniform jitter over
/// the site's cell.
class LatticeSampler {
 public:
  explicit LatticeSampler(const SectoredWaveFunction& psi);
  Configuration sample(RandomStream& rng) const;
  /// Global site index drawn from the same law, without jitter.
  std::size_t sample_site(RandomStream& rng) const;
  const std::vector<double>& sector_probabilities() const { return sector_prob_; }

 private:
  LatticeSpec spec_;
  std::vector<int> sector_ids_;
  std::vector<double> sector_prob_;
  std::vector<std::vector<double>> cdf_;  // per sector, cumulative site masses
  std::vector<std::size_t> offsets_;
};

using InitialSampler = std::function<Configuration(RandomStream&)>;

struct EnsembleOptions {
  std::size_t n_traj = 1;
  std::uint64_t seed = 0;
  double t0 = 0.0;
  double t_max = 0.0;
  std::vector<double> sample_times;
  FlowOptions flow;
  int threads = 1;
};

struct Ensemble {
  std::vector<Trajectory> trajectories;
  ProcessCounters totals;
  std::uint64_t seed = 0;
  double rk4_step = 0.0;
  std::string config_hash;

  std::size_t aborted() const;
};

/// n_traj independent trajectories; trajectory k uses RandomStream(seed, k),
/// so results do not depend on the thread count.
Ensemble simulate_ensemble(const Dynamics& dyn, const InitialSampler& initial, const EnsembleOptions& options);

}  // namespace ibc
