#include "ibcsim/process.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ibcsim/errors.hpp"

namespace ibc {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::FlowSample: return "flow";
    case EventKind::JumpDown: return "jump_down";
    case EventKind::JumpUp: return "jump_up";
    case EventKind::NodeAbort: return "node_abort";
    case EventKind::LatticeHop: return "lattice_hop";
  }
  return "unknown";
}

ProcessCounters& ProcessCounters::operator+=(const ProcessCounters& o) {
  node_aborts += o.node_aborts;
  majorant_violations += o.majorant_violations;
  edge_excursions += o.edge_excursions;
  boundary_hits += o.boundary_hits;
  stochastic_jumps += o.stochastic_jumps;
  proposals += o.proposals;
  return *this;
}

std::optional<Configuration> Trajectory::sample_at(double t) const {
  for (const auto& e : events)
    if (e.kind == EventKind::FlowSample && std::abs(e.t - t) <= 1e-9) return e.after;
  return std::nullopt;
}

std::size_t Trajectory::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const TrajectoryEvent& e) { return e.kind == kind; }));
}

std::size_t Ensemble::aborted() const {
  return static_cast<std::size_t>(
      std::count_if(trajectories.begin(), trajectories.end(), [](const Trajectory& t) { return t.aborted; }));
}

namespace {

Configuration displaced(const Configuration& q, const std::array<double, 2>& v, double h) {
  Configuration r = q;
  for (int d = 0; d < q.dim; ++d) r.coords[d] += h * v[d];
  return r;
}

Configuration rk4_step(const Dynamics& dyn, const Configuration& q, double t, double h) {
  if (q.dim == 0) return q;
  const auto k1 = dyn.velocity(t, q);
  const auto k2 = dyn.velocity(t + 0.5 * h, displaced(q, k1, 0.5 * h));
  const auto k3 = dyn.velocity(t + 0.5 * h, displaced(q, k2, 0.5 * h));
  const auto k4 = dyn.velocity(t + h, displaced(q, k3, h));
  Configuration r = q;
  for (int d = 0; d < q.dim; ++d) r.coords[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
  dyn.normalize_position(r);
  return r;
}

struct Advance {
  bool hit = false;
};

// Moves (q, t) along the flow to `target`, stopping early at a boundary hit.
Advance advance_flow(const Dynamics& dyn, Configuration& q, double& t, double target, const FlowOptions& opt,
                     ProcessCounters& counters, bool& edge_flag) {
  if (q.dim == 0) {
    t = target;
    return {};
  }
  while (t < target) {
    const double h = std::min(opt.step, target - t);
    const bool last = h >= target - t;
    const double d0 = dyn.boundary_distance(q);
    Configuration next = rk4_step(dyn, q, t, h);
    const double d1 = dyn.boundary_distance(next);
    if (d1 <= 0.0) {
      double lo = 0.0, hi = h;
      Configuration at = next;
      double s = h;
      if (std::abs(d1) > opt.boundary_tolerance || d0 <= 0.0) {
        for (int it = 0; it < opt.max_bisection; ++it) {
          const double mid = 0.5 * (lo + hi);
          Configuration qm = rk4_step(dyn, q, t, mid);
          const double dm = dyn.boundary_distance(qm);
          s = mid;
          at = qm;
          if (std::abs(dm) <= opt.boundary_tolerance && mid > 0.0) break;
          if (dm > 0.0)
            lo = mid;
          else
            hi = mid;
          if (hi - lo <= 1e-15 * std::max(1.0, t)) {
            s = hi;
            at = rk4_step(dyn, q, t, hi);
            break;
          }
        }
      }
      q = dyn.project_to_boundary(at);
      t = t + s;
      ++counters.boundary_hits;
      return {true};
    }
    q = next;
    t = last ? target : t + h;
    if (!edge_flag && dyn.in_edge_band(q)) {
      edge_flag = true;
      ++counters.edge_excursions;
    }
  }
  return {};
}

}  // namespace

FlowLeg integrate_flow(const Dynamics& dyn, Configuration q, double t, double t_limit, const FlowOptions& opt,
                       RandomStream& rng, ProcessCounters& counters) {
  bool edge_flag = false;
  try {
    if (!dyn.can_jump_up(q.sector)) {
      const auto a = advance_flow(dyn, q, t, t_limit, opt, counters, edge_flag);
      return {q, t, a.hit ? LegOutcome::HitBoundary : LegOutcome::ReachedLimit};
    }
    const double scale = dyn.rate_scale();
    while (t < t_limit) {
      const double window_end = std::min(dyn.next_rate_break(t), t_limit);
      double lam = scale * dyn.rate_majorant(t, window_end, q);
      while (t < window_end) {
        const double tc = lam > 0.0 ? t + rng.exponential(lam) : window_end + 1.0;
        const double target = std::min(tc, window_end);
        const auto a = advance_flow(dyn, q, t, target, opt, counters, edge_flag);
        if (a.hit) return {q, t, LegOutcome::HitBoundary};
        if (tc >= window_end) break;
        ++counters.proposals;
        const double sigma = scale * dyn.upward_rate(t, q);
        if (sigma > lam) {
          ++counters.majorant_violations;
          while (lam < sigma) lam *= 2.0;
          continue;
        }
        if (rng.uniform() * lam < sigma) {
          ++counters.stochastic_jumps;
          return {q, t, LegOutcome::StochasticFire};
        }
      }
      t = std::max(t, window_end);
    }
    return {q, t_limit, LegOutcome::ReachedLimit};
  } catch (const NodeProximityError&) {
    ++counters.node_aborts;
    return {q, t, LegOutcome::NodeAbort};
  }
}

Trajectory simulate_trajectory(const Dynamics& dyn, const Configuration& q0, double t0, double t_max,
                               RandomStream& rng, const std::vector<double>& sample_times,
                               const FlowOptions& options) {
  Trajectory tr;
  tr.id = rng.stream_id();
  std::vector<double> samples;
  for (double s : sample_times)
    if (s >= t0 - 1e-12 && s <= t_max + 1e-12) samples.push_back(std::clamp(s, t0, t_max));
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                samples.end());

  Configuration q = q0;
  dyn.normalize_position(q);
  double t = t0;
  std::size_t next_sample = 0;
  if (!samples.empty() && samples[0] <= t0) {
    tr.events.push_back({t0, EventKind::FlowSample, q, q});
    next_sample = 1;
  }
  while (t < t_max) {
    const double stop = next_sample < samples.size() ? samples[next_sample] : t_max;
    const FlowLeg leg = integrate_flow(dyn, q, t, stop, options, rng, tr.counters);
    switch (leg.outcome) {
      case LegOutcome::ReachedLimit:
        q = leg.q;
        t = stop;
        if (next_sample < samples.size()) {
          tr.events.push_back({t, EventKind::FlowSample, q, q});
          ++next_sample;
        }
        break;
      case LegOutcome::HitBoundary: {
        const Configuration after = dyn.boundary_map(leg.q);
        tr.events.push_back({leg.t, EventKind::JumpDown, leg.q, after});
        q = after;
        t = leg.t;
        break;
      }
      case LegOutcome::StochasticFire: {
        const Configuration after = dyn.arrival_config(leg.t, leg.q, rng.uniform());
        tr.events.push_back({leg.t, EventKind::JumpUp, leg.q, after});
        q = after;
        t = leg.t;
        break;
      }
      case LegOutcome::NodeAbort:
        tr.events.push_back({leg.t, EventKind::NodeAbort, leg.q, leg.q});
        tr.aborted = true;
        tr.final_time = leg.t;
        tr.counters.edge_excursions = std::min<std::uint64_t>(tr.counters.edge_excursions, 1);
        return tr;
    }
  }
  tr.final_time = t;
  tr.counters.edge_excursions = std::min<std::uint64_t>(tr.counters.edge_excursions, 1);
  return tr;
}

LatticeSampler::LatticeSampler(const SectoredWaveFunction& psi) : spec_(psi.spec()) {
  double total = 0.0;
  for (const auto& s : psi.sectors()) {
    sector_ids_.push_back(s.id);
    offsets_.push_back(s.offset);
    std::vector<double> cdf(s.size);
    double acc = 0.0;
    for (std::size_t k = 0; k < s.size; ++k) {
      acc += s.weight * std::norm(psi[s.offset + k]);
      cdf[k] = acc;
    }
    sector_prob_.push_back(acc);
    total += acc;
    cdf_.push_back(std::move(cdf));
  }
  if (!(total > 0.0)) throw DegenerateInputError("cannot sample from the zero wavefunction");
  for (auto& p : sector_prob_) p /= total;
}

std::size_t LatticeSampler::sample_site(RandomStream& rng) const {
  const double u = rng.uniform();
  std::size_t s = 0;
  double acc = sector_prob_[0];
  while (u >= acc && s + 1 < sector_prob_.size()) acc += sector_prob_[++s];
  while (cdf_[s].empty() || cdf_[s].back() <= 0.0) s = (s + 1) % cdf_.size();
  const auto& cdf = cdf_[s];
  const double v = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
  return offsets_[s] + std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

Configuration LatticeSampler::sample(RandomStream& rng) const {
  Configuration q = site_configuration(spec_, sample_site(rng));
  for (int d = 0; d < q.dim; ++d) q.coords[d] += (rng.uniform() - 0.5) * spec_.eps;
  // the first upper row's cell is clipped at the boundary
  if ((spec_.is_model3() && q.sector == 1) || (!spec_.is_model3() && q.sector == 2)) {
    const int axis = spec_.is_model3() ? 0 : 1;
    q.coords[axis] = std::max(q.coords[axis], 1e-9);
  }
  return q;
}

Ensemble simulate_ensemble(const Dynamics& dyn, const InitialSampler& initial, const EnsembleOptions& options) {
  Ensemble ens;
  ens.seed = options.seed;
  ens.rk4_step = options.flow.step;
  ens.trajectories.resize(options.n_traj);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      RandomStream rng(options.seed, k);
      const Configuration q0 = initial(rng);
      Trajectory tr = simulate_trajectory(dyn, q0, options.t0, options.t_max, rng, options.sample_times, options.flow);
      tr.id = k;
      tr.seed = options.seed;
      ens.trajectories[k] = std::move(tr);
    }
  };
  const int threads = std::max(1, options.threads);
  if (threads == 1 || options.n_traj < 2) {
    run(0, options.n_traj);
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = options.n_traj;
    const auto nt = static_cast<std::size_t>(threads);
    for (std::size_t w = 0; w < nt; ++w) pool.emplace_back(run, n * w / nt, n * (w + 1) / nt);
    for (auto& th : pool) th.join();
  }
  for (const auto& tr : ens.trajectories) ens.totals += tr.counters;
  return ens;
}

}  // namespace ibc
