#include "ibcsim/lattice_bell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "ibcsim/errors.hpp"
#include "ibcsim/stats.hpp"

namespace ibc {

namespace {

double node_floor(const HamiltonianOp& h, const SectoredWaveFunction& psi, double threshold) {
  return threshold * norm_squared(psi) / h.spec().total_measure();
}

EventKind hop_kind(const LatticeSpec& spec, int from_sector, int to_sector) {
  if (from_sector == to_sector) return EventKind::LatticeHop;
  const int lower = spec.is_model3() ? 0 : 1;
  return from_sector == lower ? EventKind::JumpUp : EventKind::JumpDown;
}

}  // namespace

std::vector<BellRate> bell_rates(const HamiltonianOp& h, const SectoredWaveFunction& psi, std::size_t from,
                                 double node_threshold) {
  if (psi.spec() != h.spec()) throw ShapeError("bell_rates: lattice mismatch");
  const double rho = std::norm(psi[from]);
  if (!(rho > node_floor(h, psi, node_threshold))) throw NodeProximityError("Bell source site at a node", rho);
  thread_local std::vector<std::pair<std::size_t, cplx>> couplings;
  h.column_couplings(from, couplings);
  const double denom = rho * h.measure_of(from);
  const double pref = 2.0 / h.params().hbar;
  std::vector<BellRate> out;
  out.reserve(couplings.size());
  for (const auto& [q, m] : couplings) {
    const double s = std::imag(std::conj(psi[q]) * m * psi[from]);
    out.push_back({q, pref * std::max(0.0, s) / denom});
  }
  return out;
}

double master_equation_residual(const HamiltonianOp& h, const SectoredWaveFunction& psi) {
  const std::size_t n = psi.size();
  std::vector<double> net(n, 0.0);
  for (std::size_t from = 0; from < n; ++from) {
    std::vector<BellRate> rates;
    try {
      rates = bell_rates(h, psi, from, 0.0);
    } catch (const NodeProximityError&) {
      continue;
    }
    const double mass = std::norm(psi[from]) * h.measure_of(from);
    for (const auto& r : rates) {
      const double flow = r.rate * mass;
      net[r.site] += flow;
      net[from] -= flow;
    }
  }
  const SectoredWaveFunction hpsi = h.apply(psi);
  double worst = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const double expected = 2.0 / h.params().hbar * std::imag(std::conj(psi[q]) * hpsi[q]) * h.measure_of(q);
    worst = std::max(worst, std::abs(net[q] - expected));
  }
  return worst;
}

Trajectory simulate_bell(const HamiltonianOp& h, const EvolutionRecord& record, std::size_t start_site, double t0,
                         double t_max, RandomStream& rng, const std::vector<double>& sample_times,
                         const BellOptions& options) {
  if (record.snapshots.empty()) throw HorizonError("empty evolution record");
  if (record.spec() != h.spec()) throw MismatchedRecordError("record and Hamiltonian use different lattices");
  if (t_max > record.horizon() + 1e-9) throw HorizonError("Bell trajectory beyond the record horizon");
  const auto& spec = h.spec();

  Trajectory tr;
  tr.id = rng.stream_id();
  std::vector<double> samples;
  for (double s : sample_times)
    if (s >= t0 - 1e-12 && s <= t_max + 1e-12) samples.push_back(std::clamp(s, t0, t_max));
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                samples.end());
  std::size_t next_sample = 0;

  std::size_t site = start_site;
  double t = t0;
  auto flush_samples = [&](double upto) {
    while (next_sample < samples.size() && samples[next_sample] <= upto) {
      const Configuration q = site_configuration(spec, site);
      tr.events.push_back({samples[next_sample], EventKind::FlowSample, q, q});
      ++next_sample;
    }
  };
  flush_samples(t0);

  while (t < t_max) {
    std::size_t k = record.locate(t).first;
    while (k + 1 < record.snapshots.size() && record.time_of(k + 1) <= t) ++k;
    const double t_end = std::min(t_max, k + 1 < record.snapshots.size() ? record.time_of(k + 1) : t_max);
    std::vector<BellRate> rates;
    try {
      rates = bell_rates(h, record.snapshots[k], site, options.node_threshold);
    } catch (const NodeProximityError&) {
      ++tr.counters.node_aborts;
      const Configuration q = site_configuration(spec, site);
      tr.events.push_back({t, EventKind::NodeAbort, q, q});
      tr.aborted = true;
      tr.final_time = t;
      return tr;
    }
    double total = 0.0;
    for (auto& r : rates) {
      r.rate *= options.rate_scale;
      total += r.rate;
    }
    const double tau = total > 0.0 ? rng.exponential(total) : std::numeric_limits<double>::infinity();
    if (t + tau >= t_end) {
      flush_samples(t_end);
      t = t_end;
      continue;
    }
    t += tau;
    flush_samples(t);
    double u = rng.uniform() * total;
    std::size_t dest = rates.back().site;
    for (const auto& r : rates) {
      if (u < r.rate) {
        dest = r.site;
        break;
      }
      u -= r.rate;
    }
    const Configuration before = site_configuration(spec, site);
    const Configuration after = site_configuration(spec, dest);
    const EventKind kind = hop_kind(spec, before.sector, after.sector);
    if (kind != EventKind::LatticeHop) ++tr.counters.stochastic_jumps;
    tr.events.push_back({t, kind, before, after});
    site = dest;
  }
  flush_samples(t_max);
  tr.final_time = t_max;
  return tr;
}

Ensemble simulate_bell_ensemble(const HamiltonianOp& h, const EvolutionRecord& record, const EnsembleOptions& options,
                                const BellOptions& bell) {
  const LatticeSampler sampler(record.snapshots.front());
  Ensemble ens;
  ens.seed = options.seed;
  ens.config_hash = record.config_hash;
  ens.trajectories.resize(options.n_traj);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      RandomStream rng(options.seed, k);
      const std::size_t start = sampler.sample_site(rng);
      Trajectory tr = simulate_bell(h, record, start, options.t0, options.t_max, rng, options.sample_times, bell);
      tr.id = k;
      tr.seed = options.seed;
      ens.trajectories[k] = std::move(tr);
    }
  };
  const auto nt = static_cast<std::size_t>(std::max(1, options.threads));
  if (nt == 1 || options.n_traj < 2) {
    run(0, options.n_traj);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nt; ++w)
      pool.emplace_back(run, options.n_traj * w / nt, options.n_traj * (w + 1) / nt);
    for (auto& th : pool) th.join();
  }
  for (const auto& tr : ens.trajectories) ens.totals += tr.counters;
  return ens;
}

double probe_continuum_rate(const ModelParams& params, const ProbeSpec& probe) {
  const LatticeSpec spec{1.0, 8, 8, ModelKind::Model4Continuum};
  const double c = probe_lower_scale(params, spec);
  if (probe.a == 0.0) throw ProbeSpecError("probe needs a != 0");
  // at x = 0: psi2(0) = a G0, d_y psi2(0) = (i b + a y0 / sy^2) G0, psi1 = c a G0
  const double y0 = probe.center[1];
  const double sy = probe.width[1];
  const double gx = std::exp(-0.5 * probe.center[0] * probe.center[0] / (probe.width[0] * probe.width[0]));
  const double g0 = gx * std::exp(-0.5 * y0 * y0 / (sy * sy));
  const cplx boundary = probe.a * g0;
  const cplx dy = cplx(probe.a * y0 / (sy * sy), probe.b) * g0;
  const double rho1 = std::norm(c * probe.a * g0);
  const double s = std::imag(std::conj(boundary) * dy);
  return params.hbar / params.mass * std::max(0.0, s) / rho1;
}

SweepTable continuum_limit_sweep(const ModelParams& params, const std::vector<double>& eps_list,
                                 const ProbeSpec& probe) {
  if (eps_list.size() < 2) throw DomainError("continuum sweep needs at least two eps values");
  SweepTable table;
  table.continuum_rate = probe_continuum_rate(params, probe);
  table.eps_down_limit = params.hbar / params.mass * std::abs(probe.b / probe.a);
  ProbeSpec conj = probe;
  conj.b = -probe.b;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw DomainError("eps values must be positive");
    const LatticeSpec spec{eps, 8, 8, ModelKind::Model4Lattice};
    const HamiltonianOp h(params, spec);
    const SectoredWaveFunction psi = build_probe(params, spec, probe);
    const SectoredWaveFunction psi_c = build_probe(params, spec, conj);
    const int i = spec.nx / 2;  // x = 0
    const std::size_t lower = psi.lower_index(i);
    const std::size_t row1 = psi.upper_index(i, 1);
    // the eliminated boundary value must reproduce a G(x, 0)
    const double y0 = probe.center[1], sy = probe.width[1];
    const double expect = probe.a * std::exp(-0.5 * probe.center[0] * probe.center[0] / (probe.width[0] * probe.width[0])) *
                          std::exp(-0.5 * y0 * y0 / (sy * sy));
    const cplx boundary = h.boundary_value(psi[lower], 0.0);
    if (std::abs(boundary - expect) > 1e-10 * std::abs(expect))
      throw ProbeSpecError("probe does not satisfy the boundary condition");

    SweepRow row;
    row.eps = eps;
    for (const auto& r : bell_rates(h, psi, lower, 0.0))
      if (r.site == row1) row.up_rate = r.rate;
    for (const auto& r : bell_rates(h, psi_c, row1, 0.0))
      if (r.site == lower) row.down_rate = r.rate;
    row.up_err = row.up_rate - table.continuum_rate;
    row.eps_times_down = eps * row.down_rate;
    table.rows.push_back(row);
  }
  std::vector<double> e, err, down;
  bool fit_up = true, fit_down = true;
  for (const auto& r : table.rows) {
    e.push_back(r.eps);
    err.push_back(r.up_err);
    down.push_back(r.down_rate);
    fit_up = fit_up && r.up_err != 0.0;
    fit_down = fit_down && r.down_rate != 0.0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  table.up_order = fit_up ? log_log_slope(e, err) : nan;
  table.down_order = fit_down ? log_log_slope(e, down) : nan;
  const auto& a = table.rows[table.rows.size() - 2];
  const auto& b = table.rows.back();
  table.eps_down_last_change =
      b.eps_times_down != 0.0 ? std::abs(a.eps_times_down - b.eps_times_down) / std::abs(b.eps_times_down) : nan;
  return table;
}

}  // namespace ibc
