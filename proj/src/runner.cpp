#include "ibcsim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ibcsim/bohm.hpp"
#include "ibcsim/errors.hpp"
#include "ibcsim/models.hpp"
#include "ibcsim/rng.hpp"
#include "ibcsim/snapshot_io.hpp"

namespace ibc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reverse ensembles draw from a disjoint key so they are independent of the forward run.
constexpr std::uint64_t kReverseSeedMix = 0x9e3779b97f4a7c15ULL;

const char* kMajorantPolicy =
    "piecewise constant per snapshot interval: 2x the largest site rate over the reachable neighbourhood "
    "at both interval ends, plus 1% of the global maximum (Model 4); doubled and redrawn on any violation";

const char* kBellPolicy =
    "no thinning: competing exponential clocks with Bell rates frozen at the snapshot opening each interval";

fs::path out_dir(const RunContext& ctx) {
  fs::path p(ctx.config.output.dir);
  fs::create_directories(p);
  return p;
}

bool wants(const RunContext& ctx, const std::string& format) {
  const auto& f = ctx.config.output.formats;
  return std::find(f.begin(), f.end(), format) != f.end();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// The only artifact allowed to differ between identical runs.
void write_meta(const RunContext& ctx, const std::string& command, int status) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::ostringstream ts;
  ts << std::put_time(std::gmtime(&tt), "%Y-%m-%dT%H:%M:%SZ");
  json meta{{"command", command},
            {"timestamp", ts.str()},
            {"config_hash", ctx.hash},
            {"seed", ctx.seed()},
            {"threads", ctx.threads},
            {"exit_status", status}};
  write_text(out_dir(ctx) / "meta.json", meta.dump(2) + "\n");
}

void say(const RunContext& ctx, const std::string& line) {
  if (!ctx.quiet) std::cout << line << "\n";
}

json counters_to_json(const ProcessCounters& c) {
  return {{"node_aborts", c.node_aborts},
          {"majorant_violations", c.majorant_violations},
          {"edge_excursions", c.edge_excursions},
          {"boundary_hits", c.boundary_hits},
          {"stochastic_jumps", c.stochastic_jumps},
          {"proposals", c.proposals}};
}

json config_point(const Configuration& q) {
  json coords = json::array();
  for (int d = 0; d < q.dim; ++d) coords.push_back(q.coords[d]);
  return {{"sector", q.sector}, {"coords", coords}};
}

std::vector<double> with_zero(std::vector<double> times) {
  times.push_back(0.0);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

void write_record(const RunContext& ctx, const HamiltonianOp& h, const EvolutionRecord& rec) {
  const fs::path dir = out_dir(ctx);
  if (wants(ctx, "json")) write_json_file((dir / "record.json").string(), record_to_json(rec));
  if (wants(ctx, "csv")) {
    std::ostringstream csv;
    csv << "# config_hash=" << ctx.hash << " seed=" << ctx.seed() << "\n";
    csv << "t,norm,sector1_prob,energy\n";
    for (const auto& psi : rec.snapshots) {
      const double n2 = norm_squared(psi);
      csv << fmt(psi.time()) << "," << fmt(std::sqrt(n2)) << "," << fmt(sector_probability(normalize(psi), 1)) << ","
          << fmt(energy(h, psi)) << "\n";
    }
    write_text(dir / "evolution.csv", csv.str());
  }
}

void write_trajectories(const RunContext& ctx, const Ensemble& ens, const std::string& name) {
  std::ostringstream out;
  json header{{"type", "header"},
              {"config_hash", ctx.hash},
              {"seed", ens.seed},
              {"rng", RandomStream::scheme()},
              {"stream_rule", "trajectory k uses stream id k"},
              {"rk4_step", ens.rk4_step},
              {"majorant_policy", ctx.config.model == ModelKind::Model4Lattice ? kBellPolicy : kMajorantPolicy},
              {"n_traj", ens.trajectories.size()},
              {"aborted", ens.aborted()},
              {"counters", counters_to_json(ens.totals)}};
  out << header.dump() << "\n";
  for (const auto& tr : ens.trajectories) {
    for (const auto& line : trajectory_to_json(tr)) out << line.dump() << "\n";
    if (tr.aborted || tr.counters.majorant_violations > 0)
      out << json{{"traj", tr.id}, {"kind", "summary"}, {"aborted", tr.aborted},
                  {"counters", counters_to_json(tr.counters)}}.dump()
          << "\n";
  }
  write_text(out_dir(ctx) / name, out.str());
}

std::string stats_text(const EnsembleStats& s, bool pass) {
  std::ostringstream os;
  os << "config_hash " << s.config_hash << "  seed " << s.seed << "\n";
  os << "trajectories " << s.n_traj << "  aborted " << s.aborted << " (" << s.abort_fraction * 100.0 << "%)\n";
  for (const auto& t : s.times) {
    os << "t = " << t.t << "  n = " << t.n_used << "\n";
    for (const auto& e : t.sectors)
      os << "  sector " << e.sector << ": empirical " << e.empirical << " +- " << e.std_error << "  theory "
         << e.theory << "  z " << e.z << "\n";
    for (const auto& hst : t.histograms)
      os << "  marginal " << hst.coordinate << ": TV " << hst.tv << "  (noise " << hst.noise << ")\n";
    if (t.flagged) os << "  flagged: TV above 3x the noise scale\n";
  }
  os << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace

RunContext RunContext::make(RunConfig config, const RunOptions& options) {
  if (options.seed) config.ensemble.seed = *options.seed;
  if (options.out_dir) config.output.dir = *options.out_dir;
  if (options.threads < 1) throw ConfigError({"--threads: must be at least 1"});
  RunContext ctx;
  ctx.hash = config_hash(config);
  ctx.config = std::move(config);
  ctx.threads = options.threads;
  ctx.quiet = options.quiet;
  return ctx;
}

std::vector<double> RunContext::analysis_times() const {
  if (!config.analysis.times.empty()) return config.analysis.times;
  return {t_max() / 2.0, t_max()};
}

std::vector<double> RunContext::compare_times() const {
  if (!config.analysis.t_compare.empty()) return config.analysis.t_compare;
  return {t_max() / 4.0, t_max() / 2.0, 3.0 * t_max() / 4.0};
}

EvolutionRecord run_evolution(const RunContext& ctx) {
  const auto& c = ctx.config;
  const HamiltonianOp h(c.params, c.lattice);
  EvolutionRecord rec = evolve(h, normalize(initial_state(c)), c.time.dt, c.time.t_max, c.time.snapshot_stride);
  rec.config_hash = ctx.hash;
  if (!ctx.quiet && rec.max_edge_band_norm > 1e-6)
    std::cerr << "warning: wavefunction reached the outer lattice edge (band norm " << fmt(rec.max_edge_band_norm)
              << "); enlarge the lattice\n";
  return rec;
}

Ensemble run_ensemble(const RunContext& ctx, const EvolutionRecord& record, const std::vector<double>& sample_times,
                      double rate_scale) {
  const auto& c = ctx.config;
  EnsembleOptions opt;
  opt.n_traj = c.ensemble.n_traj;
  opt.seed = c.ensemble.seed;
  opt.t0 = 0.0;
  opt.t_max = record.horizon();
  opt.sample_times = sample_times;
  opt.threads = ctx.threads;

  Ensemble ens;
  if (c.model == ModelKind::Model4Lattice) {
    const HamiltonianOp h(c.params, c.lattice);
    BellOptions bell;
    bell.node_threshold = c.ensemble.node_threshold;
    bell.rate_scale = rate_scale;
    ens = simulate_bell_ensemble(h, record, opt, bell);
  } else {
    auto dyn = make_dynamics(record, c.params, c.ensemble.node_threshold);
    dyn->set_rate_scale(rate_scale);
    opt.flow.step = c.ensemble.rk4_step > 0.0
                        ? c.ensemble.rk4_step
                        : default_rk4_step(dyn->hamiltonian(), record.snapshots.front(), record.snapshot_dt(),
                                           c.ensemble.node_threshold);
    const LatticeSampler sampler(record.snapshots.front());
    ens = simulate_ensemble(*dyn, [&](RandomStream& rng) { return sampler.sample(rng); }, opt);
    ens.rk4_step = opt.flow.step;
  }
  ens.config_hash = ctx.hash;
  return ens;
}

bool equivariance_pass(const EnsembleStats& stats) {
  if (stats.abort_fraction >= 0.005) return false;
  for (const auto& t : stats.times) {
    for (const auto& e : t.sectors)
      if (std::abs(e.z) > 4.0) return false;
    if (t.tv > std::max(0.05, 3.0 * t.tv_noise)) return false;
  }
  return true;
}

bool sweep_pass(const SweepTable& t) {
  return t.up_order >= 0.7 && t.up_order <= 1.3 && t.eps_down_limit > 0.0 && t.eps_down_last_change <= 0.2;
}

ProbeSpec sweep_probe(const RunConfig& config) {
  if (config.sweep.probe) return *config.sweep.probe;
  if (config.init.probe) return *config.init.probe;
  return ProbeSpec{};
}

std::vector<double> sweep_eps(const RunConfig& config) {
  if (!config.sweep.eps_list.empty()) return config.sweep.eps_list;
  const double e = config.lattice.eps;
  return {e, e / 2.0, e / 4.0, e / 8.0};
}

json trajectory_to_json(const Trajectory& tr) {
  json lines = json::array();
  for (const auto& e : tr.events) {
    json ev{{"traj", tr.id}, {"t", e.t}, {"kind", to_string(e.kind)}, {"sector", e.before.sector}};
    json coords = json::array();
    for (int d = 0; d < e.before.dim; ++d) coords.push_back(e.before.coords[d]);
    ev["coords"] = coords;
    if (e.kind != EventKind::FlowSample && e.kind != EventKind::NodeAbort) {
      const json to = config_point(e.after);
      ev["to_sector"] = to["sector"];
      ev["to_coords"] = to["coords"];
    }
    lines.push_back(std::move(ev));
  }
  return lines;
}

int cmd_evolve(const RunContext& ctx) {
  const HamiltonianOp h(ctx.config.params, ctx.config.lattice);
  const EvolutionRecord rec = run_evolution(ctx);
  write_record(ctx, h, rec);
  const double drift = std::abs(norm(rec.snapshots.back()) - 1.0);
  say(ctx, "evolved " + std::to_string(rec.snapshots.size()) + " snapshots to t = " + fmt(rec.horizon()) +
               ", norm drift " + fmt(drift));
  write_meta(ctx, "evolve", kPass);
  return kPass;
}

int cmd_sample(const RunContext& ctx) {
  const EvolutionRecord rec = run_evolution(ctx);
  const Ensemble ens = run_ensemble(ctx, rec, with_zero(ctx.analysis_times()));
  write_trajectories(ctx, ens, "trajectories.jsonl");
  say(ctx, "sampled " + std::to_string(ens.trajectories.size()) + " trajectories, " +
               std::to_string(ens.aborted()) + " aborted");
  write_meta(ctx, "sample", kPass);
  return kPass;
}

int cmd_equivariance(const RunContext& ctx) {
  const EvolutionRecord rec = run_evolution(ctx);
  const auto times = ctx.analysis_times();
  const Ensemble ens = run_ensemble(ctx, rec, times);
  const EnsembleStats stats = equivariance_report(rec, ens, times, ctx.config.analysis.bins);
  const bool pass = equivariance_pass(stats);
  const fs::path dir = out_dir(ctx);
  json report = stats_to_json(stats);
  report["pass"] = pass;
  report["config"] = config_to_json(ctx.config);
  write_text(dir / "report.json", report.dump(2) + "\n");
  const std::string text = stats_text(stats, pass);
  write_text(dir / "report.txt", text);
  if (wants(ctx, "csv")) write_text(dir / "histograms.csv", histograms_csv(stats));
  if (wants(ctx, "jsonl")) write_trajectories(ctx, ens, "trajectories.jsonl");
  if (!ctx.quiet) std::cout << text;
  const int status = pass ? kPass : kTestFailure;
  write_meta(ctx, "equivariance", status);
  return status;
}

int cmd_reverse(const RunContext& ctx) {
  const HamiltonianOp h(ctx.config.params, ctx.config.lattice);
  const EvolutionRecord fwd = run_evolution(ctx);
  const EvolutionRecord rev = evolve_reversed(h, fwd);
  const auto tc = ctx.compare_times();
  std::vector<double> fwd_times, rev_times;
  for (double t : tc) {
    fwd_times.push_back(fwd.horizon() - t);
    rev_times.push_back(t);
  }
  const Ensemble a = run_ensemble(ctx, fwd, fwd_times);
  RunContext rctx = ctx;
  rctx.config.ensemble.seed = ctx.seed() ^ kReverseSeedMix;
  Ensemble b = run_ensemble(rctx, rev, rev_times);
  b.config_hash = ctx.hash;
  const ReversalSummary s = time_reversal_report(fwd, a, b, tc, ctx.config.analysis.alpha);

  json report = reversal_to_json(s);
  report["config_hash"] = ctx.hash;
  report["seed"] = ctx.seed();
  report["reverse_seed"] = rctx.config.ensemble.seed;
  report["forward_counters"] = counters_to_json(a.totals);
  report["reverse_counters"] = counters_to_json(b.totals);
  report["config"] = config_to_json(ctx.config);
  const fs::path dir = out_dir(ctx);
  write_text(dir / "report.json", report.dump(2) + "\n");
  std::ostringstream os;
  os << "config_hash " << ctx.hash << "  seed " << ctx.seed() << "\n";
  for (const auto& t : s.tests)
    os << "  " << t.name << ": chi2 " << t.statistic << " (dof " << t.dof << ")  p " << t.p_value << "\n";
  os << "min p " << s.min_p << "  Bonferroni p " << s.corrected_p << "  alpha " << s.alpha << "\n";
  os << (s.pass ? "PASS" : "FAIL") << "\n";
  write_text(dir / "report.txt", os.str());
  if (!ctx.quiet) std::cout << os.str();
  const int status = s.pass ? kPass : kTestFailure;
  write_meta(ctx, "reverse", status);
  return status;
}

int cmd_rates(const RunContext& ctx) {
  const auto& c = ctx.config;
  const HamiltonianOp h(c.params, c.lattice);
  const EvolutionRecord rec = run_evolution(ctx);
  const BohmField field(h, c.ensemble.node_threshold);
  const auto& spec = c.lattice;
  std::ostringstream rates, vel;
  const std::string tag = "# config_hash=" + ctx.hash + " seed=" + std::to_string(ctx.seed()) + "\n";
  rates << tag;
  vel << tag << "t,sector,x,y,vx,vy\n";
  if (spec.is_model3())
    rates << "t,rate,emission_velocity\n";
  else
    rates << "t,x,rate\n";

  for (double t : with_zero(ctx.analysis_times())) {
    const SectoredWaveFunction psi = rec.interpolate(t);
    const auto view = PsiView::of(psi);
    const std::string ts = fmt(t);
    if (spec.is_model3()) {
      std::string r = "nan", v = "nan";
      try {
        r = fmt(field.jump_rate_model3_total(view));
        v = fmt(field.emission_velocity_model3(view));
      } catch (const NodeProximityError&) {
      }
      rates << ts << "," << r << "," << v << "\n";
    } else {
      for (int i = 0; i < spec.nx; ++i) {
        std::string r = "nan";
        try {
          r = fmt(field.jump_rate_model4(view, spec.x_of(i)));
        } catch (const NodeProximityError&) {
        }
        rates << ts << "," << fmt(spec.x_of(i)) << "," << r << "\n";
      }
    }
    for (std::size_t k = 0; k < psi.size(); ++k) {
      const Configuration q = site_configuration(spec, k);
      if (q.dim == 0) continue;
      std::string vx = "nan", vy = "nan";
      try {
        const auto v = field.velocity(view, q);
        vx = fmt(v[0]);
        vy = q.dim > 1 ? fmt(v[1]) : "";
      } catch (const NodeProximityError&) {
      }
      vel << ts << "," << q.sector << "," << fmt(q.coords[0]) << "," << (q.dim > 1 ? fmt(q.coords[1]) : "") << ","
          << vx << "," << vy << "\n";
    }
  }
  const fs::path dir = out_dir(ctx);
  write_text(dir / "rates.csv", rates.str());
  write_text(dir / "velocity.csv", vel.str());
  say(ctx, "wrote rates.csv and velocity.csv");
  write_meta(ctx, "rates", kPass);
  return kPass;
}

int cmd_lattice_limit(const RunContext& ctx) {
  const auto& c = ctx.config;
  if (c.model == ModelKind::Model3Radial)
    throw ConfigError({"lattice-limit: the continuum sweep is defined for Model 4 only"});
  const SweepTable t = continuum_limit_sweep(c.params, sweep_eps(c), sweep_probe(c));
  const bool pass = sweep_pass(t);
  std::ostringstream csv;
  csv << "# config_hash=" << ctx.hash << " seed=" << ctx.seed() << " continuum_rate=" << fmt(t.continuum_rate)
      << " eps_down_limit=" << fmt(t.eps_down_limit) << " up_order=" << fmt(t.up_order)
      << " down_order=" << fmt(t.down_order) << " eps_down_last_change=" << fmt(t.eps_down_last_change) << "\n";
  csv << "eps,up_rate,up_err,down_rate,eps_times_down\n";
  for (const auto& r : t.rows)
    csv << fmt(r.eps) << "," << fmt(r.up_rate) << "," << fmt(r.up_err) << "," << fmt(r.down_rate) << ","
        << fmt(r.eps_times_down) << "\n";
  write_text(out_dir(ctx) / "convergence.csv", csv.str());
  std::ostringstream os;
  os << "continuum rate " << t.continuum_rate << "  up-rate order " << t.up_order << "  eps*down change "
     << t.eps_down_last_change << "\n"
     << (pass ? "PASS" : "FAIL") << "\n";
  if (!ctx.quiet) std::cout << os.str();
  const int status = pass ? kPass : kTestFailure;
  write_meta(ctx, "lattice-limit", status);
  return status;
}

}  // namespace ibc
