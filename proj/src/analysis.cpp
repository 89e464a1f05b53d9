#include "ibcsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ibcsim/bohm.hpp"
#include "ibcsim/errors.hpp"
#include "ibcsim/stats.hpp"

namespace ibc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Lattice cells along one coordinate.
struct AxisCells {
  std::vector<double> lo, hi;
  std::size_t size() const { return lo.size(); }
};

AxisCells x_cells(const LatticeSpec& spec) {
  AxisCells c;
  for (int i = 0; i < spec.nx; ++i) {
    c.lo.push_back(spec.x_of(i) - 0.5 * spec.eps);
    c.hi.push_back(spec.x_of(i) + 0.5 * spec.eps);
  }
  return c;
}

// Rows j = 1..ny; the first row's cell reaches down to the boundary.
AxisCells normal_cells(const LatticeSpec& spec) {
  AxisCells c;
  for (int j = 1; j <= spec.ny; ++j) {
    c.lo.push_back(j == 1 ? 0.0 : (j - 0.5) * spec.eps);
    c.hi.push_back((j + 0.5) * spec.eps);
  }
  return c;
}

int x_cell(const LatticeSpec& spec, double x) {
  const long i = std::lround((x - spec.x_origin()) / spec.eps);
  return static_cast<int>(std::clamp<long>(i, 0, spec.nx - 1));
}

int normal_cell(const LatticeSpec& spec, double y) {
  const long j = std::lround(y / spec.eps);
  return static_cast<int>(std::clamp<long>(j, 1, spec.ny)) - 1;
}

struct Binning {
  std::vector<int> cell_bin;
  std::vector<double> lo, hi;
  int size() const { return static_cast<int>(lo.size()); }
};

// `bins` bins over the cells holding the central 99.9% of `mass`, with
// under- and overflow bins for the remaining cells.
Binning make_binning(const std::vector<double>& mass, const AxisCells& cells, int bins) {
  Binning b;
  const std::size_t n = cells.size();
  b.cell_bin.assign(n, 0);
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 1e-14) || n == 0) {
    b.lo.push_back(cells.lo.front());
    b.hi.push_back(cells.hi.back());
    return b;
  }
  std::size_t c_lo = 0, c_hi = n - 1;
  double acc = 0.0;
  bool have_lo = false;
  for (std::size_t c = 0; c < n; ++c) {
    acc += mass[c];
    if (!have_lo && acc > 0.0005 * total) {
      c_lo = c;
      have_lo = true;
    }
    if (acc >= 0.9995 * total) {
      c_hi = c;
      break;
    }
  }
  const std::size_t span = c_hi - c_lo + 1;
  const std::size_t per = (span + static_cast<std::size_t>(bins) - 1) / static_cast<std::size_t>(bins);
  if (c_lo > 0) {
    b.lo.push_back(cells.lo.front());
    b.hi.push_back(cells.hi[c_lo - 1]);
    for (std::size_t c = 0; c < c_lo; ++c) b.cell_bin[c] = 0;
  }
  std::size_t c = c_lo;
  while (c <= c_hi) {
    const std::size_t end = std::min(n - 1, c + per - 1);
    const int id = b.size();
    b.lo.push_back(cells.lo[c]);
    b.hi.push_back(cells.hi[end]);
    for (std::size_t k = c; k <= end; ++k) b.cell_bin[k] = id;
    c = end + 1;
  }
  if (c < n) {
    const int id = b.size();
    b.lo.push_back(cells.lo[c]);
    b.hi.push_back(cells.hi.back());
    for (std::size_t k = c; k < n; ++k) b.cell_bin[k] = id;
  }
  return b;
}

// Per-cell |psi|^2 masses of a snapshot, normalized to total 1.
struct CellMasses {
  double whole_lower = 0.0;           // Model 3 sector 0
  std::vector<double> lower_x;        // Model 4 sector 1 along x
  std::vector<double> upper_x, upper_y;  // Model 4 sector 2 marginals
  std::vector<double> upper_xy;       // Model 4 sector 2, index (j-1) nx + i
  std::vector<double> radial;         // Model 3 sector 1
  double p_lower = 0.0, p_upper = 0.0;
};

CellMasses cell_masses(const SectoredWaveFunction& psi) {
  const auto& spec = psi.spec();
  const double total = norm_squared(psi);
  CellMasses m;
  const double e = spec.eps;
  if (spec.is_model3()) {
    m.whole_lower = std::norm(psi.empty()) / total;
    m.radial.resize(static_cast<std::size_t>(spec.ny));
    for (int k = 1; k <= spec.ny; ++k) m.radial[k - 1] = e * std::norm(psi.radial(k)) / total;
    m.p_lower = m.whole_lower;
    m.p_upper = std::accumulate(m.radial.begin(), m.radial.end(), 0.0);
    return m;
  }
  const auto nx = static_cast<std::size_t>(spec.nx);
  m.lower_x.resize(nx);
  m.upper_x.assign(nx, 0.0);
  m.upper_y.assign(static_cast<std::size_t>(spec.ny), 0.0);
  m.upper_xy.resize(nx * spec.ny);
  for (int i = 0; i < spec.nx; ++i) m.lower_x[i] = e * std::norm(psi.lower(i)) / total;
  for (int j = 1; j <= spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const double v = e * e * std::norm(psi.upper(i, j)) / total;
      m.upper_x[i] += v;
      m.upper_y[j - 1] += v;
      m.upper_xy[(j - 1) * nx + i] = v;
    }
  m.p_lower = std::accumulate(m.lower_x.begin(), m.lower_x.end(), 0.0);
  m.p_upper = std::accumulate(m.upper_x.begin(), m.upper_x.end(), 0.0);
  return m;
}

std::vector<Configuration> configurations_at(const Ensemble& ens, double t) {
  std::vector<Configuration> out;
  out.reserve(ens.trajectories.size());
  for (const auto& tr : ens.trajectories) {
    if (tr.aborted) continue;
    const auto q = tr.sample_at(t);
    if (!q) throw HorizonError("trajectory has no sample at the requested time");
    out.push_back(*q);
  }
  return out;
}

void append_bins(MarginalHistogram& h, int sector, const Binning& b, const std::vector<double>& mass) {
  const std::size_t base = h.theory.size();
  for (int k = 0; k < b.size(); ++k) {
    h.sector.push_back(sector);
    h.lo.push_back(b.lo[k]);
    h.hi.push_back(b.hi[k]);
    h.theory.push_back(0.0);
    h.empirical.push_back(0.0);
  }
  for (std::size_t c = 0; c < mass.size(); ++c) h.theory[base + b.cell_bin[c]] += mass[c];
}

void append_whole(MarginalHistogram& h, int sector, double mass) {
  h.sector.push_back(sector);
  h.lo.push_back(kNaN);
  h.hi.push_back(kNaN);
  h.theory.push_back(mass);
  h.empirical.push_back(0.0);
}

void finish_histogram(MarginalHistogram& h, std::size_t n) {
  double tv = 0.0;
  for (std::size_t k = 0; k < h.theory.size(); ++k) {
    h.empirical[k] /= static_cast<double>(std::max<std::size_t>(n, 1));
    tv += std::abs(h.empirical[k] - h.theory[k]);
  }
  h.tv = 0.5 * tv;
  h.noise = std::sqrt(static_cast<double>(h.theory.size()) / (2.0 * std::numbers::pi * std::max<std::size_t>(n, 1)));
}

void check_hash(const EvolutionRecord& record, const Ensemble& ens) {
  if (!record.config_hash.empty() && !ens.config_hash.empty() && record.config_hash != ens.config_hash)
    throw MismatchedRecordError("ensemble was generated from a different configuration");
}

}  // namespace

double EnsembleStats::max_abs_z(int sector) const {
  double z = 0.0;
  for (const auto& t : times)
    for (const auto& s : t.sectors)
      if (s.sector == sector) z = std::max(z, std::abs(s.z));
  return z;
}

double EnsembleStats::max_tv() const {
  double tv = 0.0;
  for (const auto& t : times) tv = std::max(tv, t.tv);
  return tv;
}

EnsembleStats equivariance_report(const EvolutionRecord& record, const Ensemble& ensemble,
                                  const std::vector<double>& times, int bins) {
  check_hash(record, ensemble);
  if (bins < 1) throw DomainError("bins must be positive");
  EnsembleStats stats;
  stats.n_traj = ensemble.trajectories.size();
  stats.aborted = ensemble.aborted();
  stats.abort_fraction = stats.n_traj ? static_cast<double>(stats.aborted) / stats.n_traj : 0.0;
  stats.diagnostics = ensemble.totals;
  stats.config_hash = ensemble.config_hash;
  stats.seed = ensemble.seed;
  const auto& spec = record.spec();

  for (double t : times) {
    record.locate(t);  // horizon check
    const SectoredWaveFunction psi = record.interpolate(t);
    const CellMasses m = cell_masses(psi);
    const auto qs = configurations_at(ensemble, t);
    const std::size_t n = qs.size();
    TimeStats ts;
    ts.t = t;
    ts.n_used = n;

    const int lower = spec.is_model3() ? 0 : 1;
    const int upper = spec.is_model3() ? 1 : 2;
    double n_lower = 0.0;
    for (const auto& q : qs) n_lower += q.sector == lower ? 1.0 : 0.0;
    for (int s : {lower, upper}) {
      SectorEstimate e;
      e.sector = s;
      e.theory = s == lower ? m.p_lower : m.p_upper;
      e.empirical = n ? (s == lower ? n_lower : n - n_lower) / n : 0.0;
      e.std_error = n ? std::sqrt(e.empirical * (1.0 - e.empirical) / n) : 0.0;
      const double se = n ? std::sqrt(e.theory * (1.0 - e.theory) / n) : 0.0;
      const double diff = e.empirical - e.theory;
      e.z = se > 0.0 ? diff / se : (std::abs(diff) < 1e-12 ? 0.0 : std::copysign(1e300, diff));
      ts.sectors.push_back(e);
    }

    if (spec.is_model3()) {
      MarginalHistogram hr;
      hr.coordinate = "r";
      const AxisCells rc = normal_cells(spec);
      const Binning br = make_binning(m.radial, rc, bins);
      append_whole(hr, 0, m.whole_lower);
      append_bins(hr, 1, br, m.radial);
      for (const auto& q : qs) {
        if (q.sector == 0)
          hr.empirical[0] += 1.0;
        else
          hr.empirical[1 + br.cell_bin[normal_cell(spec, q.coords[0])]] += 1.0;
      }
      finish_histogram(hr, n);
      ts.histograms.push_back(std::move(hr));
    } else {
      const AxisCells xc = x_cells(spec);
      const AxisCells yc = normal_cells(spec);
      const Binning b1 = make_binning(m.lower_x, xc, bins);
      const Binning b2x = make_binning(m.upper_x, xc, bins);
      const Binning b2y = make_binning(m.upper_y, yc, bins);

      MarginalHistogram hx;
      hx.coordinate = "x";
      append_bins(hx, 1, b1, m.lower_x);
      append_bins(hx, 2, b2x, m.upper_x);
      MarginalHistogram hy;
      hy.coordinate = "y";
      append_whole(hy, 1, m.p_lower);
      append_bins(hy, 2, b2y, m.upper_y);
      for (const auto& q : qs) {
        const int xi = x_cell(spec, q.coords[0]);
        if (q.sector == 1) {
          hx.empirical[b1.cell_bin[xi]] += 1.0;
          hy.empirical[0] += 1.0;
        } else {
          hx.empirical[b1.size() + b2x.cell_bin[xi]] += 1.0;
          hy.empirical[1 + b2y.cell_bin[normal_cell(spec, q.coords[1])]] += 1.0;
        }
      }
      finish_histogram(hx, n);
      finish_histogram(hy, n);
      ts.histograms.push_back(std::move(hx));
      ts.histograms.push_back(std::move(hy));
    }
    for (const auto& h : ts.histograms) {
      if (h.tv >= ts.tv) {
        ts.tv = h.tv;
        ts.tv_noise = h.noise;
      }
    }
    ts.flagged = ts.tv > 3.0 * ts.tv_noise;
    stats.times.push_back(std::move(ts));
  }
  return stats;
}

namespace {

// Joint (sector, position-bin) category counts for the reversal test.
std::vector<double> joint_counts(const LatticeSpec& spec, const CellMasses& m, const std::vector<Configuration>& qs) {
  constexpr int kBins = 8;
  if (spec.is_model3()) {
    const Binning br = make_binning(m.radial, normal_cells(spec), 2 * kBins);
    std::vector<double> counts(1 + br.size(), 0.0);
    for (const auto& q : qs) {
      if (q.sector == 0)
        counts[0] += 1.0;
      else
        counts[1 + br.cell_bin[normal_cell(spec, q.coords[0])]] += 1.0;
    }
    return counts;
  }
  const AxisCells xc = x_cells(spec);
  const Binning b1 = make_binning(m.lower_x, xc, kBins);
  const Binning b2x = make_binning(m.upper_x, xc, kBins);
  const Binning b2y = make_binning(m.upper_y, normal_cells(spec), kBins);
  std::vector<double> counts(b1.size() + b2x.size() * b2y.size(), 0.0);
  for (const auto& q : qs) {
    const int xi = x_cell(spec, q.coords[0]);
    if (q.sector == 1)
      counts[b1.cell_bin[xi]] += 1.0;
    else
      counts[b1.size() + b2x.cell_bin[xi] * b2y.size() + b2y.cell_bin[normal_cell(spec, q.coords[1])]] += 1.0;
  }
  return counts;
}

std::vector<double> jump_count_histogram(const Ensemble& ens, EventKind kind) {
  std::vector<double> h(5, 0.0);
  for (const auto& tr : ens.trajectories) {
    if (tr.aborted) continue;
    h[std::min<std::size_t>(tr.count(kind), 4)] += 1.0;
  }
  return h;
}

}  // namespace

ReversalSummary time_reversal_report(const EvolutionRecord& forward_record, const Ensemble& forward,
                                     const Ensemble& reverse, const std::vector<double>& t_compare, double alpha) {
  check_hash(forward_record, forward);
  check_hash(forward_record, reverse);
  if (!forward.config_hash.empty() && forward.config_hash != reverse.config_hash)
    throw MismatchedRecordError("forward and reverse ensembles come from different configurations");
  ReversalSummary out;
  out.alpha = alpha;
  const double horizon = forward_record.horizon();
  const auto& spec = forward_record.spec();
  for (double tc : t_compare) {
    const double tf = horizon - tc;
    const CellMasses m = cell_masses(forward_record.interpolate(tf));
    const auto a = joint_counts(spec, m, configurations_at(forward, tf));
    const auto b = joint_counts(spec, m, configurations_at(reverse, tc));
    const ChiSquareResult r = two_sample_chi_square(a, b);
    std::ostringstream name;
    name << "occupancy t=" << tc;
    out.tests.push_back({name.str(), tf, tc, r.statistic, r.dof, r.p_value});
  }
  {
    const auto r = two_sample_chi_square(jump_count_histogram(forward, EventKind::JumpUp),
                                         jump_count_histogram(reverse, EventKind::JumpDown));
    out.tests.push_back({"creations vs reversed absorptions", 0.0, horizon, r.statistic, r.dof, r.p_value});
  }
  {
    const auto r = two_sample_chi_square(jump_count_histogram(forward, EventKind::JumpDown),
                                         jump_count_histogram(reverse, EventKind::JumpUp));
    out.tests.push_back({"absorptions vs reversed creations", 0.0, horizon, r.statistic, r.dof, r.p_value});
  }
  for (const auto& t : out.tests) out.min_p = std::min(out.min_p, t.p_value);
  out.corrected_p = std::min(1.0, out.min_p * static_cast<double>(out.tests.size()));
  out.pass = out.corrected_p > alpha;
  return out;
}

ReversibilityCheck reversibility_identity_check(const HamiltonianOp& h, const SectoredWaveFunction& psi) {
  const BohmField field(h, 0.0);
  const SectoredWaveFunction rev = time_conjugate(h, psi);
  const auto view = PsiView::of(psi);
  const auto rview = PsiView::of(rev);
  const auto& spec = h.spec();
  const double hm = h.params().hbar / h.params().mass;
  ReversibilityCheck out;
  auto accumulate = [&](double rho_lower, double sigma, const FieldSample& s, int axis, cplx b0, cplx b1) {
    const double lhs = rho_lower * sigma;
    const double rhs = s.density * std::max(0.0, -s.velocity[axis]);
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs));
    out.scale = std::max(out.scale, hm * std::abs(b0) * std::abs(b1 - b0) / spec.eps);
    ++out.sites;
  };
  if (spec.is_model3()) {
    try {
      const double sigma = field.jump_rate_model3_total(view);
      const FieldSample s = field.sample(rview, Configuration::line(1, 0.0));
      const cplx w0 = h.eliminated_boundary_value(psi, 0);
      accumulate(std::norm(psi.empty()), sigma, s, 0, w0, psi.radial(1));
    } catch (const NodeProximityError&) {
    }
    return out;
  }
  for (int i = 0; i < spec.nx; ++i) {
    const double x = spec.x_of(i);
    try {
      const double sigma = field.jump_rate_model4(view, x);
      const FieldSample s = field.sample(rview, Configuration::plane(2, x, 0.0));
      accumulate(std::norm(psi.lower(i)), sigma, s, 1, h.eliminated_boundary_value(psi, i), psi.upper(i, 1));
    } catch (const NodeProximityError&) {
    }
  }
  return out;
}

RadialFlatness radial_flatness(const EvolutionRecord& record, const Ensemble& ensemble, double t, int n_bins,
                               int cells_per_bin) {
  return radial_flatness(record, ensemble, std::vector<double>{t}, n_bins, cells_per_bin);
}

RadialFlatness radial_flatness(const EvolutionRecord& record, const Ensemble& ensemble,
                               const std::vector<double>& times, int n_bins, int cells_per_bin) {
  check_hash(record, ensemble);
  const auto& spec = record.spec();
  if (!spec.is_model3()) throw ModelMismatchError("radial flatness needs a Model 3 record");
  if (n_bins < 1 || cells_per_bin < 1 || n_bins * cells_per_bin > spec.ny)
    throw DomainError("radial flatness bins exceed the lattice");
  if (times.empty()) throw DomainError("radial flatness needs at least one time");
  const AxisCells rc = normal_cells(spec);
  RadialFlatness out;
  for (int b = 0; b < n_bins; ++b) {
    out.bin_lo.push_back(rc.lo[b * cells_per_bin]);
    out.bin_hi.push_back(rc.hi[(b + 1) * cells_per_bin - 1]);
  }
  // expected and observed counts, summed over the sample times
  std::vector<double> emp(static_cast<std::size_t>(n_bins), 0.0), theory(static_cast<std::size_t>(n_bins), 0.0);
  for (double t : times) {
    const CellMasses m = cell_masses(record.interpolate(t));
    const auto qs = configurations_at(ensemble, t);
    const double n = static_cast<double>(qs.size());
    for (int b = 0; b < n_bins; ++b)
      for (int c = b * cells_per_bin; c < (b + 1) * cells_per_bin; ++c) theory[b] += n * m.radial[c];
    for (const auto& q : qs) {
      if (q.sector != 1) continue;
      const int b = normal_cell(spec, q.coords[0]) / cells_per_bin;
      if (b < n_bins) emp[b] += 1.0;
    }
  }
  double mean = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    out.ratio.push_back(theory[b] > 0.0 ? emp[b] / theory[b] : kNaN);
    mean += out.ratio.back();
  }
  mean /= n_bins;
  for (double r : out.ratio) out.max_deviation = std::max(out.max_deviation, std::abs(r / mean - 1.0));
  return out;
}

nlohmann::json stats_to_json(const EnsembleStats& stats) {
  nlohmann::json j;
  j["config_hash"] = stats.config_hash;
  j["seed"] = stats.seed;
  j["n_traj"] = stats.n_traj;
  j["aborted"] = stats.aborted;
  j["abort_fraction"] = stats.abort_fraction;
  j["diagnostics"] = {{"node_aborts", stats.diagnostics.node_aborts},
                      {"majorant_violations", stats.diagnostics.majorant_violations},
                      {"edge_excursions", stats.diagnostics.edge_excursions},
                      {"boundary_hits", stats.diagnostics.boundary_hits},
                      {"stochastic_jumps", stats.diagnostics.stochastic_jumps}};
  auto& arr = j["times"] = nlohmann::json::array();
  for (const auto& t : stats.times) {
    nlohmann::json jt;
    jt["t"] = t.t;
    jt["n_used"] = t.n_used;
    jt["tv"] = t.tv;
    jt["tv_noise"] = t.tv_noise;
    jt["flagged"] = t.flagged;
    for (const auto& s : t.sectors)
      jt["sectors"].push_back({{"sector", s.sector},
                               {"empirical", s.empirical},
                               {"std_error", s.std_error},
                               {"theory", s.theory},
                               {"z", s.z}});
    for (const auto& h : t.histograms) jt["marginal_tv"][h.coordinate] = h.tv;
    arr.push_back(jt);
  }
  return j;
}

nlohmann::json reversal_to_json(const ReversalSummary& summary) {
  nlohmann::json j;
  j["alpha"] = summary.alpha;
  j["min_p"] = summary.min_p;
  j["corrected_p"] = summary.corrected_p;
  j["pass"] = summary.pass;
  for (const auto& t : summary.tests)
    j["tests"].push_back({{"name", t.name},
                          {"t_forward", t.t_forward},
                          {"t_reverse", t.t_reverse},
                          {"statistic", t.statistic},
                          {"dof", t.dof},
                          {"p_value", t.p_value}});
  return j;
}

std::string histograms_csv(const EnsembleStats& stats) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "t,sector,coordinate,bin_lo,bin_hi,emp,theory\n";
  for (const auto& t : stats.times)
    for (const auto& h : t.histograms)
      for (std::size_t k = 0; k < h.theory.size(); ++k) {
        os << t.t << ',' << h.sector[k] << ',' << h.coordinate << ',';
        if (std::isnan(h.lo[k]))
          os << ",";
        else
          os << h.lo[k] << ',' << h.hi[k];
        os << ',' << h.empirical[k] << ',' << h.theory[k] << '\n';
      }
  return os.str();
}

}  // namespace ibc
