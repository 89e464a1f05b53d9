#include "ibcsim/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ibcsim/errors.hpp"

namespace ibc {

namespace {

double gauss(double u, double c, double w) {
  const double d = (u - c) / w;
  return std::exp(-0.5 * d * d);
}

}  // namespace

SectoredWaveFunction build_wavepacket(const LatticeSpec& spec, const std::vector<GaussianPacket>& packets) {
  spec.validate();
  double total_weight = 0.0;
  for (const auto& p : packets) {
    if (p.weight < 0.0) throw DomainError("packet weight must be non-negative");
    total_weight += p.weight;
  }
  if (!(total_weight > 0.0)) throw DegenerateInputError("wavepacket weights sum to zero");

  SectoredWaveFunction psi(spec);
  for (const auto& p : packets) {
    if (p.weight == 0.0) continue;
    if (!psi.has_sector(p.sector)) throw DomainError("packet refers to an unknown sector");
    SectoredWaveFunction part(spec);
    const auto& layout = psi.sector(p.sector);
    if (spec.is_model3()) {
      if (p.sector == 0) {
        part[0] = 1.0;
      } else {
        for (int k = 1; k <= spec.ny; ++k) {
          const double r = k * spec.eps;
          part[part.radial_index(k)] = gauss(r, p.center[0], p.width[0]) * std::polar(1.0, p.momentum[0] * r);
        }
      }
    } else if (p.sector == 1) {
      for (int i = 0; i < spec.nx; ++i) {
        const double x = spec.x_of(i);
        part[part.lower_index(i)] = gauss(x, p.center[0], p.width[0]) * std::polar(1.0, p.momentum[0] * x);
      }
    } else {
      for (int j = 1; j <= spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
          const double x = spec.x_of(i);
          const double y = j * spec.eps;
          part[part.upper_index(i, j)] = gauss(x, p.center[0], p.width[0]) * gauss(y, p.center[1], p.width[1]) *
                                         std::polar(1.0, p.momentum[0] * x + p.momentum[1] * y);
        }
    }
    double n2 = 0.0;
    for (std::size_t k = layout.offset; k < layout.offset + layout.size; ++k) n2 += layout.weight * std::norm(part[k]);
    if (!(n2 > 0.0)) throw DegenerateInputError("packet has no support on the lattice");
    part *= std::sqrt(p.weight / total_weight / n2);
    psi += part;
  }
  return normalize(psi);
}

double probe_lower_scale(const ModelParams& params, const LatticeSpec& spec) {
  const double g = spec.is_model3() ? params.g / std::sqrt(4.0 * std::numbers::pi) : params.g;
  if (g == 0.0) throw ProbeSpecError("the probe family needs g != 0");
  return -(params.hbar * params.hbar) / (2.0 * params.mass * g);
}

SectoredWaveFunction build_probe(const ModelParams& params, const LatticeSpec& spec, const ProbeSpec& probe) {
  spec.validate();
  if (params.robin) throw ProbeSpecError("the probe family satisfies the Dirichlet boundary condition only");
  const double c = probe_lower_scale(params, spec);
  if (probe.a == 0.0) throw ProbeSpecError("probe needs a != 0 so that the lower amplitude is nonzero");
  if (!(probe.width[0] > 0.0) || (!spec.is_model3() && !(probe.width[1] > 0.0)))
    throw ProbeSpecError("probe widths must be positive");
  if (probe.lower_scale && std::abs(*probe.lower_scale - c) > 1e-10 * std::abs(c))
    throw ProbeSpecError("probe lower amplitude violates the boundary condition");

  SectoredWaveFunction psi(spec);
  if (spec.is_model3()) {
    const double r0 = probe.center[0];
    const double s = probe.width[0];
    psi[0] = c * probe.a * gauss(0.0, r0, s);
    for (int k = 1; k <= spec.ny; ++k) {
      const double r = k * spec.eps;
      psi[psi.radial_index(k)] = cplx(probe.a, probe.b * r) * gauss(r, r0, s);
    }
    return psi;
  }
  const auto [x0, y0] = probe.center;
  const auto [sx, sy] = probe.width;
  for (int i = 0; i < spec.nx; ++i) {
    const double x = spec.x_of(i);
    const double gx = gauss(x, x0, sx);
    psi[psi.lower_index(i)] = c * probe.a * gx * gauss(0.0, y0, sy);
    for (int j = 1; j <= spec.ny; ++j) {
      const double y = j * spec.eps;
      psi[psi.upper_index(i, j)] = cplx(probe.a, probe.b * y) * gx * gauss(y, y0, sy);
    }
  }
  return psi;
}

double default_rk4_step(const HamiltonianOp& h, const SectoredWaveFunction& psi, double cap, double node_threshold) {
  const BohmField field(h, node_threshold * norm_squared(psi));
  const auto view = PsiView::of(psi);
  std::vector<std::pair<double, double>> speeds;  // (speed, mass)
  double total = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double mass = psi.weight_of(k) * std::norm(psi[k]);
    if (mass <= 0.0) continue;
    const Configuration q = site_configuration(psi.spec(), k);
    if (q.dim == 0) continue;
    try {
      const auto v = field.velocity(view, q);
      speeds.emplace_back(std::hypot(v[0], v[1]), mass);
      total += mass;
    } catch (const NodeProximityError&) {
    }
  }
  std::sort(speeds.begin(), speeds.end());
  double v_typ = 0.0;
  double acc = 0.0;
  for (const auto& [v, m] : speeds) {
    acc += m;
    v_typ = v;
    if (acc >= 0.99 * total) break;
  }
  if (!(v_typ > 0.0)) return cap;
  return std::min(cap, psi.spec().eps / (2.0 * v_typ));
}

// ---------------------------------------------------------------------------

RecordDynamics::RecordDynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold)
    : record_(&record), h_(params, record.spec()), field_(h_, node_threshold) {
  if (record.snapshots.empty()) throw HorizonError("empty evolution record");
}

PsiView RecordDynamics::view_at(double t) const {
  const auto [k, f] = record_->locate(t);
  if (f == 0.0 || record_->snapshots.size() == 1) return PsiView::of(record_->snapshots[k]);
  if (f == 1.0) return PsiView::of(record_->snapshots[k + 1]);
  return PsiView::between(record_->snapshots[k], record_->snapshots[k + 1], f);
}

double RecordDynamics::next_rate_break(double t) const {
  const double t0 = record_->snapshots.front().time();
  const double d = record_->snapshot_dt();
  if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
  const double k = std::floor((t - t0) / d * (1.0 + 1e-12) + 1e-9) + 1.0;
  return t0 + k * d;
}

// ---------------------------------------------------------------------------

Model4Dynamics::Model4Dynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold)
    : RecordDynamics(record, params, node_threshold) {
  if (record.spec().is_model3()) throw ModelMismatchError("Model 4 dynamics needs a Model 4 record");
  const auto& spec = record.spec();
  site_rates_.reserve(record.snapshots.size());
  for (const auto& snap : record.snapshots) {
    std::vector<double> rates(static_cast<std::size_t>(spec.nx), 0.0);
    double mx = 0.0;
    for (int i = 0; i < spec.nx; ++i) {
      try {
        rates[static_cast<std::size_t>(i)] = field_.jump_rate_model4(PsiView::of(snap), spec.x_of(i));
      } catch (const NodeProximityError&) {
      }
      mx = std::max(mx, rates[static_cast<std::size_t>(i)]);
    }
    max_rates_.push_back(mx);
    site_rates_.push_back(std::move(rates));
  }
}

std::array<double, 2> Model4Dynamics::velocity(double t, const Configuration& q) const {
  return field_.velocity(view_at(t), q);
}

double Model4Dynamics::boundary_distance(const Configuration& q) const {
  return q.sector == 2 ? q.coords[1] : std::numeric_limits<double>::infinity();
}

Configuration Model4Dynamics::project_to_boundary(const Configuration& q) const {
  Configuration r = q;
  if (r.sector == 2) r.coords[1] = 0.0;
  return r;
}

Configuration Model4Dynamics::boundary_map(const Configuration& q) const {
  if (q.sector != 2) throw DomainError("boundary map applies to sector 2 only");
  return Configuration::line(1, q.coords[0]);
}

double Model4Dynamics::upward_rate(double t, const Configuration& q) const {
  if (q.sector != 1) return 0.0;
  return field_.jump_rate_model4(view_at(t), q.coords[0]);
}

double Model4Dynamics::rate_majorant(double t0, double t1, const Configuration& q) const {
  if (q.sector != 1) return 0.0;
  const auto& spec = record_->spec();
  const auto [k, f] = record_->locate(t0);
  (void)f;
  const std::size_t k1 = std::min(k + 1, site_rates_.size() - 1);
  // reach of the sector-1 flow over the window, in sites
  int reach = spec.nx;
  try {
    const double v = std::abs(velocity(t0, q)[0]);
    reach = std::min(spec.nx, 2 + static_cast<int>(std::ceil(2.0 * v * (t1 - t0) / spec.eps)));
  } catch (const NodeProximityError&) {
  }
  const int ic = static_cast<int>(std::lround((q.coords[0] - spec.x_origin()) / spec.eps));
  double mx = 0.0;
  for (int d = -reach; d <= reach; ++d) {
    int i = (ic + d) % spec.nx;
    if (i < 0) i += spec.nx;
    mx = std::max({mx, site_rates_[k][static_cast<std::size_t>(i)], site_rates_[k1][static_cast<std::size_t>(i)]});
  }
  return 2.0 * mx + 0.01 * std::max(max_rates_[k], max_rates_[k1]);
}

Configuration Model4Dynamics::arrival_config(double t, const Configuration& q, double u) const {
  (void)t;
  (void)u;
  return Configuration::plane(2, q.coords[0], 0.0);
}

void Model4Dynamics::normalize_position(Configuration& q) const {
  const auto& spec = record_->spec();
  const double lo = spec.x_origin() - 0.5 * spec.eps;
  const double len = spec.ring_length();
  double x = std::fmod(q.coords[0] - lo, len);
  if (x < 0.0) x += len;
  q.coords[0] = lo + x;
}

bool Model4Dynamics::in_edge_band(const Configuration& q) const {
  return q.sector == 2 && q.coords[1] >= (record_->spec().ny - 2) * record_->spec().eps;
}

// ---------------------------------------------------------------------------

Model3Dynamics::Model3Dynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold)
    : RecordDynamics(record, params, node_threshold) {
  if (!record.spec().is_model3()) throw ModelMismatchError("Model 3 dynamics needs a Model 3 record");
  for (const auto& snap : record.snapshots) {
    double r = 0.0;
    try {
      r = field_.jump_rate_model3_total(PsiView::of(snap));
    } catch (const NodeProximityError&) {
    }
    rates_.push_back(r);
  }
}

std::array<double, 2> Model3Dynamics::velocity(double t, const Configuration& q) const {
  if (q.sector == 0) return {0.0, 0.0};
  return field_.velocity(view_at(t), q);
}

double Model3Dynamics::boundary_distance(const Configuration& q) const {
  return q.sector == 1 ? q.coords[0] : std::numeric_limits<double>::infinity();
}

Configuration Model3Dynamics::project_to_boundary(const Configuration& q) const {
  Configuration r = q;
  if (r.sector == 1) r.coords[0] = 0.0;
  return r;
}

Configuration Model3Dynamics::boundary_map(const Configuration& q) const {
  if (q.sector != 1) throw DomainError("boundary map applies to the radial sector only");
  return Configuration::empty_config();
}

double Model3Dynamics::upward_rate(double t, const Configuration& q) const {
  if (q.sector != 0) return 0.0;
  return field_.jump_rate_model3_total(view_at(t));
}

double Model3Dynamics::rate_majorant(double t0, double t1, const Configuration& q) const {
  (void)t1;
  if (q.sector != 0) return 0.0;
  const auto [k, f] = record_->locate(t0);
  (void)f;
  const std::size_t k1 = std::min(k + 1, rates_.size() - 1);
  const double mx = std::max(rates_[k], rates_[k1]);
  return 2.0 * mx;
}

Configuration Model3Dynamics::arrival_config(double t, const Configuration& q, double u) const {
  (void)t;
  (void)q;
  (void)u;
  return Configuration::line(1, 0.0);
}

bool Model3Dynamics::in_edge_band(const Configuration& q) const {
  return q.sector == 1 && q.coords[0] >= (record_->spec().ny - 2) * record_->spec().eps;
}

double Model3Dynamics::emission_velocity(double t) const { return field_.emission_velocity_model3(view_at(t)); }

std::unique_ptr<RecordDynamics> make_dynamics(const EvolutionRecord& record, const ModelParams& params,
                                              double node_threshold) {
  if (record.snapshots.empty()) throw HorizonError("empty evolution record");
  if (record.spec().is_model3()) return std::make_unique<Model3Dynamics>(record, params, node_threshold);
  return std::make_unique<Model4Dynamics>(record, params, node_threshold);
}

}  // namespace ibc
