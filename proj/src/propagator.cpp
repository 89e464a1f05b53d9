#include "ibcsim/propagator.hpp"

#include <algorithm>
#include <cmath>

#include "ibcsim/errors.hpp"

namespace ibc {

CrankNicolsonStepper::CrankNicolsonStepper(const HamiltonianOp& h, double dt, StepOptions options)
    : h_(h), dt_(dt), tau_(dt / (2.0 * h.params().hbar)), options_(options) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const std::size_t n = h.spec().site_count();
  weights_.resize(n);
  for (std::size_t k = 0; k < n; ++k) weights_[k] = h.measure_of(k);
  for (auto* v : {&b_, &x_, &r_, &p_, &tmp_, &mp_}) v->assign(n, cplx{});
}

void CrankNicolsonStepper::apply_h(const std::vector<cplx>& in, std::vector<cplx>& out) const {
  h_.apply(std::span<const cplx>(in), std::span<cplx>(out));
}

double CrankNicolsonStepper::wnorm2(const std::vector<cplx>& v) const {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += weights_[k] * std::norm(v[k]);
  return s;
}

cplx CrankNicolsonStepper::wdot(const std::vector<cplx>& a, const std::vector<cplx>& b) const {
  cplx s{};
  for (std::size_t k = 0; k < a.size(); ++k) s += weights_[k] * std::conj(a[k]) * b[k];
  return s;
}

SectoredWaveFunction CrankNicolsonStepper::step(const SectoredWaveFunction& psi, StepStats* stats) {
  if (psi.spec() != h_.spec()) throw ShapeError("Crank-Nicolson: lattice mismatch");
  const std::size_t n = psi.size();
  const cplx itau(0.0, tau_);
  std::vector<cplx> in(psi.amplitudes().begin(), psi.amplitudes().end());

  // b = (1 - i tau H) psi
  apply_h(in, tmp_);
  for (std::size_t k = 0; k < n; ++k) b_[k] = in[k] - itau * tmp_[k];
  const double bnorm = std::sqrt(wnorm2(b_));

  // rhs = (1 - i tau H) b, initial guess x = 2 b - psi = (1 - 2 i tau H) psi
  apply_h(b_, tmp_);
  std::vector<cplx>& rhs = mp_;
  for (std::size_t k = 0; k < n; ++k) {
    rhs[k] = b_[k] - itau * tmp_[k];
    x_[k] = 2.0 * b_[k] - in[k];
  }
  // r = rhs - (1 + tau^2 H^2) x
  apply_h(x_, tmp_);
  std::vector<cplx> hhx(n);
  apply_h(tmp_, hhx);
  const double tau2 = tau_ * tau_;
  for (std::size_t k = 0; k < n; ++k) r_[k] = rhs[k] - (x_[k] + tau2 * hhx[k]);
  p_ = r_;
  double rr = wnorm2(r_);
  const double target = options_.tolerance * std::max(bnorm, 1e-300);

  int it = 0;
  std::vector<cplx>& mp = hhx;
  while (std::sqrt(rr) > target) {
    if (it >= options_.max_iterations)
      throw PropagationError("Crank-Nicolson solve did not converge", std::sqrt(rr) / std::max(bnorm, 1e-300));
    apply_h(p_, tmp_);
    apply_h(tmp_, mp);
    for (std::size_t k = 0; k < n; ++k) mp[k] = p_[k] + tau2 * mp[k];
    const double pmp = wdot(p_, mp).real();
    const double alpha = rr / pmp;
    for (std::size_t k = 0; k < n; ++k) {
      x_[k] += alpha * p_[k];
      r_[k] -= alpha * mp[k];
    }
    const double rr_new = wnorm2(r_);
    const double beta = rr_new / rr;
    for (std::size_t k = 0; k < n; ++k) p_[k] = r_[k] + beta * p_[k];
    rr = rr_new;
    ++it;
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = std::sqrt(rr) / std::max(bnorm, 1e-300);
  }
  SectoredWaveFunction out(psi.spec(), psi.time() + dt_);
  std::copy(x_.begin(), x_.end(), out.amplitudes().begin());
  return out;
}

SectoredWaveFunction step_crank_nicolson(const HamiltonianOp& h, const SectoredWaveFunction& psi, double dt,
                                         const StepOptions& options, StepStats* stats) {
  CrankNicolsonStepper stepper(h, dt, options);
  return stepper.step(psi, stats);
}

std::pair<std::size_t, double> EvolutionRecord::locate(double t) const {
  if (snapshots.empty()) throw HorizonError("empty evolution record");
  const double t0 = snapshots.front().time();
  const double tol = 1e-9 * std::max(1.0, horizon());
  if (t < t0 - tol || t > horizon() + tol) throw HorizonError("time outside the evolution record horizon");
  if (snapshots.size() == 1) return {0, 0.0};
  const double h = snapshot_dt();
  double pos = (t - t0) / h;
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= snapshots.size() - 1) k = snapshots.size() - 2;
  double frac = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
  return {k, frac};
}

SectoredWaveFunction EvolutionRecord::interpolate(double t) const {
  const auto [k, f] = locate(t);
  if (snapshots.size() == 1 || f == 0.0) {
    SectoredWaveFunction out = snapshots[k];
    out.set_time(t);
    return out;
  }
  SectoredWaveFunction out = snapshots[k];
  const auto next = snapshots[k + 1].amplitudes();
  auto amp = out.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = (1.0 - f) * amp[i] + f * next[i];
  out.set_time(t);
  return out;
}

double default_time_step(const ModelParams& params, const LatticeSpec& spec) {
  return 0.1 * 2.0 * params.mass * spec.eps * spec.eps / params.hbar;
}

double edge_band_norm(const SectoredWaveFunction& psi) {
  const auto& spec = psi.spec();
  double s = 0.0;
  if (spec.is_model3()) {
    for (int k = spec.ny - 1; k <= spec.ny; ++k) s += std::norm(psi.radial(k));
    return std::sqrt(s * spec.eps);
  }
  for (int j = spec.ny - 1; j <= spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) s += std::norm(psi.upper(i, j));
  return std::sqrt(s * spec.eps * spec.eps);
}

EvolutionRecord evolve(const HamiltonianOp& h, const SectoredWaveFunction& psi0, double dt, double t_max, int stride,
                       const StepOptions& options) {
  if (!(dt > 0.0)) throw DomainError("evolve: dt must be positive");
  if (t_max < 0.0) throw DomainError("evolve: t_max must be non-negative");
  if (stride < 1) throw DomainError("evolve: stride must be >= 1");
  if (std::abs(norm_squared(psi0) - 1.0) > 1e-8) throw DomainError("evolve: initial state must be normalized");

  EvolutionRecord rec;
  rec.step_dt = dt;
  rec.stride = stride;
  rec.t_max = t_max;
  SectoredWaveFunction psi = psi0;
  psi.set_time(0.0);
  rec.snapshots.push_back(psi);
  rec.max_edge_band_norm = edge_band_norm(psi);

  auto steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  if (steps < 0) steps = 0;
  steps = (steps + stride - 1) / stride * stride;
  CrankNicolsonStepper stepper(h, dt, options);
  for (long s = 1; s <= steps; ++s) {
    psi = stepper.step(psi);
    psi.set_time(static_cast<double>(s) * dt);
    if (s % stride == 0) {
      rec.snapshots.push_back(psi);
      rec.max_edge_band_norm = std::max(rec.max_edge_band_norm, edge_band_norm(psi));
    }
  }
  return rec;
}

EvolutionRecord evolve_reversed(const HamiltonianOp& h, const EvolutionRecord& forward, const StepOptions& options) {
  SectoredWaveFunction start = time_conjugate(h, forward.snapshots.back());
  start.set_time(0.0);
  EvolutionRecord rec = evolve(h, normalize(start), forward.step_dt, forward.horizon(), forward.stride, options);
  rec.config_hash = forward.config_hash;
  return rec;
}

}  // namespace ibc
