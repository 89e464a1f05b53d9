#include "ibcsim/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibcsim/errors.hpp"

namespace ibc {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Model4Lattice: return "Model4Lattice";
    case ModelKind::Model4Continuum: return "Model4Continuum";
    case ModelKind::Model3Radial: return "Model3Radial";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "Model4Lattice") return ModelKind::Model4Lattice;
  if (name == "Model4Continuum") return ModelKind::Model4Continuum;
  if (name == "Model3Radial") return ModelKind::Model3Radial;
  throw DomainError("unknown model '" + name + "'");
}

std::size_t LatticeSpec::site_count() const {
  if (is_model3()) return 1 + static_cast<std::size_t>(ny);
  return static_cast<std::size_t>(nx) + static_cast<std::size_t>(nx) * ny;
}

double LatticeSpec::total_measure() const {
  if (is_model3()) return 1.0 + ny * eps;
  return nx * eps + static_cast<double>(nx) * ny * eps * eps;
}

void LatticeSpec::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("lattice eps must be positive");
  if (ny < 4) throw DomainError("lattice needs at least 4 sites above the boundary");
  if (is_model3()) {
    if (nx != 0) throw DomainError("Model 3 lattice must have nx = 0");
  } else if (nx < 4) {
    throw DomainError("Model 4 lattice needs nx >= 4");
  }
  const double count = is_model3() ? 1.0 + ny : static_cast<double>(nx) * (1.0 + ny);
  if (count >= 2147483648.0) throw DomainError("lattice site count must stay below 2^31");
}

void ModelParams::validate() const {
  if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (!std::isfinite(g)) throw DomainError("g must be finite");
  if (robin && std::abs(robin->determinant() - 1.0) > 1e-12)
    throw DomainError("Robin coefficients must satisfy alpha*delta - beta*gamma = 1");
}

SectoredWaveFunction::SectoredWaveFunction(const LatticeSpec& spec, double time)
    : spec_(spec), time_(time) {
  spec_.validate();
  if (spec_.is_model3()) {
    layout_.push_back({0, 0, 1, 1.0});
    layout_.push_back({1, 1, static_cast<std::size_t>(spec_.ny), spec_.eps});
  } else {
    const auto n1 = static_cast<std::size_t>(spec_.nx);
    layout_.push_back({1, 0, n1, spec_.eps});
    layout_.push_back({2, n1, n1 * spec_.ny, spec_.eps * spec_.eps});
  }
  amp_.assign(spec_.site_count(), cplx{});
}

const SectorLayout& SectoredWaveFunction::sector(int id) const {
  for (const auto& s : layout_)
    if (s.id == id) return s;
  throw DomainError("unknown sector " + std::to_string(id));
}

bool SectoredWaveFunction::has_sector(int id) const {
  return std::any_of(layout_.begin(), layout_.end(), [id](const auto& s) { return s.id == id; });
}

std::span<cplx> SectoredWaveFunction::sector_amplitudes(int id) {
  const auto& s = sector(id);
  return std::span<cplx>(amp_).subspan(s.offset, s.size);
}

std::span<const cplx> SectoredWaveFunction::sector_amplitudes(int id) const {
  const auto& s = sector(id);
  return std::span<const cplx>(amp_).subspan(s.offset, s.size);
}

double SectoredWaveFunction::weight_of(std::size_t k) const {
  return layout_[k < layout_[1].offset ? 0 : 1].weight;
}

int SectoredWaveFunction::sector_of(std::size_t k) const {
  return layout_[k < layout_[1].offset ? 0 : 1].id;
}

SectoredWaveFunction& SectoredWaveFunction::operator+=(const SectoredWaveFunction& o) {
  if (!same_grid(o)) throw ShapeError("wavefunction grids differ");
  for (std::size_t k = 0; k < amp_.size(); ++k) amp_[k] += o.amp_[k];
  return *this;
}

SectoredWaveFunction& SectoredWaveFunction::operator-=(const SectoredWaveFunction& o) {
  if (!same_grid(o)) throw ShapeError("wavefunction grids differ");
  for (std::size_t k = 0; k < amp_.size(); ++k) amp_[k] -= o.amp_[k];
  return *this;
}

SectoredWaveFunction& SectoredWaveFunction::operator*=(cplx s) {
  for (auto& a : amp_) a *= s;
  return *this;
}

SectoredWaveFunction operator+(SectoredWaveFunction a, const SectoredWaveFunction& b) { return a += b; }
SectoredWaveFunction operator-(SectoredWaveFunction a, const SectoredWaveFunction& b) { return a -= b; }
SectoredWaveFunction operator*(cplx s, SectoredWaveFunction a) { return a *= s; }

cplx inner_product(const SectoredWaveFunction& a, const SectoredWaveFunction& b) {
  if (!a.same_grid(b)) throw ShapeError("inner_product: wavefunction grids differ");
  cplx total{};
  const auto amp_a = a.amplitudes();
  const auto amp_b = b.amplitudes();
  for (const auto& s : a.sectors()) {
    cplx partial{};
    for (std::size_t k = s.offset; k < s.offset + s.size; ++k) partial += std::conj(amp_a[k]) * amp_b[k];
    total += s.weight * partial;
  }
  return total;
}

double norm_squared(const SectoredWaveFunction& psi) {
  double total = 0.0;
  const auto amp = psi.amplitudes();
  for (const auto& s : psi.sectors()) {
    double partial = 0.0;
    for (std::size_t k = s.offset; k < s.offset + s.size; ++k) partial += std::norm(amp[k]);
    total += s.weight * partial;
  }
  return total;
}

double norm(const SectoredWaveFunction& psi) { return std::sqrt(norm_squared(psi)); }

SectoredWaveFunction normalize(const SectoredWaveFunction& psi) {
  const double n = norm(psi);
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateInputError("cannot normalize a zero or non-finite vector");
  SectoredWaveFunction out = psi;
  out *= 1.0 / n;
  return out;
}

double sector_probability(const SectoredWaveFunction& psi, int sector_id) {
  const auto& s = psi.sector(sector_id);
  const double total = norm_squared(psi);
  if (std::abs(total - 1.0) > 1e-8) throw DomainError("sector_probability requires a normalized state");
  double mass = 0.0;
  for (const auto& a : psi.sector_amplitudes(sector_id)) mass += std::norm(a);
  return s.weight * mass;
}

SectoredWaveFunction conjugate(const SectoredWaveFunction& psi) {
  SectoredWaveFunction out = psi;
  for (auto& a : out.amplitudes()) a = std::conj(a);
  return out;
}

double region_measure(const SectoredWaveFunction& psi, std::span<const std::size_t> sites) {
  double total = 0.0;
  for (auto k : sites) {
    if (k >= psi.size()) throw ShapeError("region_measure: site index out of range");
    total += psi.weight_of(k);
  }
  return total;
}

Configuration site_configuration(const LatticeSpec& spec, std::size_t k) {
  if (k >= spec.site_count()) throw ShapeError("site index out of range");
  if (spec.is_model3()) {
    if (k == 0) return Configuration::empty_config();
    return Configuration::line(1, static_cast<double>(k) * spec.eps);
  }
  const auto nx = static_cast<std::size_t>(spec.nx);
  if (k < nx) return Configuration::line(1, spec.x_of(static_cast<int>(k)));
  const std::size_t local = k - nx;
  const int i = static_cast<int>(local % nx);
  const int j = static_cast<int>(local / nx) + 1;
  return Configuration::plane(2, spec.x_of(i), j * spec.eps);
}

}  // namespace ibc
