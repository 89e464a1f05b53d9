#include "ibcsim/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ibcsim/errors.hpp"

namespace ibc {

namespace {

int wrap_index(int i, int n) { return i < 0 ? i + n : (i >= n ? i - n : i); }

}  // namespace

HamiltonianOp::HamiltonianOp(const ModelParams& params, const LatticeSpec& spec)
    : params_(params), spec_(spec) {
  params_.validate();
  spec_.validate();
  const double hbar = params_.hbar;
  const double m = params_.mass;
  const double eps = spec_.eps;
  kin_ = hbar * hbar / (2.0 * m * eps * eps);

  if (spec_.is_model3()) {
    variant_ = HamiltonianVariant::Model3Radial;
    g_eff_ = params_.g / std::sqrt(4.0 * std::numbers::pi);
    const double kappa = 2.0 * m * g_eff_ / (hbar * hbar);
    elim_ = {cplx(-kappa, 0.0), cplx{}};
    // (H psi)^(0) = g_eff (w_1 - w_0) / eps
    lower_to_row1_ = g_eff_ / eps;
    lower_diag_ = -g_eff_ * elim_.lower_coeff / eps;
    row1_to_lower_ = -kin_ * elim_.lower_coeff;
    row1_diag_ = 0.0;
    return;
  }

  g_eff_ = params_.g;
  variant_ = params_.robin ? HamiltonianVariant::Model4Robin : HamiltonianVariant::Model4Dirichlet;
  const RobinParams r = params_.robin_or_dirichlet();
  const double kappa = 2.0 * m * params_.g / (hbar * hbar);
  const double denom = r.alpha - r.beta / eps;
  if (std::abs(denom) < 1e-12 / eps)
    throw SingularDiscretizationError("Robin elimination is singular: alpha - beta/eps vanishes");
  const cplx phase = std::polar(1.0, r.theta);
  elim_.lower_coeff = -kappa * std::conj(phase) / denom;
  elim_.row1_coeff = -(r.beta / eps) / denom;

  // (H psi)^(1) = -kin lap psi1 + g e^{i theta} ((gamma - delta/eps) psi0 + (delta/eps) psi2(x, eps))
  const cplx front = params_.g * phase;
  lower_diag_ = front * (r.gamma - r.delta / eps) * elim_.lower_coeff;
  lower_to_row1_ = front * ((r.gamma - r.delta / eps) * elim_.row1_coeff + r.delta / eps);
  // y = eps row sees -kin * psi0 from the Laplacian
  row1_to_lower_ = -kin_ * elim_.lower_coeff;
  row1_diag_ = -kin_ * elim_.row1_coeff;
}

SectoredWaveFunction HamiltonianOp::apply(const SectoredWaveFunction& psi) const {
  if (psi.spec() != spec_) throw ShapeError("Hamiltonian applied to a wavefunction on a different lattice");
  SectoredWaveFunction out(spec_, psi.time());
  apply(psi.amplitudes(), out.amplitudes());
  return out;
}

void HamiltonianOp::apply(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.size() != spec_.site_count() || out.size() != in.size())
    throw ShapeError("Hamiltonian apply: size mismatch");
  if (spec_.is_model3())
    apply_model3(in, out);
  else
    apply_model4(in, out);
}

void HamiltonianOp::apply_model4(std::span<const cplx> in, std::span<cplx> out) const {
  const int nx = spec_.nx;
  const int ny = spec_.ny;
  const cplx* lower = in.data();
  const cplx* upper = in.data() + nx;
  cplx* out_lower = out.data();
  cplx* out_upper = out.data() + nx;

  for (int i = 0; i < nx; ++i) {
    const int ip = wrap_index(i + 1, nx);
    const int im = wrap_index(i - 1, nx);
    out_lower[i] = -kin_ * (lower[ip] + lower[im] - 2.0 * lower[i]) + lower_diag_ * lower[i] +
                   lower_to_row1_ * upper[i];
  }
  for (int j = 1; j <= ny; ++j) {
    const cplx* row = upper + static_cast<std::size_t>(j - 1) * nx;
    const cplx* below = j > 1 ? row - nx : nullptr;
    const cplx* above = j < ny ? row + nx : nullptr;
    cplx* orow = out_upper + static_cast<std::size_t>(j - 1) * nx;
    for (int i = 0; i < nx; ++i) {
      const int ip = wrap_index(i + 1, nx);
      const int im = wrap_index(i - 1, nx);
      cplx lap = row[ip] + row[im] - 4.0 * row[i];
      if (below) lap += below[i];
      if (above) lap += above[i];
      orow[i] = -kin_ * lap;
    }
    if (j == 1)
      for (int i = 0; i < nx; ++i) orow[i] += row1_diag_ * row[i] + row1_to_lower_ * lower[i];
  }
}

void HamiltonianOp::apply_model3(std::span<const cplx> in, std::span<cplx> out) const {
  const int nr = spec_.ny;
  out[0] = lower_diag_ * in[0] + lower_to_row1_ * in[1];
  for (int k = 1; k <= nr; ++k) {
    cplx lap = -2.0 * in[k];
    if (k > 1) lap += in[k - 1];
    if (k < nr) lap += in[k + 1];
    out[k] = -kin_ * lap;
  }
  out[1] += row1_to_lower_ * in[0];
}

cplx HamiltonianOp::eliminated_boundary_value(const SectoredWaveFunction& psi, int x_index) const {
  if (psi.spec() != spec_) throw ShapeError("eliminated_boundary_value: lattice mismatch");
  if (spec_.is_model3()) return boundary_value(psi.empty(), psi.radial(1));
  if (x_index < 0 || x_index >= spec_.nx) throw ShapeError("x index out of range");
  return boundary_value(psi.lower(x_index), psi.upper(x_index, 1));
}

void HamiltonianOp::row_stencil(std::size_t row, std::vector<std::pair<std::size_t, cplx>>& out) const {
  out.clear();
  if (row >= spec_.site_count()) throw ShapeError("stencil row out of range");
  if (spec_.is_model3()) {
    const int nr = spec_.ny;
    if (row == 0) {
      out.emplace_back(0, lower_diag_);
      out.emplace_back(1, lower_to_row1_);
      return;
    }
    const int k = static_cast<int>(row);
    out.emplace_back(row, 2.0 * kin_);
    if (k > 1) out.emplace_back(row - 1, -kin_);
    if (k < nr) out.emplace_back(row + 1, -kin_);
    if (k == 1) out.emplace_back(0, row1_to_lower_);
    return;
  }
  const int nx = spec_.nx;
  const int ny = spec_.ny;
  const auto nxs = static_cast<std::size_t>(nx);
  if (row < nxs) {
    const int i = static_cast<int>(row);
    out.emplace_back(row, 2.0 * kin_ + lower_diag_);
    out.emplace_back(static_cast<std::size_t>(wrap_index(i + 1, nx)), -kin_);
    out.emplace_back(static_cast<std::size_t>(wrap_index(i - 1, nx)), -kin_);
    out.emplace_back(nxs + i, lower_to_row1_);
    return;
  }
  const std::size_t local = row - nxs;
  const int i = static_cast<int>(local % nxs);
  const int j = static_cast<int>(local / nxs) + 1;
  auto up = [&](int ii, int jj) { return nxs + static_cast<std::size_t>(jj - 1) * nxs + ii; };
  out.emplace_back(row, 4.0 * kin_ + (j == 1 ? row1_diag_ : cplx{}));
  out.emplace_back(up(wrap_index(i + 1, nx), j), -kin_);
  out.emplace_back(up(wrap_index(i - 1, nx), j), -kin_);
  if (j > 1) out.emplace_back(up(i, j - 1), -kin_);
  if (j < ny) out.emplace_back(up(i, j + 1), -kin_);
  if (j == 1) out.emplace_back(static_cast<std::size_t>(i), row1_to_lower_);
}

cplx HamiltonianOp::stencil_entry(std::size_t row, std::size_t col) const {
  thread_local std::vector<std::pair<std::size_t, cplx>> buf;
  row_stencil(row, buf);
  cplx total{};
  for (const auto& [c, v] : buf)
    if (c == col) total += v;
  return total;
}

double HamiltonianOp::measure_of(std::size_t site) const {
  if (spec_.is_model3()) return site == 0 ? 1.0 : spec_.eps;
  return site < static_cast<std::size_t>(spec_.nx) ? spec_.eps : spec_.eps * spec_.eps;
}

cplx HamiltonianOp::matrix_element(std::size_t row, std::size_t col) const {
  return measure_of(row) * stencil_entry(row, col);
}

void HamiltonianOp::column_couplings(std::size_t col, std::vector<std::pair<std::size_t, cplx>>& out) const {
  // The stencil pattern is symmetric, so the neighbours of `col` are exactly
  // the rows that reference it.
  std::vector<std::pair<std::size_t, cplx>> pattern;
  row_stencil(col, pattern);
  out.clear();
  for (const auto& [q, unused] : pattern) {
    (void)unused;
    if (q == col) continue;
    out.emplace_back(q, matrix_element(q, col));
  }
}

double energy(const HamiltonianOp& h, const SectoredWaveFunction& psi) {
  return inner_product(psi, h.apply(psi)).real();
}

SectoredWaveFunction time_conjugate(const HamiltonianOp& h, const SectoredWaveFunction& psi) {
  SectoredWaveFunction out = conjugate(psi);
  if (h.variant() == HamiltonianVariant::Model4Robin) {
    const double theta = h.params().robin_or_dirichlet().theta;
    if (theta != 0.0) {
      const cplx phase = std::polar(1.0, -2.0 * theta);
      for (auto& a : out.sector_amplitudes(2)) a *= phase;
    }
  }
  return out;
}

}  // namespace ibc
