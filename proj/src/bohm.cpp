#include "ibcsim/bohm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ibcsim/errors.hpp"

namespace ibc {

namespace {

int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace

BohmField::BohmField(const HamiltonianOp& h, double node_threshold)
    : h_(&h),
      hbar_over_m_(h.params().hbar / h.params().mass),
      floor_(node_threshold / h.spec().total_measure()) {}

cplx BohmField::upper_value(const PsiView& psi, int i, int j) const {
  const auto& spec = h_->spec();
  const auto nx = static_cast<std::size_t>(spec.nx);
  if (j <= 0) return h_->boundary_value(psi[static_cast<std::size_t>(i)], psi[nx + i]);
  if (j > spec.ny) return {};
  return psi[nx + static_cast<std::size_t>(j - 1) * nx + i];
}

cplx BohmField::radial_value(const PsiView& psi, int k) const {
  if (k <= 0) return h_->boundary_value(psi[0], psi[1]);
  if (k > h_->spec().ny) return {};
  return psi[static_cast<std::size_t>(k)];
}

void BohmField::locate_x(double x, int& i0, int& i1, double& fx) const {
  const auto& spec = h_->spec();
  const double u = (x - spec.x_origin()) / spec.eps;
  const double fl = std::floor(u);
  fx = u - fl;
  i0 = wrap(static_cast<int>(fl), spec.nx);
  i1 = wrap(i0 + 1, spec.nx);
}

FieldSample BohmField::finish(cplx value, cplx gx, cplx gy, int dim) const {
  FieldSample s;
  s.dim = dim;
  s.density = std::norm(value);
  if (!(s.density > floor_)) throw NodeProximityError("wavefunction density below node floor", s.density);
  s.current = {hbar_over_m_ * std::imag(std::conj(value) * gx), hbar_over_m_ * std::imag(std::conj(value) * gy)};
  s.velocity = {s.current[0] / s.density, s.current[1] / s.density};
  if (dim < 2) s.velocity[1] = s.current[1] = 0.0;
  return s;
}

FieldSample BohmField::sample_upper(const PsiView& psi, double x, double y) const {
  const auto& spec = h_->spec();
  const double eps = spec.eps;
  const int nx = spec.nx;
  int i0, i1;
  double fx;
  locate_x(x, i0, i1, fx);
  double v = std::max(y, 0.0) / eps;
  int j0 = static_cast<int>(std::floor(v));
  double fy = v - j0;
  if (j0 > spec.ny) {
    if (j0 == spec.ny + 1 && fy == 0.0) {
      j0 = spec.ny;
      fy = 1.0;
    } else {
      throw NodeProximityError("position beyond the far edge of the lattice");
    }
  }
  cplx value{}, gx{}, gy{};
  const int is[2] = {i0, i1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int a = 0; a < 2; ++a) {
    const int i = is[a];
    const int ip = wrap(i + 1, nx);
    const int im = wrap(i - 1, nx);
    for (int b = 0; b < 2; ++b) {
      const double w = wx[a] * wy[b];
      if (w == 0.0) continue;
      const int j = j0 + b;
      const cplx c = upper_value(psi, i, j);
      value += w * c;
      gx += w * (upper_value(psi, ip, j) - upper_value(psi, im, j)) / (2.0 * eps);
      if (j == 0)
        gy += w * (upper_value(psi, i, 1) - c) / eps;
      else
        gy += w * (upper_value(psi, i, j + 1) - upper_value(psi, i, j - 1)) / (2.0 * eps);
    }
  }
  return finish(value, gx, gy, 2);
}

FieldSample BohmField::sample_lower(const PsiView& psi, double x) const {
  const auto& spec = h_->spec();
  const int nx = spec.nx;
  int i0, i1;
  double fx;
  locate_x(x, i0, i1, fx);
  auto grad = [&](int i) {
    return (psi[static_cast<std::size_t>(wrap(i + 1, nx))] - psi[static_cast<std::size_t>(wrap(i - 1, nx))]) /
           (2.0 * spec.eps);
  };
  const cplx value = (1.0 - fx) * psi[static_cast<std::size_t>(i0)] + fx * psi[static_cast<std::size_t>(i1)];
  const cplx gx = (1.0 - fx) * grad(i0) + fx * grad(i1);
  return finish(value, gx, {}, 1);
}

FieldSample BohmField::sample_radial(const PsiView& psi, double r) const {
  const auto& spec = h_->spec();
  const double eps = spec.eps;
  const double v = std::max(r, 0.0) / eps;
  int k0 = static_cast<int>(std::floor(v));
  double f = v - k0;
  if (k0 > spec.ny) {
    if (k0 == spec.ny + 1 && f == 0.0) {
      k0 = spec.ny;
      f = 1.0;
    } else {
      throw NodeProximityError("position beyond the far edge of the radial lattice");
    }
  }
  auto grad = [&](int k) {
    if (k == 0) return (radial_value(psi, 1) - radial_value(psi, 0)) / eps;
    return (radial_value(psi, k + 1) - radial_value(psi, k - 1)) / (2.0 * eps);
  };
  cplx value = (1.0 - f) * radial_value(psi, k0);
  cplx g = (1.0 - f) * grad(k0);
  if (f != 0.0) {
    value += f * radial_value(psi, k0 + 1);
    g += f * grad(k0 + 1);
  }
  return finish(value, g, {}, 1);
}

FieldSample BohmField::sample(const PsiView& psi, const Configuration& q) const {
  const auto& spec = h_->spec();
  if (spec.is_model3()) {
    if (q.sector == 0) {
      FieldSample s;
      s.density = std::norm(psi[0]);
      if (!(s.density > floor_)) throw NodeProximityError("empty-configuration amplitude below node floor", s.density);
      return s;
    }
    if (q.sector != 1) throw DomainError("Model 3 has sectors 0 and 1");
    return sample_radial(psi, q.coords[0]);
  }
  if (q.sector == 1) return sample_lower(psi, q.coords[0]);
  if (q.sector == 2) return sample_upper(psi, q.coords[0], q.coords[1]);
  throw DomainError("Model 4 has sectors 1 and 2");
}

double BohmField::jump_rate_model4(const PsiView& psi, double x) const {
  const auto& spec = h_->spec();
  if (spec.is_model3()) throw ModelMismatchError("jump_rate_model4 needs a Model 4 lattice");
  const auto nx = static_cast<std::size_t>(spec.nx);
  int i0, i1;
  double fx;
  locate_x(x, i0, i1, fx);
  const cplx lower = (1.0 - fx) * psi[static_cast<std::size_t>(i0)] + fx * psi[static_cast<std::size_t>(i1)];
  const cplx row1 = (1.0 - fx) * psi[nx + i0] + fx * psi[nx + i1];
  const double rho1 = std::norm(lower);
  if (!(rho1 > floor_)) throw NodeProximityError("lower-sector density below node floor", rho1);
  const cplx boundary = h_->boundary_value(lower, row1);
  const double s = std::imag(std::conj(boundary) * (row1 - boundary) / spec.eps);
  return hbar_over_m_ * std::max(0.0, s) / rho1;
}

double BohmField::boundary_current_y(const PsiView& psi, double x) const {
  const auto& spec = h_->spec();
  if (spec.is_model3()) throw ModelMismatchError("boundary_current_y needs a Model 4 lattice");
  int i0, i1;
  double fx;
  locate_x(x, i0, i1, fx);
  const cplx value = (1.0 - fx) * upper_value(psi, i0, 0) + fx * upper_value(psi, i1, 0);
  const cplx gy = (1.0 - fx) * (upper_value(psi, i0, 1) - upper_value(psi, i0, 0)) / spec.eps +
                  fx * (upper_value(psi, i1, 1) - upper_value(psi, i1, 0)) / spec.eps;
  return hbar_over_m_ * std::imag(std::conj(value) * gy);
}

std::array<cplx, 2> BohmField::origin_coefficients(const PsiView& psi) const {
  if (!h_->spec().is_model3()) throw ModelMismatchError("origin coefficients need a Model 3 lattice");
  const double s = std::sqrt(4.0 * std::numbers::pi);
  const cplx w0 = radial_value(psi, 0);
  const cplx w1 = radial_value(psi, 1);
  return {w0 / s, (w1 - w0) / (h_->spec().eps * s)};
}

double BohmField::jump_rate_model3_total(const PsiView& psi) const {
  if (!h_->spec().is_model3()) throw ModelMismatchError("jump_rate_model3_total needs a Model 3 lattice");
  const double rho0 = std::norm(psi[0]);
  if (!(rho0 > floor_)) throw NodeProximityError("empty-configuration amplitude below node floor", rho0);
  const cplx w0 = radial_value(psi, 0);
  const cplx w1 = radial_value(psi, 1);
  const double s = std::imag(std::conj(w0) * (w1 - w0) / h_->spec().eps);
  return hbar_over_m_ * std::max(0.0, s) / rho0;
}

double BohmField::origin_current_model3(const PsiView& psi) const {
  const auto c = origin_coefficients(psi);
  return 4.0 * std::numbers::pi * hbar_over_m_ * std::imag(std::conj(c[0]) * c[1]);
}

double BohmField::emission_velocity_model3(const PsiView& psi) const {
  const auto c = origin_coefficients(psi);
  const double mod2 = std::norm(c[0]);
  // |c_{-1}|^2 = |w0|^2 / 4 pi; compare the radial density |w0|^2 with the floor
  if (!(4.0 * std::numbers::pi * mod2 > floor_))
    throw UndefinedVelocityError("emission velocity undefined: c_{-1} vanishes");
  return hbar_over_m_ * std::imag(std::conj(c[0]) * c[1]) / mod2;
}

std::array<double, 2> velocity_at(const HamiltonianOp& h, const SectoredWaveFunction& psi, const Configuration& q,
                                  double node_threshold) {
  return BohmField(h, node_threshold * norm_squared(psi)).velocity(PsiView::of(psi), q);
}

double jump_rate_model4(const HamiltonianOp& h, const SectoredWaveFunction& psi, double x, double node_threshold) {
  return BohmField(h, node_threshold * norm_squared(psi)).jump_rate_model4(PsiView::of(psi), x);
}

double jump_rate_model3_total(const HamiltonianOp& h, const SectoredWaveFunction& psi, double node_threshold) {
  return BohmField(h, node_threshold * norm_squared(psi)).jump_rate_model3_total(PsiView::of(psi));
}

double emission_velocity_model3(const HamiltonianOp& h, const SectoredWaveFunction& psi, double node_threshold) {
  return BohmField(h, node_threshold * norm_squared(psi)).emission_velocity_model3(PsiView::of(psi));
}

}  // namespace ibc
