#pragma once

#include <array>
#include <cstddef>

#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/state.hpp"

namespace ibc {

/// Read-only view of psi at an intermediate time: (1 - f) a + f b.
struct PsiView {
  const SectoredWaveFunction* a = nullptr;
  const SectoredWaveFunction* b = nullptr;
  double f = 0.0;

  static PsiView of(const SectoredWaveFunction& psi) { return {&psi, &psi, 0.0}; }
  static PsiView between(const SectoredWaveFunction& a, const SectoredWaveFunction& b, double f) {
    return {&a, &b, f};
  }
  cplx operator[](std::size_t k) const {
    return f == 0.0 ? (*a)[k] : (1.0 - f) * (*a)[k] + f * (*b)[k];
  }
  const LatticeSpec& spec() const { return a->spec(); }
};

struct FieldSample {
  int dim = 0;
  double density = 0.0;               // |psi|^2 per unit measure
  std::array<double, 2> current{};    // (hbar/m) Im(psi* grad psi)
  std::array<double, 2> velocity{};   // current / density
};

/// Bohmian velocity, current and jump-rate evaluation on a lattice
/// wavefunction. Amplitudes are bilinearly interpolated between sites, with
/// centred differences for interior gradients and the one-sided difference
/// (psi(eps) - psi(0)) / eps at the boundary row. The boundary row itself is
/// reconstructed from the boundary condition held by the Hamiltonian.
///
/// A point whose density is at or below node_threshold * ||psi||^2 / mu(Q)
/// raises NodeProximityError; states are assumed normalized.
class BohmField {
 public:
  explicit BohmField(const HamiltonianOp& h, double node_threshold = 1e-12);

  const HamiltonianOp& hamiltonian() const { return *h_; }
  double node_floor() const { return floor_; }

  FieldSample sample(const PsiView& psi, const Configuration& q) const;
  std::array<double, 2> velocity(const PsiView& psi, const Configuration& q) const {
    return sample(psi, q).velocity;
  }

  /// Model 4 creation rate (hbar/m) Im+[psi2(x,0)* d_y psi2(x,0)] / |psi1(x)|^2.
  double jump_rate_model4(const PsiView& psi, double x) const;
  /// j_y of the upper sector on the boundary line, via the generic field sampler.
  double boundary_current_y(const PsiView& psi, double x) const;

  /// Model 3 total emission rate (hbar/m) Im+[w0* (w1 - w0)/eps] / |psi0|^2.
  double jump_rate_model3_total(const PsiView& psi) const;
  /// Outward current from the origin, (4 pi hbar / m) Im[c_{-1}* c_0].
  double origin_current_model3(const PsiView& psi) const;
  /// Radial speed of a newly emitted particle, (hbar/m) Im[c_{-1}* c_0] / |c_{-1}|^2.
  double emission_velocity_model3(const PsiView& psi) const;
  /// Expansion coefficients (c_{-1}, c_0) of r psi1 at the origin.
  std::array<cplx, 2> origin_coefficients(const PsiView& psi) const;

 private:
  cplx upper_value(const PsiView& psi, int i, int j) const;
  cplx radial_value(const PsiView& psi, int k) const;
  FieldSample sample_upper(const PsiView& psi, double x, double y) const;
  FieldSample sample_lower(const PsiView& psi, double x) const;
  FieldSample sample_radial(const PsiView& psi, double r) const;
  void locate_x(double x, int& i0, int& i1, double& fx) const;
  FieldSample finish(cplx value, cplx gx, cplx gy, int dim) const;

  const HamiltonianOp* h_;
  double hbar_over_m_;
  double floor_;
};

// Convenience wrappers on a single snapshot.
std::array<double, 2> velocity_at(const HamiltonianOp& h, const SectoredWaveFunction& psi, const Configuration& q,
                                  double node_threshold = 1e-12);
double jump_rate_model4(const HamiltonianOp& h, const SectoredWaveFunction& psi, double x,
                        double node_threshold = 1e-12);
double jump_rate_model3_total(const HamiltonianOp& h, const SectoredWaveFunction& psi,
                              double node_threshold = 1e-12);
double emission_velocity_model3(const HamiltonianOp& h, const SectoredWaveFunction& psi,
                                double node_threshold = 1e-12);

}  // namespace ibc
