#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ibcsim/state.hpp"

namespace ibc {

enum class HamiltonianVariant { Model4Dirichlet, Model4Robin, Model3Radial };

/// Lattice IBC Hamiltonian applied matrix-free as a stencil.
///
/// The boundary row (y = 0, or r = 0 for Model 3) is not stored; its value is
/// eliminated through the discretized boundary condition
///
///   psi2(x, 0) = lower_coeff * psi1(x) + row1_coeff * psi2(x, eps)
///
/// which for the Dirichlet case reads psi2(x, 0) = -(2 m g / hbar^2) psi1(x).
/// The Robin case solves e^{i theta}(alpha psi0 + beta (psi1 - psi0)/eps) =
/// -(2 m g / hbar^2) psi_lower for psi0. For Model 3 the same construction acts
/// on (psi0, w) with w = sqrt(4 pi) r psi1 and the coupling g / sqrt(4 pi).
class HamiltonianOp {
 public:
  struct Elimination {
    cplx lower_coeff;  // multiplies psi1(x) (or psi0 for Model 3)
    cplx row1_coeff;   // multiplies psi2(x, eps) (or w_1)
  };

  /// Throws SingularDiscretizationError when the Robin elimination denominator
  /// |alpha - beta/eps| falls below 1e-12 / eps.
  HamiltonianOp(const ModelParams& params, const LatticeSpec& spec);

  HamiltonianVariant variant() const { return variant_; }
  const ModelParams& params() const { return params_; }
  const LatticeSpec& spec() const { return spec_; }
  const Elimination& elimination() const { return elim_; }
  /// g for Model 4, g / sqrt(4 pi) for Model 3.
  double effective_coupling() const { return g_eff_; }

  SectoredWaveFunction apply(const SectoredWaveFunction& psi) const;
  void apply(std::span<const cplx> in, std::span<cplx> out) const;

  cplx boundary_value(cplx lower, cplx row1) const {
    return elim_.lower_coeff * lower + elim_.row1_coeff * row1;
  }
  /// Boundary amplitude psi2(x_i, 0) (Model 4) or w_0 (Model 3, x_index ignored).
  cplx eliminated_boundary_value(const SectoredWaveFunction& psi, int x_index) const;

  /// Coefficient of psi(col) in (H psi)(row).
  cplx stencil_entry(std::size_t row, std::size_t col) const;
  /// <row|H|col> with Kronecker-delta kets: mu(row) * (H delta_col)(row).
  cplx matrix_element(std::size_t row, std::size_t col) const;
  /// All (col, coefficient) pairs of one stencil row, diagonal included.
  void row_stencil(std::size_t row, std::vector<std::pair<std::size_t, cplx>>& out) const;
  /// Off-diagonal couplings q != col with <q|H|col>.
  void column_couplings(std::size_t col, std::vector<std::pair<std::size_t, cplx>>& out) const;

  double measure_of(std::size_t site) const;

 private:
  void apply_model4(std::span<const cplx> in, std::span<cplx> out) const;
  void apply_model3(std::span<const cplx> in, std::span<cplx> out) const;

  ModelParams params_;
  LatticeSpec spec_;
  HamiltonianVariant variant_;
  double kin_ = 0.0;  // hbar^2 / (2 m eps^2)
  double g_eff_ = 0.0;
  Elimination elim_{};
  cplx lower_diag_{};   // extra diagonal on the lower-sector rows
  cplx lower_to_row1_{};  // coefficient of psi2(x, eps) in (H psi)^(1)(x)
  cplx row1_to_lower_{};  // coefficient of psi1(x) in (H psi)^(2)(x, eps)
  cplx row1_diag_{};      // extra diagonal on the y = eps row
};

double energy(const HamiltonianOp& h, const SectoredWaveFunction& psi);

/// Time-reversal image: complex conjugation, with the extra phase
/// e^{-2 i theta} on the upper sector when a Robin phase is present.
SectoredWaveFunction time_conjugate(const HamiltonianOp& h, const SectoredWaveFunction& psi);

}  // namespace ibc
