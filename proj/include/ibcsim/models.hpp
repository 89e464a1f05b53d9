#pragma once

#include <array>
#include <memory>
#include <vector>

#include "ibcsim/bohm.hpp"
#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/process.hpp"
#include "ibcsim/propagator.hpp"

namespace ibc {

/// Gaussian packet restricted to one sector. Model 4 sector 1 and Model 3
/// sector 1 use the first component of center/width/momentum only; Model 3
/// sector 0 is a constant amplitude.
struct GaussianPacket {
  int sector = 2;
  std::array<double, 2> center{};
  std::array<double, 2> width{1.0, 1.0};
  std::array<double, 2> momentum{};
  double weight = 1.0;

  bool operator==(const GaussianPacket&) const = default;
};

/// Sum of packets, each normalized within its sector and scaled by
/// sqrt(weight / total weight). Throws DegenerateInputError on zero weight.
SectoredWaveFunction build_wavepacket(const LatticeSpec& spec, const std::vector<GaussianPacket>& packets);

/// Closed-form family satisfying the boundary condition exactly:
///   Model 4: psi2 = (a + i b y) G(x, y),  psi1 = -(hbar^2 / 2 m g) a G(x, 0)
///   Model 3: w = (a + i b r) G(r),        psi0 = -(hbar^2 / 2 m g~) a G(0)
/// with G a Gaussian of the given center and width (Model 3 reads r0 and the
/// width from the first components). `lower_scale`, when set, is checked
/// against the value the boundary condition requires.
struct ProbeSpec {
  double a = 1.0;
  double b = 0.5;
  std::array<double, 2> center{0.0, 1.0};
  std::array<double, 2> width{1.0, 1.0};
  std::optional<double> lower_scale;

  bool operator==(const ProbeSpec&) const = default;
};

/// Samples the probe onto the lattice (not normalized). Throws ProbeSpecError
/// when g = 0, a = 0, or lower_scale disagrees with the boundary condition by
/// more than 1e-10 relative.
SectoredWaveFunction build_probe(const ModelParams& params, const LatticeSpec& spec, const ProbeSpec& probe);
/// Coefficient c with psi1 = c a G (Model 4) or psi0 = c a G(0) (Model 3).
double probe_lower_scale(const ModelParams& params, const LatticeSpec& spec);

/// RK4 step eps / (2 v_typ), v_typ the |psi|^2-weighted 99th-percentile speed
/// over the lattice sites of psi; capped at `cap` when v_typ vanishes.
double default_rk4_step(const HamiltonianOp& h, const SectoredWaveFunction& psi, double cap,
                        double node_threshold = 1e-12);

/// Shared plumbing for adapters that read psi_t from an EvolutionRecord.
class RecordDynamics : public Dynamics {
 public:
  RecordDynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold);

  const EvolutionRecord& record() const { return *record_; }
  const HamiltonianOp& hamiltonian() const { return h_; }
  const BohmField& field() const { return field_; }
  PsiView view_at(double t) const;

  double next_rate_break(double t) const override;
  double rate_scale() const override { return rate_scale_; }
  /// Multiplies every upward rate; used only for negative-control runs.
  void set_rate_scale(double s) { rate_scale_ = s; }

 protected:
  const EvolutionRecord* record_;
  HamiltonianOp h_;
  BohmField field_;
  double rate_scale_ = 1.0;
};

/// Model 4: sector 1 is the x-line, sector 2 the half-plane y >= 0; hitting
/// y = 0 at x sends the particle to x in sector 1, and from x it jumps to (x, 0)
/// at the boundary-current rate.
class Model4Dynamics final : public RecordDynamics {
 public:
  /// Throws ModelMismatchError for a Model 3 record.
  Model4Dynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold = 1e-12);

  int dimension(int sector) const override { return sector == 1 ? 1 : 2; }
  std::array<double, 2> velocity(double t, const Configuration& q) const override;
  double boundary_distance(const Configuration& q) const override;
  Configuration project_to_boundary(const Configuration& q) const override;
  Configuration boundary_map(const Configuration& q) const override;
  bool can_jump_up(int sector) const override { return sector == 1; }
  double upward_rate(double t, const Configuration& q) const override;
  double rate_majorant(double t0, double t1, const Configuration& q) const override;
  Configuration arrival_config(double t, const Configuration& q, double u) const override;
  void normalize_position(Configuration& q) const override;
  bool in_edge_band(const Configuration& q) const override;

 private:
  std::vector<std::vector<double>> site_rates_;  // [snapshot][x site]
  std::vector<double> max_rates_;
};

/// Model 3 s-wave: sector 0 is the empty configuration, sector 1 the radial
/// half-line. Reaching r = 0 absorbs the particle; emission starts it at r = 0.
class Model3Dynamics final : public RecordDynamics {
 public:
  /// Throws ModelMismatchError for a Model 4 record.
  Model3Dynamics(const EvolutionRecord& record, const ModelParams& params, double node_threshold = 1e-12);

  int dimension(int sector) const override { return sector == 0 ? 0 : 1; }
  std::array<double, 2> velocity(double t, const Configuration& q) const override;
  double boundary_distance(const Configuration& q) const override;
  Configuration project_to_boundary(const Configuration& q) const override;
  Configuration boundary_map(const Configuration& q) const override;
  bool can_jump_up(int sector) const override { return sector == 0; }
  double upward_rate(double t, const Configuration& q) const override;
  double rate_majorant(double t0, double t1, const Configuration& q) const override;
  Configuration arrival_config(double t, const Configuration& q, double u) const override;
  bool in_edge_band(const Configuration& q) const override;

  double emission_velocity(double t) const;

 private:
  std::vector<double> rates_;  // [snapshot]
};

std::unique_ptr<RecordDynamics> make_dynamics(const EvolutionRecord& record, const ModelParams& params,
                                              double node_threshold = 1e-12);

}  // namespace ibc
