#pragma once

#include <cmath>
#include <random>

#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/state.hpp"

namespace testing {

inline ibc::LatticeSpec model4(double eps, int nx, int ny, ibc::ModelKind kind = ibc::ModelKind::Model4Continuum) {
  return {eps, nx, ny, kind};
}

inline ibc::LatticeSpec model3(double eps, int nr) { return {eps, 0, nr, ibc::ModelKind::Model3Radial}; }

inline ibc::SectoredWaveFunction random_state(const ibc::LatticeSpec& spec, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  ibc::SectoredWaveFunction psi(spec);
  for (auto& a : psi.amplitudes()) a = {n(gen), n(gen)};
  return psi;
}

inline ibc::SectoredWaveFunction random_real_state(const ibc::LatticeSpec& spec, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  ibc::SectoredWaveFunction psi(spec);
  for (auto& a : psi.amplitudes()) a = {n(gen), 0.0};
  return psi;
}

// Robin coefficient sets with alpha delta - beta gamma = 1.
inline std::vector<ibc::RobinParams> robin_sets() {
  return {{1.0, 0.02, 0.0, 1.0, 0.0}, {2.0, 0.15, 0.5, 0.5375, 0.3}, {0.5, -0.02, 1.0, 1.96, -0.7}};
}

}  // namespace testing
