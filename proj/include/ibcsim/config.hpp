#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibcsim/models.hpp"
#include "ibcsim/state.hpp"

namespace ibc {

struct TimeConfig {
  double dt = 0.0;  // filled from the lattice time scale when absent
  double t_max = 0.0;
  int snapshot_stride = 1;
  bool operator==(const TimeConfig&) const = default;
};

struct InitConfig {
  std::vector<GaussianPacket> packets;
  std::optional<ProbeSpec> probe;
  bool operator==(const InitConfig&) const = default;
};

struct EnsembleConfig {
  std::uint64_t n_traj = 1000;
  std::uint64_t seed = 0;
  double rk4_step = 0.0;  // 0 selects eps / (2 v_typ)
  double node_threshold = 1e-12;
  bool operator==(const EnsembleConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"json", "csv"};
  bool operator==(const OutputConfig&) const = default;
};

struct AnalysisConfig {
  std::vector<double> times;      // empty: {T/2, T}
  int bins = 32;
  std::vector<double> t_compare;  // empty: {T/4, T/2, 3T/4}
  double alpha = 0.01;
  bool operator==(const AnalysisConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> eps_list;
  std::optional<ProbeSpec> probe;
  bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
  ModelKind model = ModelKind::Model4Continuum;
  ModelParams params;
  LatticeSpec lattice;
  TimeConfig time;
  InitConfig init;
  EnsembleConfig ensemble;
  OutputConfig output;
  AnalysisConfig analysis;
  SweepConfig sweep;
  bool operator==(const RunConfig&) const = default;
};

/// Strict JSON parse: unknown keys and every invariant violation are
/// collected and reported together in a ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Fully populated JSON form; parse_config(config_to_json(c).dump()) == c.
nlohmann::json config_to_json(const RunConfig& config);

/// FNV-1a 64 of the canonical JSON with the output section removed, as hex.
std::string config_hash(const RunConfig& config);

/// Initial wavefunction from the packets, or the normalized probe.
SectoredWaveFunction initial_state(const RunConfig& config);

}  // namespace ibc
