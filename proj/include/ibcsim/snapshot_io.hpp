#pragma once

#include <string>

#include <json.hpp>

#include "ibcsim/propagator.hpp"
#include "ibcsim/state.hpp"

namespace ibc {

/// JSON container {eps, nx, ny, model, time, sectors: [{id, re, im}]};
/// sector arrays are row-major with x fastest.
nlohmann::json snapshot_to_json(const SectoredWaveFunction& psi);
SectoredWaveFunction snapshot_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const EvolutionRecord& rec);
EvolutionRecord record_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace ibc
