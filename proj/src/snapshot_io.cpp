#include "ibcsim/snapshot_io.hpp"

#include <fstream>

#include "ibcsim/errors.hpp"

namespace ibc {

using nlohmann::json;

json snapshot_to_json(const SectoredWaveFunction& psi) {
  const auto& spec = psi.spec();
  json j;
  j["eps"] = spec.eps;
  j["nx"] = spec.nx;
  j["ny"] = spec.ny;
  j["model"] = to_string(spec.model);
  j["time"] = psi.time();
  j["sectors"] = json::array();
  for (const auto& s : psi.sectors()) {
    json sec;
    sec["id"] = s.id;
    std::vector<double> re, im;
    re.reserve(s.size);
    im.reserve(s.size);
    for (const auto& a : psi.sector_amplitudes(s.id)) {
      re.push_back(a.real());
      im.push_back(a.imag());
    }
    sec["re"] = std::move(re);
    sec["im"] = std::move(im);
    j["sectors"].push_back(std::move(sec));
  }
  return j;
}

SectoredWaveFunction snapshot_from_json(const json& j) {
  LatticeSpec spec;
  spec.eps = j.at("eps").get<double>();
  spec.nx = j.at("nx").get<int>();
  spec.ny = j.at("ny").get<int>();
  spec.model = model_kind_from_string(j.at("model").get<std::string>());
  SectoredWaveFunction psi(spec, j.at("time").get<double>());
  for (const auto& sec : j.at("sectors")) {
    const int id = sec.at("id").get<int>();
    auto amp = psi.sector_amplitudes(id);
    const auto re = sec.at("re").get<std::vector<double>>();
    const auto im = sec.at("im").get<std::vector<double>>();
    if (re.size() != amp.size() || im.size() != amp.size())
      throw ShapeError("snapshot sector " + std::to_string(id) + " has the wrong length");
    for (std::size_t k = 0; k < amp.size(); ++k) amp[k] = {re[k], im[k]};
  }
  return psi;
}

json record_to_json(const EvolutionRecord& rec) {
  json j;
  j["dt"] = rec.snapshot_dt();
  j["step_dt"] = rec.step_dt;
  j["stride"] = rec.stride;
  j["t_max"] = rec.t_max;
  j["config_hash"] = rec.config_hash;
  j["max_edge_band_norm"] = rec.max_edge_band_norm;
  j["snapshots"] = json::array();
  for (const auto& s : rec.snapshots) j["snapshots"].push_back(snapshot_to_json(s));
  return j;
}

EvolutionRecord record_from_json(const json& j) {
  EvolutionRecord rec;
  rec.step_dt = j.at("step_dt").get<double>();
  rec.stride = j.at("stride").get<int>();
  rec.t_max = j.at("t_max").get<double>();
  rec.config_hash = j.value("config_hash", std::string{});
  rec.max_edge_band_norm = j.value("max_edge_band_norm", 0.0);
  for (const auto& s : j.at("snapshots")) rec.snapshots.push_back(snapshot_from_json(s));
  return rec;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump() << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

}  // namespace ibc
