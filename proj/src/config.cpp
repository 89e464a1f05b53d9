#include "ibcsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ibcsim/errors.hpp"
#include "ibcsim/propagator.hpp"

namespace ibc {

namespace {

using nlohmann::json;

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Collects every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      errors.push_back(path + ": expected an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      (void)v;
      if (!allowed.count(k)) errors.push_back("unknown key '" + join_path(path, k) + "'");
    }
    return true;
  }

  const json* field(const json& obj, const std::string& key, const std::string& path, bool required) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) errors.push_back("missing required key '" + join_path(path, key) + "'");
      return nullptr;
    }
    return &*it;
  }

  void number(const json& obj, const std::string& key, const std::string& path, double& out, bool required = false) {
    if (const json* v = field(obj, key, path, required)) {
      if (v->is_number())
        out = v->get<double>();
      else
        errors.push_back(join_path(path, key) + ": expected a number");
    }
  }

  void integer(const json& obj, const std::string& key, const std::string& path, int& out, bool required = false) {
    if (const json* v = field(obj, key, path, required)) {
      if (v->is_number_integer())
        out = v->get<int>();
      else
        errors.push_back(join_path(path, key) + ": expected an integer");
    }
  }

  void unsigned_integer(const json& obj, const std::string& key, const std::string& path, std::uint64_t& out,
                        bool required = false) {
    if (const json* v = field(obj, key, path, required)) {
      if (v->is_number_unsigned())
        out = v->get<std::uint64_t>();
      else
        errors.push_back(join_path(path, key) + ": expected a non-negative integer");
    }
  }

  void string(const json& obj, const std::string& key, const std::string& path, std::string& out,
              bool required = false) {
    if (const json* v = field(obj, key, path, required)) {
      if (v->is_string())
        out = v->get<std::string>();
      else
        errors.push_back(join_path(path, key) + ": expected a string");
    }
  }

  void numbers(const json& obj, const std::string& key, const std::string& path, std::vector<double>& out) {
    if (const json* v = field(obj, key, path, false)) {
      out.clear();
      if (!v->is_array()) {
        errors.push_back(join_path(path, key) + ": expected an array of numbers");
        return;
      }
      for (const auto& e : *v) {
        if (!e.is_number()) {
          errors.push_back(join_path(path, key) + ": expected an array of numbers");
          return;
        }
        out.push_back(e.get<double>());
      }
    }
  }

  void pair(const json& obj, const std::string& key, const std::string& path, std::array<double, 2>& out) {
    std::vector<double> v;
    if (!obj.contains(key)) return;
    numbers(obj, key, path, v);
    if (v.empty() || v.size() > 2) {
      errors.push_back(join_path(path, key) + ": expected 1 or 2 numbers");
      return;
    }
    out[0] = v[0];
    out[1] = v.size() > 1 ? v[1] : 0.0;
  }
};

ProbeSpec read_probe(Reader& r, const json& j, const std::string& path) {
  ProbeSpec p;
  if (!r.object(j, path, {"a", "b", "center", "width", "lower_scale"})) return p;
  r.number(j, "a", path, p.a, true);
  r.number(j, "b", path, p.b, true);
  r.pair(j, "center", path, p.center);
  r.pair(j, "width", path, p.width);
  if (j.contains("lower_scale")) {
    double c = 0.0;
    r.number(j, "lower_scale", path, c);
    p.lower_scale = c;
  }
  if (p.a == 0.0) r.errors.push_back(path + ".a: must be nonzero");
  if (!(p.width[0] > 0.0)) r.errors.push_back(path + ".width: must be positive");
  return p;
}

json probe_to_json(const ProbeSpec& p) {
  json j{{"a", p.a}, {"b", p.b}, {"center", p.center}, {"width", p.width}};
  if (p.lower_scale) j["lower_scale"] = *p.lower_scale;
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  Reader r;
  RunConfig c;
  if (!r.object(root, "",
                {"model", "params", "lattice", "time", "init", "ensemble", "output", "analysis", "sweep"}))
    throw ConfigError(r.errors);

  std::string model;
  r.string(root, "model", "", model, true);
  if (!model.empty()) {
    try {
      c.model = model_kind_from_string(model);
    } catch (const DomainError&) {
      r.errors.push_back("model: unknown model '" + model + "' (Model4Lattice, Model4Continuum, Model3Radial)");
    }
  }
  const bool m3 = c.model == ModelKind::Model3Radial;

  if (const json* p = r.field(root, "params", "", true); p && r.object(*p, "params", {"hbar", "mass", "g", "robin"})) {
    r.number(*p, "hbar", "params", c.params.hbar);
    r.number(*p, "mass", "params", c.params.mass);
    r.number(*p, "g", "params", c.params.g, true);
    if (const json* rb = r.field(*p, "robin", "params", false);
        rb && r.object(*rb, "params.robin", {"alpha", "beta", "gamma", "delta", "theta"})) {
      RobinParams rp;
      r.number(*rb, "alpha", "params.robin", rp.alpha, true);
      r.number(*rb, "beta", "params.robin", rp.beta, true);
      r.number(*rb, "gamma", "params.robin", rp.gamma, true);
      r.number(*rb, "delta", "params.robin", rp.delta, true);
      r.number(*rb, "theta", "params.robin", rp.theta);
      if (std::abs(rp.determinant() - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "params.robin: alpha*delta - beta*gamma must equal 1 (got " << rp.determinant() << ")";
        r.errors.push_back(os.str());
      }
      if (m3) r.errors.push_back("params.robin: Robin coefficients apply to Model 4 only");
      c.params.robin = rp;
    }
    if (!(c.params.hbar > 0.0)) r.errors.push_back("params.hbar: must be positive");
    if (!(c.params.mass > 0.0)) r.errors.push_back("params.mass: must be positive");
  }

  c.lattice.model = c.model;
  if (const json* l = r.field(root, "lattice", "", true); l && r.object(*l, "lattice", {"eps", "nx", "ny"})) {
    r.number(*l, "eps", "lattice", c.lattice.eps, true);
    r.integer(*l, "nx", "lattice", c.lattice.nx, !m3);
    r.integer(*l, "ny", "lattice", c.lattice.ny, true);
    if (!(c.lattice.eps > 0.0)) r.errors.push_back("lattice.eps: must be positive");
    if (m3 && c.lattice.nx != 0) r.errors.push_back("lattice.nx: must be 0 for Model3Radial");
    if (!m3 && c.lattice.nx < 4) r.errors.push_back("lattice.nx: must be at least 4");
    if (c.lattice.ny < 4) r.errors.push_back("lattice.ny: must be at least 4");
    if (c.lattice.nx >= 0 && c.lattice.ny > 0 &&
        static_cast<double>(c.lattice.nx) * (c.lattice.ny + 1) + 1 >= 2147483648.0)
      r.errors.push_back("lattice: total site count must stay below 2^31");
  }

  bool dt_given = false;
  if (const json* t = r.field(root, "time", "", true);
      t && r.object(*t, "time", {"dt", "t_max", "snapshot_stride"})) {
    dt_given = t->contains("dt");
    r.number(*t, "dt", "time", c.time.dt);
    r.number(*t, "t_max", "time", c.time.t_max, true);
    r.integer(*t, "snapshot_stride", "time", c.time.snapshot_stride);
    if (dt_given && !(c.time.dt > 0.0)) r.errors.push_back("time.dt: must be positive");
    if (c.time.t_max < 0.0) r.errors.push_back("time.t_max: must be non-negative");
    if (c.time.snapshot_stride < 1) r.errors.push_back("time.snapshot_stride: must be at least 1");
  }

  if (const json* in = r.field(root, "init", "", false); in && r.object(*in, "init", {"packets", "probe"})) {
    if (const json* ps = r.field(*in, "packets", "init", false)) {
      if (!ps->is_array()) {
        r.errors.push_back("init.packets: expected an array");
      } else {
        double total = 0.0;
        for (std::size_t k = 0; k < ps->size(); ++k) {
          const std::string path = "init.packets[" + std::to_string(k) + "]";
          const json& pj = (*ps)[k];
          GaussianPacket gp;
          if (!r.object(pj, path, {"sector", "center", "width", "momentum", "weight"})) continue;
          r.integer(pj, "sector", path, gp.sector, true);
          r.pair(pj, "center", path, gp.center);
          r.pair(pj, "width", path, gp.width);
          r.pair(pj, "momentum", path, gp.momentum);
          r.number(pj, "weight", path, gp.weight);
          const bool sector_ok = m3 ? (gp.sector == 0 || gp.sector == 1) : (gp.sector == 1 || gp.sector == 2);
          if (!sector_ok) r.errors.push_back(path + ".sector: not a sector of " + to_string(c.model));
          if (gp.weight < 0.0) r.errors.push_back(path + ".weight: must be non-negative");
          const bool two_d = !m3 && gp.sector == 2;
          if (!(gp.width[0] > 0.0) || (two_d && !(gp.width[1] > 0.0)))
            r.errors.push_back(path + ".width: must be positive");
          total += gp.weight;
          c.init.packets.push_back(gp);
        }
        if (!c.init.packets.empty() && !(total > 0.0)) r.errors.push_back("init.packets: weights sum to zero");
      }
    }
    if (const json* pr = r.field(*in, "probe", "init", false)) c.init.probe = read_probe(r, *pr, "init.probe");
    if (c.init.probe && c.params.g == 0.0) r.errors.push_back("init.probe: the probe family needs g != 0");
  }

  if (const json* e = r.field(root, "ensemble", "", false);
      e && r.object(*e, "ensemble", {"n_traj", "seed", "rk4_step", "node_threshold"})) {
    r.unsigned_integer(*e, "n_traj", "ensemble", c.ensemble.n_traj);
    r.unsigned_integer(*e, "seed", "ensemble", c.ensemble.seed);
    r.number(*e, "rk4_step", "ensemble", c.ensemble.rk4_step);
    r.number(*e, "node_threshold", "ensemble", c.ensemble.node_threshold);
    if (c.ensemble.n_traj < 1) r.errors.push_back("ensemble.n_traj: must be at least 1");
    if (c.ensemble.rk4_step < 0.0) r.errors.push_back("ensemble.rk4_step: must be non-negative");
    if (!(c.ensemble.node_threshold > 0.0)) r.errors.push_back("ensemble.node_threshold: must be positive");
  }

  if (const json* o = r.field(root, "output", "", false); o && r.object(*o, "output", {"dir", "formats"})) {
    r.string(*o, "dir", "output", c.output.dir);
    if (const json* f = r.field(*o, "formats", "output", false)) {
      c.output.formats.clear();
      if (!f->is_array()) {
        r.errors.push_back("output.formats: expected an array of strings");
      } else {
        for (const auto& s : *f) {
          if (!s.is_string()) {
            r.errors.push_back("output.formats: expected an array of strings");
            break;
          }
          const auto v = s.get<std::string>();
          if (v != "json" && v != "csv" && v != "jsonl") r.errors.push_back("output.formats: unknown format '" + v + "'");
          c.output.formats.push_back(v);
        }
      }
    }
  }

  if (const json* a = r.field(root, "analysis", "", false);
      a && r.object(*a, "analysis", {"times", "bins", "t_compare", "alpha"})) {
    r.numbers(*a, "times", "analysis", c.analysis.times);
    r.integer(*a, "bins", "analysis", c.analysis.bins);
    r.numbers(*a, "t_compare", "analysis", c.analysis.t_compare);
    r.number(*a, "alpha", "analysis", c.analysis.alpha);
    if (c.analysis.bins < 1) r.errors.push_back("analysis.bins: must be at least 1");
    for (double t : c.analysis.times)
      if (t < 0.0 || t > c.time.t_max) r.errors.push_back("analysis.times: every time must lie in [0, t_max]");
    for (double t : c.analysis.t_compare)
      if (t < 0.0 || t > c.time.t_max) r.errors.push_back("analysis.t_compare: every time must lie in [0, t_max]");
    if (!(c.analysis.alpha > 0.0 && c.analysis.alpha < 1.0)) r.errors.push_back("analysis.alpha: must lie in (0, 1)");
  }

  if (const json* s = r.field(root, "sweep", "", false); s && r.object(*s, "sweep", {"eps_list", "probe"})) {
    r.numbers(*s, "eps_list", "sweep", c.sweep.eps_list);
    for (double e : c.sweep.eps_list)
      if (!(e > 0.0)) r.errors.push_back("sweep.eps_list: every eps must be positive");
    if (const json* pr = r.field(*s, "probe", "sweep", false)) c.sweep.probe = read_probe(r, *pr, "sweep.probe");
  }

  if (!r.errors.empty()) throw ConfigError(r.errors);
  if (!dt_given) c.time.dt = default_time_step(c.params, c.lattice);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const RunConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["params"] = {{"hbar", c.params.hbar}, {"mass", c.params.mass}, {"g", c.params.g}};
  if (c.params.robin) {
    const auto& rp = *c.params.robin;
    j["params"]["robin"] = {
        {"alpha", rp.alpha}, {"beta", rp.beta}, {"gamma", rp.gamma}, {"delta", rp.delta}, {"theta", rp.theta}};
  }
  j["lattice"] = {{"eps", c.lattice.eps}, {"nx", c.lattice.nx}, {"ny", c.lattice.ny}};
  j["time"] = {{"dt", c.time.dt}, {"t_max", c.time.t_max}, {"snapshot_stride", c.time.snapshot_stride}};
  json packets = json::array();
  for (const auto& p : c.init.packets)
    packets.push_back({{"sector", p.sector},
                       {"center", p.center},
                       {"width", p.width},
                       {"momentum", p.momentum},
                       {"weight", p.weight}});
  j["init"] = {{"packets", packets}};
  if (c.init.probe) j["init"]["probe"] = probe_to_json(*c.init.probe);
  j["ensemble"] = {{"n_traj", c.ensemble.n_traj},
                   {"seed", c.ensemble.seed},
                   {"rk4_step", c.ensemble.rk4_step},
                   {"node_threshold", c.ensemble.node_threshold}};
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
  j["analysis"] = {{"times", c.analysis.times},
                   {"bins", c.analysis.bins},
                   {"t_compare", c.analysis.t_compare},
                   {"alpha", c.analysis.alpha}};
  j["sweep"] = {{"eps_list", c.sweep.eps_list}};
  if (c.sweep.probe) j["sweep"]["probe"] = probe_to_json(*c.sweep.probe);
  return j;
}

std::string config_hash(const RunConfig& config) {
  json j = config_to_json(config);
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SectoredWaveFunction initial_state(const RunConfig& config) {
  if (!config.init.packets.empty()) return build_wavepacket(config.lattice, config.init.packets);
  if (config.init.probe) return normalize(build_probe(config.params, config.lattice, *config.init.probe));
  throw ConfigError({"init: neither packets nor probe given"});
}

}  // namespace ibc
