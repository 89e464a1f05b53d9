#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ibcsim/analysis.hpp"
#include "ibcsim/bohm.hpp"
#include "ibcsim/config.hpp"
#include "ibcsim/errors.hpp"
#include "ibcsim/hamiltonian.hpp"
#include "ibcsim/lattice_bell.hpp"
#include "ibcsim/models.hpp"
#include "ibcsim/propagator.hpp"
#include "ibcsim/runner.hpp"
#include "ibcsim/snapshot_io.hpp"

namespace py = pybind11;
using namespace ibc;

namespace {

// JSON values cross the boundary as Python objects through the json module.
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

RunConfig config_from(const py::object& source) {
  if (py::isinstance<py::dict>(source))
    return parse_config(py::module_::import("json").attr("dumps")(source).cast<std::string>());
  const auto text = source.cast<std::string>();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config(text);
  return load_config(text);
}

RunContext context_from(const py::object& source, std::optional<std::uint64_t> seed,
                        std::optional<std::string> out_dir, int threads) {
  RunOptions opt;
  opt.seed = seed;
  opt.out_dir = std::move(out_dir);
  opt.threads = threads;
  opt.quiet = true;
  return RunContext::make(config_from(source), opt);
}

py::array_t<cplx> amplitudes_of(const SectoredWaveFunction& psi) {
  py::array_t<cplx> out(static_cast<py::ssize_t>(psi.size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t k = 0; k < psi.size(); ++k) v(static_cast<py::ssize_t>(k)) = psi[k];
  return out;
}

SectoredWaveFunction state_from(const LatticeSpec& spec, const py::array_t<cplx>& amps, double time) {
  SectoredWaveFunction psi(spec, time);
  if (static_cast<std::size_t>(amps.size()) != psi.size())
    throw ShapeError("expected " + std::to_string(psi.size()) + " amplitudes");
  auto v = amps.unchecked<1>();
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = v(static_cast<py::ssize_t>(k));
  return psi;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bell-type processes for interior-boundary-condition Hamiltonians";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NodeProximityError>(m, "NodeProximityError", PyExc_RuntimeError);
  py::register_exception<HorizonError>(m, "HorizonError", PyExc_IndexError);

  py::enum_<ModelKind>(m, "ModelKind")
      .value("Model4Lattice", ModelKind::Model4Lattice)
      .value("Model4Continuum", ModelKind::Model4Continuum)
      .value("Model3Radial", ModelKind::Model3Radial);

  py::class_<RobinParams>(m, "RobinParams")
      .def(py::init<double, double, double, double, double>(), py::arg("alpha") = 1.0, py::arg("beta") = 0.0,
           py::arg("gamma") = 0.0, py::arg("delta") = 1.0, py::arg("theta") = 0.0)
      .def_readwrite("alpha", &RobinParams::alpha)
      .def_readwrite("beta", &RobinParams::beta)
      .def_readwrite("gamma", &RobinParams::gamma)
      .def_readwrite("delta", &RobinParams::delta)
      .def_readwrite("theta", &RobinParams::theta)
      .def("determinant", &RobinParams::determinant);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double hbar, double mass, double g, std::optional<RobinParams> robin) {
             ModelParams p{hbar, mass, g, robin};
             p.validate();
             return p;
           }),
           py::arg("hbar") = 1.0, py::arg("mass") = 1.0, py::arg("g") = 1.0, py::arg("robin") = py::none())
      .def_readwrite("hbar", &ModelParams::hbar)
      .def_readwrite("mass", &ModelParams::mass)
      .def_readwrite("g", &ModelParams::g)
      .def_readwrite("robin", &ModelParams::robin);

  py::class_<LatticeSpec>(m, "LatticeSpec")
      .def(py::init([](double eps, int nx, int ny, ModelKind model) {
             LatticeSpec s{eps, nx, ny, model};
             s.validate();
             return s;
           }),
           py::arg("eps"), py::arg("nx"), py::arg("ny"), py::arg("model") = ModelKind::Model4Continuum)
      .def_readonly("eps", &LatticeSpec::eps)
      .def_readonly("nx", &LatticeSpec::nx)
      .def_readonly("ny", &LatticeSpec::ny)
      .def_readonly("model", &LatticeSpec::model)
      .def("site_count", &LatticeSpec::site_count)
      .def("x_of", &LatticeSpec::x_of);

  py::class_<SectoredWaveFunction>(m, "WaveFunction")
      .def(py::init([](const LatticeSpec& spec, const py::array_t<cplx>& amps, double time) {
             return state_from(spec, amps, time);
           }),
           py::arg("spec"), py::arg("amplitudes"), py::arg("time") = 0.0)
      .def_property_readonly("spec", &SectoredWaveFunction::spec)
      .def_property_readonly("time", &SectoredWaveFunction::time)
      .def_property_readonly("amplitudes", &amplitudes_of)
      .def("sector_probability", [](const SectoredWaveFunction& psi, int id) { return sector_probability(psi, id); })
      .def("norm", [](const SectoredWaveFunction& psi) { return norm(psi); })
      .def("normalized", [](const SectoredWaveFunction& psi) { return normalize(psi); })
      .def("__len__", &SectoredWaveFunction::size);

  m.def("inner_product", &inner_product, py::arg("a"), py::arg("b"));

  py::class_<GaussianPacket>(m, "GaussianPacket")
      .def(py::init([](int sector, std::array<double, 2> center, std::array<double, 2> width,
                       std::array<double, 2> momentum, double weight) {
             return GaussianPacket{sector, center, width, momentum, weight};
           }),
           py::arg("sector"), py::arg("center"), py::arg("width"), py::arg("momentum") = std::array<double, 2>{},
           py::arg("weight") = 1.0);
  m.def("build_wavepacket", &build_wavepacket, py::arg("spec"), py::arg("packets"));

  py::class_<ProbeSpec>(m, "ProbeSpec")
      .def(py::init([](double a, double b, std::array<double, 2> center, std::array<double, 2> width) {
             return ProbeSpec{a, b, center, width, std::nullopt};
           }),
           py::arg("a") = 1.0, py::arg("b") = 0.5, py::arg("center") = std::array<double, 2>{0.0, 1.0},
           py::arg("width") = std::array<double, 2>{1.0, 1.0});
  m.def("build_probe", &build_probe, py::arg("params"), py::arg("spec"), py::arg("probe"));

  py::class_<HamiltonianOp>(m, "Hamiltonian")
      .def(py::init<const ModelParams&, const LatticeSpec&>(), py::arg("params"), py::arg("spec"))
      .def("apply", py::overload_cast<const SectoredWaveFunction&>(&HamiltonianOp::apply, py::const_))
      .def("energy", [](const HamiltonianOp& h, const SectoredWaveFunction& psi) { return energy(h, psi); })
      .def("measure_of", &HamiltonianOp::measure_of);

  py::class_<EvolutionRecord>(m, "EvolutionRecord")
      .def_readonly("snapshots", &EvolutionRecord::snapshots)
      .def_readonly("step_dt", &EvolutionRecord::step_dt)
      .def_readonly("stride", &EvolutionRecord::stride)
      .def_readonly("max_edge_band_norm", &EvolutionRecord::max_edge_band_norm)
      .def("horizon", &EvolutionRecord::horizon)
      .def("interpolate", &EvolutionRecord::interpolate)
      .def("to_dict", [](const EvolutionRecord& r) { return to_python(record_to_json(r)); });

  m.def(
      "evolve",
      [](const HamiltonianOp& h, const SectoredWaveFunction& psi0, double dt, double t_max, int stride) {
        py::gil_scoped_release release;
        return evolve(h, psi0, dt, t_max, stride);
      },
      py::arg("hamiltonian"), py::arg("psi0"), py::arg("dt"), py::arg("t_max"), py::arg("stride") = 1);
  m.def("default_time_step", &default_time_step, py::arg("params"), py::arg("spec"));

  m.def(
      "velocity",
      [](const HamiltonianOp& h, const SectoredWaveFunction& psi, int sector, std::vector<double> coords) {
        Configuration q{sector, static_cast<int>(coords.size()), {}};
        for (std::size_t d = 0; d < coords.size() && d < 2; ++d) q.coords[d] = coords[d];
        return velocity_at(h, psi, q);
      },
      py::arg("hamiltonian"), py::arg("psi"), py::arg("sector"), py::arg("coords"));
  m.def("jump_rate_model4", py::overload_cast<const HamiltonianOp&, const SectoredWaveFunction&, double, double>(
                                &jump_rate_model4),
        py::arg("hamiltonian"), py::arg("psi"), py::arg("x"), py::arg("node_threshold") = 1e-12);
  m.def("jump_rate_model3", py::overload_cast<const HamiltonianOp&, const SectoredWaveFunction&, double>(
                                &jump_rate_model3_total),
        py::arg("hamiltonian"), py::arg("psi"), py::arg("node_threshold") = 1e-12);
  m.def("emission_velocity_model3",
        py::overload_cast<const HamiltonianOp&, const SectoredWaveFunction&, double>(&emission_velocity_model3),
        py::arg("hamiltonian"), py::arg("psi"), py::arg("node_threshold") = 1e-12);
  m.def("master_equation_residual", &master_equation_residual, py::arg("hamiltonian"), py::arg("psi"));
  m.def(
      "bell_rates",
      [](const HamiltonianOp& h, const SectoredWaveFunction& psi, std::size_t from) {
        std::vector<std::pair<std::size_t, double>> out;
        for (const auto& r : bell_rates(h, psi, from)) out.emplace_back(r.site, r.rate);
        return out;
      },
      py::arg("hamiltonian"), py::arg("psi"), py::arg("site"));

  m.def(
      "continuum_limit_sweep",
      [](const ModelParams& p, const std::vector<double>& eps, const ProbeSpec& probe) {
        const auto t = continuum_limit_sweep(p, eps, probe);
        py::list rows;
        for (const auto& r : t.rows)
          rows.append(py::dict(py::arg("eps") = r.eps, py::arg("up_rate") = r.up_rate, py::arg("up_err") = r.up_err,
                               py::arg("down_rate") = r.down_rate, py::arg("eps_times_down") = r.eps_times_down));
        return py::dict(py::arg("rows") = rows, py::arg("continuum_rate") = t.continuum_rate,
                        py::arg("eps_down_limit") = t.eps_down_limit, py::arg("up_order") = t.up_order,
                        py::arg("down_order") = t.down_order,
                        py::arg("eps_down_last_change") = t.eps_down_last_change);
      },
      py::arg("params"), py::arg("eps_list"), py::arg("probe") = ProbeSpec{});

  m.def(
      "config_hash", [](const py::object& source) { return config_hash(config_from(source)); },
      py::arg("config"), "Hash of a config given as a dict, JSON text or file path.");
  m.def(
      "normalize_config", [](const py::object& source) { return to_python(config_to_json(config_from(source))); },
      py::arg("config"), "Fully populated form of a config given as a dict, JSON text or file path.");

  m.def(
      "equivariance_report",
      [](const py::object& source, std::optional<std::uint64_t> seed, int threads) {
        const auto ctx = context_from(source, seed, std::nullopt, threads);
        py::gil_scoped_release release;
        const auto rec = run_evolution(ctx);
        const auto times = ctx.analysis_times();
        const auto stats = equivariance_report(rec, run_ensemble(ctx, rec, times), times, ctx.config.analysis.bins);
        auto j = stats_to_json(stats);
        j["pass"] = equivariance_pass(stats);
        py::gil_scoped_acquire acquire;
        return to_python(j);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1);
  m.def(
      "sample",
      [](const py::object& source, std::optional<std::uint64_t> seed, int threads, std::vector<double> times) {
        const auto ctx = context_from(source, seed, std::nullopt, threads);
        if (times.empty()) times = ctx.analysis_times();
        nlohmann::json out = nlohmann::json::array();
        {
          py::gil_scoped_release release;
          const auto rec = run_evolution(ctx);
          const auto ens = run_ensemble(ctx, rec, times);
          for (const auto& tr : ens.trajectories) out.push_back(trajectory_to_json(tr));
        }
        return to_python(out);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1,
      py::arg("times") = std::vector<double>{},
      "Per-trajectory event lists, each event {traj, t, kind, sector, coords, [to_sector, to_coords]}.");

  m.def(
      "run",
      [](const std::string& command, const py::object& source, std::optional<std::uint64_t> seed,
         std::optional<std::string> out_dir, int threads) {
        const auto ctx = context_from(source, seed, std::move(out_dir), threads);
        py::gil_scoped_release release;
        if (command == "evolve") return cmd_evolve(ctx);
        if (command == "sample") return cmd_sample(ctx);
        if (command == "equivariance") return cmd_equivariance(ctx);
        if (command == "reverse") return cmd_reverse(ctx);
        if (command == "rates") return cmd_rates(ctx);
        if (command == "lattice-limit") return cmd_lattice_limit(ctx);
        throw ConfigError({"unknown command '" + command + "'"});
      },
      py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("out_dir") = py::none(),
      py::arg("threads") = 1, "Runs a CLI subcommand in process and returns its exit code.");
}
