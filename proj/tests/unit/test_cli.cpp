#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / ("ibcsim_cli_test_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

const fs::path& workdir() {
  static const Scratch scratch;
  return scratch.dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI and returns its exit status; stderr goes to workdir()/stderr.txt.
int run(const std::string& args) {
  const std::string cmd = std::string(IBCSIM_CLI_PATH) + " " + args + " --quiet > " +
                          (workdir() / "stdout.txt").string() + " 2> " + (workdir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kLattice = R"({
  "model": "Model4Lattice",
  "params": {"g": 0.8},
  "lattice": {"eps": 0.2, "nx": 16, "ny": 14},
  "time": {"t_max": 0.8, "snapshot_stride": 4},
  "init": {"packets": [{"sector": 2, "center": [0.0, 1.2], "width": [0.5, 0.5], "momentum": [0.0, -2.0]}]},
  "ensemble": {"n_traj": 400, "seed": 3},
  "output": {"formats": ["json", "csv", "jsonl"]}
})";

const char* kContinuum = R"({
  "model": "Model4Continuum",
  "params": {"g": 0.8},
  "lattice": {"eps": 0.2, "nx": 16, "ny": 14},
  "time": {"t_max": 0.4, "snapshot_stride": 4},
  "init": {"packets": [{"sector": 2, "center": [0.0, 1.2], "width": [0.5, 0.5], "momentum": [0.0, -2.0]}]},
  "ensemble": {"n_traj": 100, "seed": 3}
})";

const char* kRadial = R"({
  "model": "Model3Radial",
  "params": {"g": 1.0},
  "lattice": {"eps": 0.1, "ny": 60},
  "time": {"t_max": 0.4, "snapshot_stride": 5},
  "init": {"packets": [{"sector": 1, "center": [2.0], "width": [0.5], "momentum": [-1.0]}]},
  "ensemble": {"n_traj": 50, "seed": 3}
})";

std::string out(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("configuration errors exit with status 2") {
  const auto bad = write_config(
      "bad.json", R"({"model": "Model4Lattice", "params": {"g": 0.5, "robin": {"alpha": 1.0, "beta": 0.1, "gamma": 1.0, "delta": 1.0}},
                      "lattice": {"eps": 0.2, "nx": 8, "ny": 8}, "time": {"t_max": 1.0}})");
  CHECK(run("evolve --config " + bad) == 2);
  CHECK(read_file(workdir() / "stderr.txt").find("alpha*delta - beta*gamma must equal 1") != std::string::npos);
  CHECK(run("evolve --config " + out("missing.json")) == 2);
  CHECK(run("evolve") == 2);
  CHECK(run("frobnicate --config " + bad) == 2);
  const auto good = write_config("good.json", kLattice);
  CHECK(run("sample --config " + good + " --threads 0") == 2);
  CHECK(run("lattice-limit --config " + write_config("radial.json", kRadial)) == 2);
}

TEST_CASE("evolve writes the record, the CSV and the metadata") {
  const auto cfg = write_config("lattice.json", kLattice);
  REQUIRE(run("evolve --config " + cfg + " --out " + out("evolve")) == 0);
  const auto csv = read_file(fs::path(out("evolve")) / "evolution.csv");
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("t,norm,sector1_prob,energy") != std::string::npos);
  const auto meta = nlohmann::json::parse(read_file(fs::path(out("evolve")) / "meta.json"));
  CHECK(meta["command"] == "evolve");
  CHECK(meta["exit_status"] == 0);
  CHECK(meta["config_hash"].get<std::string>().size() == 16);
  const auto rec = nlohmann::json::parse(read_file(fs::path(out("evolve")) / "record.json"));
  CHECK(rec.contains("snapshots"));
}

TEST_CASE("sample output replays byte for byte") {
  const auto cfg = write_config("lattice.json", kLattice);
  REQUIRE(run("sample --config " + cfg + " --out " + out("s1")) == 0);
  REQUIRE(run("sample --config " + cfg + " --out " + out("s2") + " --threads 4") == 0);
  REQUIRE(run("sample --config " + cfg + " --out " + out("s3") + " --seed 4") == 0);
  const auto a = read_file(fs::path(out("s1")) / "trajectories.jsonl");
  const auto b = read_file(fs::path(out("s2")) / "trajectories.jsonl");
  const auto c = read_file(fs::path(out("s3")) / "trajectories.jsonl");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a != c);

  std::istringstream lines(a);
  std::string line;
  std::getline(lines, line);
  const auto header = nlohmann::json::parse(line);
  CHECK(header["type"] == "header");
  CHECK(header["seed"] == 3);
  CHECK(header["n_traj"] == 400);
  std::getline(lines, line);
  const auto event = nlohmann::json::parse(line);
  for (const char* key : {"traj", "t", "kind", "sector", "coords"}) CHECK(event.contains(key));

  const auto cont = write_config("continuum.json", kContinuum);
  REQUIRE(run("sample --config " + cont + " --out " + out("c1")) == 0);
  REQUIRE(run("sample --config " + cont + " --out " + out("c2") + " --threads 3") == 0);
  CHECK(read_file(fs::path(out("c1")) / "trajectories.jsonl") == read_file(fs::path(out("c2")) / "trajectories.jsonl"));
}

TEST_CASE("equivariance, reverse, rates and lattice-limit run end to end") {
  const auto cfg = write_config("lattice.json", kLattice);
  const int eq = run("equivariance --config " + cfg + " --out " + out("eq"));
  CHECK(eq == 0);
  const auto report = nlohmann::json::parse(read_file(fs::path(out("eq")) / "report.json"));
  CHECK(report["pass"].get<bool>() == (eq == 0));
  CHECK(report.contains("config"));
  CHECK(fs::exists(fs::path(out("eq")) / "histograms.csv"));
  CHECK(fs::exists(fs::path(out("eq")) / "report.txt"));

  const int rv = run("reverse --config " + cfg + " --out " + out("rev"));
  CHECK((rv == 0 || rv == 1));
  const auto rrep = nlohmann::json::parse(read_file(fs::path(out("rev")) / "report.json"));
  CHECK(rrep.contains("reverse_seed"));
  CHECK(rrep["pass"].get<bool>() == (rv == 0));

  CHECK(run("rates --config " + cfg + " --out " + out("rates")) == 0);
  CHECK(read_file(fs::path(out("rates")) / "rates.csv").find('\n') != std::string::npos);
  CHECK(fs::exists(fs::path(out("rates")) / "velocity.csv"));

  CHECK(run("lattice-limit --config " + cfg + " --out " + out("limit")) == 0);
  CHECK(read_file(fs::path(out("limit")) / "convergence.csv").find("eps") != std::string::npos);

  CHECK(run("equivariance --config " + write_config("radial.json", kRadial) + " --out " + out("eq3")) <= 1);
  CHECK(fs::exists(fs::path(out("eq3")) / "report.json"));
}
