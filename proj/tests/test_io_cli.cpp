#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "mstnpi/io.hpp"
#include "mstnpi/runner.hpp"
#include "support.hpp"

using namespace mstnpi;
namespace fs = std::filesystem;

namespace {

const char* kSpinBoson = R"(model = ising
P = 1
Omega = 1
dt = 0.25
nsteps = 4
memory_L = 4
xi = 0.25
omega_c = 5
beta = 1
chi = 1e-14
observables = sz@1, sx@1
)";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mstnpi-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const TempDir& dir, const std::string& args) {
  const fs::path out = dir.path / "stdout.txt", err = dir.path / "stderr.txt";
  const std::string cmd = std::string(MSTNPI_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("mps file round trip") {
  std::mt19937_64 rng(41);
  const MatrixProductState st = random_mps(4, 4, 3, rng);
  std::stringstream ss;
  write_mps(ss, st);
  CHECK(ss.str().rfind("mstnpi-mps 1\nsites 4\n", 0) == 0);
  const MatrixProductState back = read_mps(ss);
  REQUIRE(back.length() == 4);
  CHECK((to_dense(back) - to_dense(st)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bond_stats(back).max_dim == bond_stats(st).max_dim);

  TempDir dir;
  const std::string path = (dir.path / "state.mps").string();
  save_mps(path, st);
  CHECK((to_dense(load_mps(path)) - to_dense(st)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(load_mps((dir.path / "missing.mps").string()), ParameterError);
}

TEST_CASE("malformed mps files") {
  auto reject = [](const std::string& text, const std::string& fragment) {
    std::istringstream is(text);
    try {
      read_mps(is);
      FAIL("accepted: " << text);
    } catch (const ParameterError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  reject("mps 2\n", "header");
  reject("mstnpi-mps 1\nsites 0\n", "sites");
  reject("mstnpi-mps 1\nsites 1\nsite 1 2 4 1\n", "edge bonds");
  reject("mstnpi-mps 1\nsites 1\nsite 1 1 4 1\n1 0\n", "truncated");
  reject("mstnpi-mps 1\nsites 2\nsite 1 1 4 2\n0 0\n0 0\n0 0\n0 0\n0 0\n0 0\n0 0\n0 0\nsite 2 3 4 1\n",
         "mismatch");
}

TEST_CASE("trajectory and bond csv layout") {
  const SimulationConfig c = parse_config(kSpinBoson);
  const auto history = run_engine(c);
  REQUIRE(history.size() == 4);
  std::ostringstream traj, bonds;
  write_trajectory_csv(traj, c, history);
  write_bond_csv(bonds, history);
  CHECK(count_lines(traj.str()) == 1 + 4 * 2);
  CHECK(count_lines(bonds.str()) == 1 + 4);
  CHECK(traj.str().rfind("step,time,site,observable,value_re,value_im\n1,0.25,1,sz,", 0) == 0);
  CHECK(bonds.str().rfind("step,time,max_bond,avg_bond\n1,0.25,1,1\n", 0) == 0);
}

TEST_CASE("manifest json round trip") {
  RunManifest m;
  m.config_text = format_config(parse_config(kSpinBoson));
  m.version = "0.0.1";
  m.wall_seconds = 1.25;
  m.dt = 0.25;
  m.memory_length = 4;
  m.cutoff = 1e-14;
  m.oracle = "path-sum";
  m.scan = "chi=1e-10,1e-12";
  m.outputs = {"a.csv", "a_bonds.csv"};
  CHECK(manifest_from_json(manifest_to_json(m)) == m);
  CHECK_THROWS_AS(manifest_from_json("{not json"), ParameterError);
}

TEST_CASE("scan parsing") {
  const ScanSpec s = parse_scan("chi=1e-9,1e-11");
  CHECK(s.parameter == "chi");
  CHECK(s.values == std::vector<std::string>{"1e-9", "1e-11"});
  CHECK_THROWS_AS(parse_scan("chi"), ParameterError);
  CHECK_THROWS_AS(parse_scan("beta=1,2"), ParameterError);
  CHECK_THROWS_AS(parse_scan("dt="), ParameterError);
  const SimulationConfig c = parse_config(kSpinBoson);
  CHECK(with_scan_value(c, "L", "2").memory_length == 2);
  CHECK(with_scan_value(c, "dt", "0.1").dt == 0.1);
  CHECK_THROWS_AS(with_scan_value(c, "L", "5"), ParameterError);
}

TEST_CASE("oracle guards name the limit") {
  SimulationConfig c = parse_config(kSpinBoson);
  CHECK_THROWS_WITH_AS(run_oracle(c, OracleKind::Dense), doctest::Contains("path-sum"), ParameterError);
  CHECK_THROWS_WITH_AS(run_oracle(c, OracleKind::ExactDiag), doctest::Contains("bath_modes"), ParameterError);
  c.num_steps = 7;
  c.memory_length = 7;
  CHECK_THROWS_WITH_AS(run_oracle(c, OracleKind::PathSum), doctest::Contains("nsteps"), ParameterError);
}

TEST_CASE("cli run against the path-sum oracle") {
  TempDir dir;
  const std::string cfg = dir.write("sb.cfg", kSpinBoson);
  const CliResult r = cli(dir, "run --config " + cfg + " --output " + (dir.path / "out").string() + " --oracle path-sum");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, std::regex(R"(max \|engine - path-sum\| = (\S+))")));
  CHECK(std::stod(m[1].str()) <= 1e-9);
  for (const char* f : {"sb.csv", "sb_bonds.csv", "sb_path-sum.csv", "sb.manifest.json"})
    CHECK_MESSAGE(fs::exists(dir.path / "out" / f), f);
  const RunManifest manifest = manifest_from_json(slurp(dir.path / "out" / "sb.manifest.json"));
  CHECK(manifest.oracle == "path-sum");
  CHECK(manifest.outputs.size() == 3);
  CHECK(parse_config(manifest.config_text).bath->xi == 0.25);
  CHECK(count_lines(slurp(dir.path / "out" / "sb.csv")) == 1 + 4 * 2);
}

TEST_CASE("cli runs are deterministic") {
  TempDir dir;
  const std::string cfg = dir.write("sb.cfg", kSpinBoson);
  REQUIRE(cli(dir, "run --config " + cfg + " --output " + (dir.path / "a").string()).code == 0);
  REQUIRE(cli(dir, "run --config " + cfg + " --output " + (dir.path / "b").string()).code == 0);
  CHECK(slurp(dir.path / "a" / "sb.csv") == slurp(dir.path / "b" / "sb.csv"));
  CHECK(slurp(dir.path / "a" / "sb_bonds.csv") == slurp(dir.path / "b" / "sb_bonds.csv"));
}

TEST_CASE("cli scan writes one trajectory per value") {
  TempDir dir;
  const std::string cfg = dir.write("sb.cfg", kSpinBoson);
  const CliResult r = cli(dir, "run --config " + cfg + " --output " + dir.path.string() + " --scan L=2,3,4");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* v : {"2", "3", "4"}) CHECK(fs::exists(dir.path / ("sb_L=" + std::string(v) + ".csv")));
  const RunManifest manifest = manifest_from_json(slurp(dir.path / "sb.manifest.json"));
  CHECK(manifest.scan == "L=2,3,4");
  CHECK(manifest.outputs.size() == 6);
  // full memory reproduces the unscanned run
  REQUIRE(cli(dir, "run --config " + cfg + " --output " + (dir.path / "plain").string()).code == 0);
  CHECK(slurp(dir.path / "sb_L=4.csv") == slurp(dir.path / "plain" / "sb.csv"));
}

TEST_CASE("cli initial state from an mps file") {
  TempDir dir;
  const std::string mps = (dir.path / "down.mps").string();
  save_mps(mps, named_initial_state("all_down", 1));
  const std::string cfg = dir.write("down.cfg", std::string(kSpinBoson) + "initial_state = " + mps + "\n");
  const std::string named = dir.write("named.cfg", std::string(kSpinBoson) + "initial_state = all_down\n");
  REQUIRE(cli(dir, "run --config " + cfg + " --output " + dir.path.string()).code == 0);
  REQUIRE(cli(dir, "run --config " + named + " --output " + dir.path.string()).code == 0);
  CHECK(slurp(dir.path / "down.csv") == slurp(dir.path / "named.csv"));
}

TEST_CASE("cli errors exit with status 2 and name the key") {
  TempDir dir;
  const std::string bad = dir.write("bad.cfg", std::string(kSpinBoson) + "memory_length = 3\n");
  CliResult r = cli(dir, "run --config " + bad);
  CHECK(r.code == 2);
  CHECK(r.err.find("memory_length") != std::string::npos);

  std::string three = kSpinBoson;
  three.replace(three.find("P = 1"), 5, "P = 3");
  const std::string big = dir.write("big.cfg", three);
  r = cli(dir, "run --config " + big + " --oracle path-sum");
  CHECK(r.code == 2);
  CHECK(r.err.find("P must be <= 2") != std::string::npos);

  const std::string cfg = dir.write("sb.cfg", kSpinBoson);
  r = cli(dir, "run --config " + cfg + " --output " + dir.path.string() + " --oracle path-sum --scan gamma=1");
  CHECK(r.code == 2);
  CHECK(r.err.find("--scan") != std::string::npos);

  CHECK(cli(dir, "run --config " + (dir.path / "missing.cfg").string()).code != 0);
  CHECK(cli(dir, "frobnicate").code != 0);
  CHECK(cli(dir, "--version").code == 0);
}
