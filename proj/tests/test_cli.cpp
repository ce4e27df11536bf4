#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "tdid/config.hpp"
#include "tdid/csv.hpp"

using namespace tdid;
namespace fs = std::filesystem;

namespace {

std::string bin_path() {
  const char* bin = std::getenv("TDID_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "TDID_BIN must point at the tdid binary");
  return bin;
}

int run_cli(const std::string& args) {
  const std::string cmd = bin_path() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "tdid_cli_test";
  fs::create_directories(dir);
  return dir;
}

// Minimal one-state, no-delay experiment around dx = a x + g y^2 + b u.
ExperimentConfig tiny_config(double a, double g, double offset) {
  ExperimentConfig cfg;
  PlantModel& p = cfg.plant;
  p.n = 1;
  p.l = 1;
  p.m = 1;
  p.delays = {0.0};
  p.A = {Matrix::Constant(1, 1, a)};
  p.D = {Matrix::Zero(1, 1)};
  p.G = {Matrix::Constant(1, 1, g)};
  p.B = {Vector::Ones(1)};
  p.C = RowVector::Ones(1);
  p.phi_name = "zero";
  p.psi_name = "square";
  p.lipschitz = 1.0;
  p.phi = make_phi(p.phi_name, p.n, p.l);
  p.psi = make_psi(p.psi_name, p.m);

  IdentifierConfig& id = cfg.identifier;
  id.T0 = Vector::Ones(1);
  id.known.A0 = {Matrix::Zero(1, 1)};
  id.known.D0 = {Matrix::Zero(1, 1)};
  id.known.G0 = {Matrix::Zero(1, 1)};
  id.known.B0 = {Vector::Zero(1)};
  id.gains = {SlotGains::scaled_identity(1.0, 1, 1, 1)};
  id.K = {Vector::Zero(1)};
  id.kappa_init = KappaSet::zero(1, 1, 1, 1);

  cfg.input.offset = offset;
  cfg.sim.h = 1e-3;
  cfg.sim.t_end = 2.0;
  cfg.sim.record_stride = 10;
  cfg.pe.window = 1.0;
  cfg.pe.quad_step = 0.01;
  return cfg;
}

std::string write_config(const ExperimentConfig& cfg, const std::string& name) {
  const fs::path path = scratch_dir() / name;
  std::ofstream out(path);
  out << config_to_json(cfg);
  return path.string();
}

}  // namespace

TEST_CASE("simulate: stable plant exits 0 and writes the trajectory") {
  ExperimentConfig cfg = tiny_config(-1.0, 0.0, 1.0);
  const fs::path out = scratch_dir() / "sim_ok";
  cfg.output.dir = out.string();
  const std::string path = write_config(cfg, "sim_ok.json");
  CHECK(run_cli("simulate --config " + path) == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
}

TEST_CASE("simulate: zero plant with zero input produces an all-zero file") {
  ExperimentConfig cfg = tiny_config(0.0, 0.0, 0.0);
  cfg.plant.B = {Vector::Zero(1)};
  const fs::path out = scratch_dir() / "sim_zero";
  cfg.output.dir = out.string();
  const std::string path = write_config(cfg, "sim_zero.json");
  REQUIRE(run_cli("simulate --config " + path) == 0);
  std::ifstream in(out / "trajectory.csv");
  std::string line;
  std::getline(in, line);  // header
  size_t rows = 0;
  while (std::getline(in, line)) {
    const size_t comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    CHECK(line.substr(comma + 1) == "0");
    ++rows;
  }
  CHECK(rows > 100);
}

TEST_CASE("simulate: blow-up exits 3") {
  // dx = x + 3 y^2 + 5 escapes in finite time
  ExperimentConfig cfg = tiny_config(1.0, 3.0, 5.0);
  cfg.sim.t_end = 5.0;
  cfg.output.dir = (scratch_dir() / "sim_bang").string();
  const std::string path = write_config(cfg, "sim_bang.json");
  CHECK(run_cli("simulate --config " + path) == 3);
}

TEST_CASE("malformed or missing configs exit 2") {
  const fs::path bad = scratch_dir() / "bad.json";
  std::ofstream(bad) << "{ \"version\": 1, nope }";
  CHECK(run_cli("simulate --config " + bad.string()) == 2);
  CHECK(run_cli("simulate --config /definitely/not/there.json") == 2);

  // structurally valid JSON but missing a required section
  const fs::path incomplete = scratch_dir() / "incomplete.json";
  std::ofstream(incomplete) << "{ \"version\": 1 }";
  CHECK(run_cli("identify --config " + incomplete.string()) == 2);
}

TEST_CASE("identify writes diagnostics and optional plots") {
  ExperimentConfig cfg = tiny_config(-1.0, 0.0, 1.0);
  const fs::path out = scratch_dir() / "ident";
  fs::remove_all(out);
  cfg.output.dir = out.string();
  const std::string path = write_config(cfg, "ident.json");
  CHECK(run_cli("identify --config " + path) == 0);
  CHECK(fs::exists(out / "diagnostics.csv"));
  CHECK(!fs::exists(out / "eps.svg"));
  CHECK(run_cli("identify --plots --config " + path) == 0);
  CHECK(fs::exists(out / "eps.svg"));
  CHECK(fs::exists(out / "b_hat.svg"));
}

TEST_CASE("lmi-check exit code reflects feasibility") {
  ExperimentConfig feasible = tiny_config(-2.0, 0.0, 0.0);
  const fs::path out = scratch_dir() / "lmi_ok";
  feasible.output.dir = out.string();
  feasible.lmi.mode = PsiMode::Verbatim;
  const std::string ok = write_config(feasible, "lmi_ok.json");
  CHECK(run_cli("lmi-check --config " + ok) == 0);
  CHECK(fs::exists(out / "certificate.json"));

  ExperimentConfig infeasible = tiny_config(5.0, 0.0, 0.0);
  infeasible.output.dir = (scratch_dir() / "lmi_bad").string();
  infeasible.lmi.mode = PsiMode::Verbatim;
  const std::string bad = write_config(infeasible, "lmi_bad.json");
  const int rc = run_cli("lmi-check --config " + bad);
  CHECK(rc != 0);
  CHECK(rc != 2);
}

TEST_CASE("pe-check: window longer than the horizon exits 4") {
  ExperimentConfig cfg = tiny_config(-1.0, 0.0, 1.0);
  cfg.pe.window = 10.0;  // horizon is 2 s
  cfg.output.dir = (scratch_dir() / "pe_long").string();
  const std::string path = write_config(cfg, "pe_long.json");
  CHECK(run_cli("pe-check --config " + path) == 4);
}

TEST_CASE("pe-check emits the report for a valid window") {
  ExperimentConfig cfg = tiny_config(-1.0, 0.0, 1.0);
  cfg.input.sines.push_back({1.0, 3.0, 0.0});
  const fs::path out = scratch_dir() / "pe_ok";
  cfg.output.dir = out.string();
  const std::string path = write_config(cfg, "pe_ok.json");
  CHECK(run_cli("pe-check --config " + path) == 0);
  CHECK(fs::exists(out / "pe_report.csv"));
}

TEST_CASE("deterministic outputs: identical config gives identical bytes") {
  ExperimentConfig cfg = tiny_config(-1.0, 0.0, 1.0);
  cfg.input.sines.push_back({0.5, 7.0, 0.1});
  const fs::path out_a = scratch_dir() / "det_a";
  const fs::path out_b = scratch_dir() / "det_b";
  const std::string path = write_config(cfg, "det.json");
  REQUIRE(run_cli("identify --config " + path + " --out " + out_a.string()) == 0);
  REQUIRE(run_cli("identify --config " + path + " --out " + out_b.string()) == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = slurp(out_a / "diagnostics.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(out_b / "diagnostics.csv"));
}
