#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "omcf/config.hpp"
#include "omcf/experiment.hpp"

using namespace omcf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("omcf_unit_" + name);
  fs::remove_all(p);
  return p;
}

const char* kStationary =
    "scenario.name = stationary\n"
    "grid.n = 16\n"
    "solver.eps = 0.05\n"
    "solver.t_end = 0.002\n"
    "checks.distributional = true\n"
    "checks.dissipation = true\n"
    "checks.motion = true\n"
    "checks.motion_fields = 2\n";

}  // namespace

TEST_CASE("catalog defaults fill missing keys") {
  const RunConfig c = parse_config("scenario.name = clamping\n");
  CHECK(c.scenario == "clamping");
  CHECK(c.eps > 0.0);
  CHECK(c.t_end > 0.0);
  CHECK(c.study_eps.size() > 1);
  CHECK(c.checks.energy);
  CHECK_FALSE(c.checks.motion);
}

TEST_CASE("echo loads back to the same config") {
  RunConfig c = parse_config(
      "# comment\n"
      "scenario.name = sphere\n"
      "grid.n = 32\n"
      "solver.eps = 0.1234567890123456789\n"
      "study.eps = 0.1, 0.05\n"
      "checks.sphere_tol = 0.0271828\n"
      "output.snapshots = all\n"
      "seed = 42\n");
  const RunConfig back = parse_config(echo_config(c));
  CHECK(back == c);
  CHECK(back.eps == 0.1234567890123456789);
  CHECK(back.snapshots == SnapshotPolicy::all);

  RunConfig custom = parse_config(
      "scenario.name = custom\n"
      "data.lower = constant:value=-1\n"
      "data.upper = constant:value=1\n"
      "data.initial = sine:amplitude=0.2,wave=1/0\n"
      "data.L = 0.5\n"
      "data.ell = 0.25\n"
      "solver.t_end = 0.01\n");
  CHECK(parse_config(echo_config(custom)) == custom);
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse_config("grid.n = 32\nsolver.eps 0.1\n", "cfg.txt");
    FAIL("expected ConfigParseError");
  } catch (const ConfigParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).rfind("cfg.txt:2:", 0) == 0);
  }
  try {
    parse_config("grid.n = 32\n  solver.epsilon = 0.1\n");
    FAIL("expected ConfigParseError");
  } catch (const ConfigParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("solver.epsilon") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("grid.n = 3x\n"), ConfigParseError);
  CHECK_THROWS_AS(parse_config("grid.n = 32\ngrid.n = 64\n"), ConfigParseError);
}

TEST_CASE("validation errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigValidationError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("solver.eps = -0.1\n") == "solver.eps");
  CHECK(field_of("grid.dim = 4\n") == "grid.dim");
  CHECK(field_of("checks.ledger_tol = 0\n") == "checks.ledger_tol");
  CHECK(field_of("solver.cfl_safety = 1.5\n") == "solver.cfl_safety");
  CHECK(field_of("scenario.name = torus\n") == "scenario.name");
  CHECK(field_of("scenario.name = custom\n") != "<none>");
  CHECK(field_of("grid.n = 32\n") == "<none>");
}

TEST_CASE("unknown scenario message lists the catalog") {
  try {
    parse_config("scenario.name = torus\n");
    FAIL("expected ConfigValidationError");
  } catch (const ConfigValidationError& e) {
    const std::string msg = e.what();
    for (const char* n : {"sphere", "clamping", "sandwich", "stationary", "custom"})
      CHECK(msg.find(n) != std::string::npos);
  }
}

TEST_CASE("environment variable overrides the output directory") {
  RunConfig c = parse_config("output.dir = from_config\n");
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir(c) == "from_config");
  ::setenv(kOutputDirEnv, "from_env", 1);
  CHECK(resolve_output_dir(c) == "from_env");
  ::setenv(kOutputDirEnv, "", 1);
  CHECK(resolve_output_dir(c) == "from_config");
  ::unsetenv(kOutputDirEnv);
}

TEST_CASE("stationary experiment passes every check and writes its files") {
  const fs::path dir = scratch("stationary");
  const RunConfig c = parse_config(kStationary);
  const ExperimentResult r = run_experiment(c, dir.string());
  CHECK(r.pass());
  CHECK(r.exit_status() == kExitPass);
  CHECK(r.first_failure().empty());
  for (const char* f : {"config.effective", "trace.csv", "checks.csv", "residuals.csv", "summary.txt"})
    CHECK(fs::exists(dir / f));
  const std::string summary = slurp(dir / "summary.txt");
  CHECK(summary.find("overall: pass") != std::string::npos);
  CHECK(parse_config(slurp(dir / "config.effective")) == c);
  fs::remove_all(dir);
}

TEST_CASE("an unattainable tolerance fails the named check") {
  const fs::path dir = scratch("tight");
  RunConfig c = parse_config(
      "scenario.name = sphere\n"
      "grid.n = 32\n"
      "solver.t_end = 0.01\n"
      "checks.sphere = true\n"
      "checks.sphere_tol = 1e-9\n");
  const ExperimentResult r = run_experiment(c, dir.string());
  CHECK_FALSE(r.pass());
  CHECK(r.exit_status() == kExitCheckFailure);
  CHECK(r.first_failure() == "sphere_radius");
  CHECK(slurp(dir / "summary.txt").find("overall: fail") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("experiment output is reproducible") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  const RunConfig c = parse_config(
      "scenario.name = clamping\n"
      "grid.n = 32\n"
      "checks.motion = true\n"
      "checks.motion_fields = 3\n"
      "seed = 9\n");
  run_experiment(c, a.string());
  run_experiment(c, b.string());
  for (const char* f : {"trace.csv", "checks.csv", "residuals.csv", "summary.txt"})
    CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("study writes one row per grid and eps") {
  const fs::path dir = scratch("study");
  const RunConfig c = parse_config(
      "scenario.name = clamping\n"
      "grid.n = 32\n"
      "study.eps = 0.1, 0.05\n"
      "study.n = 16, 32\n"
      "checks.trend = true\n");
  const ExperimentResult r = run_study(c, dir.string());
  std::istringstream in(slurp(dir / "study.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  bool saw_trend = false;
  for (const auto& ch : r.checks) saw_trend |= ch.name.rfind("trend_", 0) == 0;
  CHECK(saw_trend);
  fs::remove_all(dir);
}
