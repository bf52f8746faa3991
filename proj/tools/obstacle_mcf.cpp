// obstacle-mcf: run, audit, study and export for the obstacle mean curvature flow solver.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "omcf/experiment.hpp"
#include "omcf/snapshot_io.hpp"

using namespace omcf;

namespace {

void print_result(const ExperimentResult& r) {
  for (const auto& c : r.checks)
    if (!c.pass) std::cerr << "check failed: " << c.name << " value=" << c.value << " tol=" << c.tolerance << "\n";
  std::cout << "overall: " << (r.pass() ? "pass" : "fail") << " (" << r.checks.size() << " checks, output in "
            << r.output_dir << ")\n";
  if (!r.pass()) std::cout << "first failing check: " << r.first_failure() << "\n";
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ConfigValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const SnapshotFormatError& e) {
    std::cerr << "snapshot error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const WellPreparedError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumericalAbort;
  } catch (const StabilityError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumericalAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set mean curvature flow with obstacles on the periodic grid"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Solve and run the configured checks");
  run_cmd->add_option("config", config_path, "Config file")->required();
  auto* audit_cmd = app.add_subcommand("audit", "Well-preparedness audit only");
  audit_cmd->add_option("config", config_path, "Config file")->required();
  auto* study_cmd = app.add_subcommand("study", "Sweep study.eps x study.n");
  study_cmd->add_option("config", config_path, "Config file")->required();

  std::string snapshot_path, csv_path;
  bool as_csv = false;
  auto* export_cmd = app.add_subcommand("export", "Convert a binary snapshot");
  export_cmd->add_option("snapshot", snapshot_path, "Snapshot file")->required();
  export_cmd->add_flag("--csv", as_csv, "Write CSV (dim <= 2)");
  export_cmd->add_option("-o,--output", csv_path, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }
  std::ostream* log = quiet ? nullptr : &std::cerr;

  if (*run_cmd || *study_cmd) {
    const bool study = static_cast<bool>(*study_cmd);
    return guarded([&] {
      const RunConfig c = load_config(config_path);
      const std::string dir = resolve_output_dir(c);
      const ExperimentResult r = study ? run_study(c, dir, log) : run_experiment(c, dir, log);
      print_result(r);
      return r.exit_status();
    });
  }
  if (*audit_cmd) {
    return guarded([&] {
      const RunConfig c = parse_config(
          [&] {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) throw ConfigValidationError("config", "cannot open '" + config_path + "'");
            return std::string(std::istreambuf_iterator<char>(in), {});
          }(),
          config_path);
      bool pass = false;
      std::cout << audit_report(c, &pass);
      return pass ? kExitPass : kExitCheckFailure;
    });
  }
  return guarded([&] {
    if (!as_csv) throw std::invalid_argument("export needs --csv");
    const FieldSnapshot s = read_snapshot(snapshot_path);
    if (csv_path.empty()) {
      write_snapshot_csv(std::cout, s.u);
    } else {
      std::ofstream os(csv_path, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write '" + csv_path + "'");
      write_snapshot_csv(os, s.u);
    }
    return kExitPass;
  });
}
