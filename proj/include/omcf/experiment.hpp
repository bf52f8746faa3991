#pragma once

// Experiment orchestration: runs the solver for a RunConfig, evaluates the
// requested checks and writes trace, residual, check and summary files plus
// field snapshots into the output directory.

#include <iosfwd>
#include <string>
#include <vector>

#include "omcf/config.hpp"

namespace omcf {

/// Process exit statuses of the command-line tool.
enum ExitStatus : int { kExitPass = 0, kExitCheckFailure = 1, kExitConfigError = 2, kExitNumericalAbort = 3 };

/// Environment variable overriding output.dir.
inline constexpr const char* kOutputDirEnv = "OBSTACLE_MCF_OUTPUT_DIR";

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::string output_dir;
  std::vector<CheckOutcome> checks;
  std::vector<ResidualReport> residuals;
  std::vector<std::string> files;  // written, relative to output_dir

  bool pass() const;
  /// Name of the first failing check, empty if none fails.
  std::string first_failure() const;
  int exit_status() const { return pass() ? kExitPass : kExitCheckFailure; }
};

/// output.dir unless the environment variable is set and non-empty.
std::string resolve_output_dir(const RunConfig& config);

/// Solves once at (grid.n, solver.eps) and runs the enabled checks. Solver
/// aborts (NumericalAbort, StabilityError) propagate after the partial trace is
/// written. Progress lines go to `log` when given.
ExperimentResult run_experiment(const RunConfig& config, const std::string& output_dir, std::ostream* log = nullptr);

/// Sweeps study.n x study.eps, writes study.csv and evaluates checks.trend.
ExperimentResult run_study(const RunConfig& config, const std::string& output_dir, std::ostream* log = nullptr);

/// Well-preparedness report for the configured scenario, one `key = value` per line.
std::string audit_report(const RunConfig& config, bool* pass);

/// Applies config.threads to the OpenMP runtime (no-op for 0 or without OpenMP).
void apply_thread_setting(int threads);

}  // namespace omcf
