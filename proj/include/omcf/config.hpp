#pragma once

// Run configuration: a flat `key = value` text format with dotted section
// prefixes, strict about unknown keys, with line/column parse errors and an
// effective-config echo that loads back to the same RunConfig.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "omcf/properties.hpp"

namespace omcf {

/// Syntax problem at a position in the config text (1-based line and column).
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(const std::string& source, int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Semantic problem with one field, named by its dotted path.
class ConfigValidationError : public std::runtime_error {
 public:
  ConfigValidationError(const std::string& field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class SnapshotPolicy { none, final, all };

struct CheckSettings {
  bool energy = true;
  double energy_tol = 1e-8;  // per-step increase relative to E(g)
  bool ledger = true;
  double ledger_tol = 0.05;
  bool l1 = true;
  double l1_tol = 0.05;
  bool bounds = true;
  bool distributional = false;
  double dist_tol = 0.03;
  bool dissipation = false;
  double per_tol = 0.05;
  double level = 0.0;
  bool motion = false;
  double motion_tol = 0.05;
  int motion_fields = 20;
  bool motion_two_sided = false;
  bool sphere = false;
  double sphere_tol = 0.03;
  /// study only: terminal sup(phi - u)_+ and penalty mass strictly decrease along study.eps.
  bool trend = false;

  bool operator==(const CheckSettings&) const = default;
};

struct RunConfig {
  /// Catalog name or "custom".
  std::string scenario = "sphere";
  double amplitude = 1.0;
  int dim = 2;
  int n = 64;
  double eps = 0.05;
  double t_end = 0.0;
  double cfl_safety = 0.9;
  int output_every = 0;
  // Analytic field specs and constants; custom scenarios only.
  std::string lower;
  std::string upper;
  std::string initial;
  double L = 0.0;
  double ell = 0.0;
  std::vector<double> study_eps;  // empty: {eps}
  std::vector<int> study_n;       // empty: {n}
  CheckSettings checks;
  std::string output_dir = "out";
  SnapshotPolicy snapshots = SnapshotPolicy::final;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 keeps the OpenMP default

  bool operator==(const RunConfig&) const = default;

  bool is_custom() const { return scenario == "custom"; }
  /// Builds the scenario (catalog or custom) at the given grid size and eps.
  Scenario scenario_at(int n_override, double eps_override) const;
  Scenario scenario_built() const { return scenario_at(n, eps); }

  /// Throws ConfigValidationError naming the field.
  void validate() const;
};

/// Every key understood by the parser, in echo order.
std::vector<std::string> config_keys();

/// Parses config text. Keys missing from the text take catalog defaults for
/// scenario.name (or the RunConfig defaults), then validates. `source` names
/// the text in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file, then runs the well-preparedness audit on the
/// scenario it describes (ConfigValidationError on failure).
RunConfig load_config(const std::string& path);

/// Effective config, one `key = value` per line, doubles printed round-trip exact.
std::string echo_config(const RunConfig& config);

std::string to_string(SnapshotPolicy p);

}  // namespace omcf
