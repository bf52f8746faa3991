#pragma once

// Per-step monitors: energy, dissipation ledger, the L1 statistic of
// -H + f, penalty mass and bound trackers.

#include <iosfwd>
#include <string>
#include <vector>

#include "omcf/model.hpp"

namespace omcf {

struct TraceRow {
  double t = 0.0;
  double dt = 0.0;
  double energy = 0.0;
  double dissipation_cumulative = 0.0;
  double l1_curvature = 0.0;
  double penalty_mass = 0.0;
  double sup_u = 0.0;
  double inf_u = 0.0;
  double max_grad_norm = 0.0;
  double max_rhs = 0.0;
};

/// Append-only table. Times strictly increase and the cumulative dissipation
/// never decreases; append() throws std::logic_error otherwise.
class DiagnosticsTrace {
 public:
  void append(const TraceRow& row);
  const std::vector<TraceRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }
  const TraceRow& front() const { return rows_.front(); }
  const TraceRow& back() const { return rows_.back(); }

  static std::string csv_header();
  static std::string csv_line(const TraceRow& row);
  void write_csv(std::ostream& os) const;

 private:
  std::vector<TraceRow> rows_;
};

/// Everything the trace needs from one evaluated state.
struct StepDiagnostics {
  double energy = 0.0;
  double dissipation_rate = 0.0;  // integral of (-H + f)^2 |grad u|_eps
  double l1_curvature = 0.0;      // integral of |-H + f|
  double penalty_mass = 0.0;      // integral of V_eps(u)
  double sup_u = 0.0;
  double inf_u = 0.0;
  double max_grad_norm = 0.0;
  double max_rhs = 0.0;
};

StepDiagnostics measure(const FlowState& state, const ObstaclePair& obs);

double l1_curvature(const FlowState& state, const ObstaclePair& obs);
double penalty_mass(const FlowState& state, const ObstaclePair& obs);

/// Adds dt * dissipation_rate(before) to the running total and appends the
/// row for the state reached after the step.
void dissipation_ledger_update(DiagnosticsTrace& trace, const StepDiagnostics& before, const StepDiagnostics& after,
                               double t_after, double dt);

TraceRow make_row(const StepDiagnostics& d, double t, double dt, double cumulative);

struct LedgerReport {
  double max_residual = 0.0;       // max over a < b of |E_b + D_b - D_a - E_a|
  double relative = 0.0;           // max_residual / E(g)
  double tolerance = 0.0;
  bool pass = false;
};
LedgerReport check_ledger(const DiagnosticsTrace& trace, double diss_tol);

struct EnergyMonotoneReport {
  double max_increase = 0.0;  // max_k E_{k+1} - E_k
  double tolerance = 0.0;     // rel_tol * E(g)
  std::size_t worst_row = 0;
  bool pass = false;
};
EnergyMonotoneReport check_energy_monotone(const DiagnosticsTrace& trace, double rel_tol);

struct L1MonotoneReport {
  double initial = 0.0;
  double max_jump = 0.0;        // largest increase between consecutive rows
  double max_over_initial = 0.0;  // max_t l1(t) / l1(0)
  double tolerance = 0.0;       // l1_tol * (initial + 1)
  bool pass = false;
};
L1MonotoneReport check_l1_monotone(const DiagnosticsTrace& trace, double l1_tol);

/// Bounds from the comparison/maximum principle for the regularized flow.
struct BoundsReport {
  double lower_bound = 0.0;   // min(min psi, min g)
  double upper_bound = 0.0;   // max(max phi, max g)
  double gradient_bound = 0.0;
  double rhs_bound = 0.0;     // max over grid of the nuclear norm of hess(g)
  double mp_tol = 0.0;        // absolute slack for the value bounds
  double mp_tol_rel = 0.0;    // relative slack for gradient and rhs bounds
  double worst_lower_violation = 0.0;
  double worst_upper_violation = 0.0;
  double worst_gradient_ratio = 0.0;  // max |grad u| / gradient_bound
  double initial_rhs_ratio = 0.0;     // max |rhs(g)| / rhs_bound
  double max_rhs_ratio = 0.0;         // monitored only
  bool values_ok = false;
  bool gradient_ok = false;
  bool initial_rhs_ok = false;
  bool pass() const { return values_ok && gradient_ok && initial_rhs_ok; }
};

/// mp_tol = 10 (dt_max + h^2) * max(1, max|g|), relative slack 10 (dt_max + h^2).
BoundsReport check_bounds(const DiagnosticsTrace& trace, const ObstaclePair& obs, const ScalarField& g, double dt_max);

}  // namespace omcf
