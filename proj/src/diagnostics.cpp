#include "omcf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace omcf {

void DiagnosticsTrace::append(const TraceRow& row) {
  if (!rows_.empty()) {
    if (!(row.t > rows_.back().t)) throw std::logic_error("trace times must strictly increase");
    if (row.dissipation_cumulative < rows_.back().dissipation_cumulative)
      throw std::logic_error("cumulative dissipation must not decrease");
  }
  rows_.push_back(row);
}

std::string DiagnosticsTrace::csv_header() {
  return "t,dt,energy,dissipation_cumulative,l1_curvature,penalty_mass,sup_u,inf_u,max_grad_norm,max_rhs";
}

std::string DiagnosticsTrace::csv_line(const TraceRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.t, r.dt, r.energy,
                r.dissipation_cumulative, r.l1_curvature, r.penalty_mass, r.sup_u, r.inf_u, r.max_grad_norm,
                r.max_rhs);
  return buf;
}

void DiagnosticsTrace::write_csv(std::ostream& os) const {
  os << csv_header() << '\n';
  for (const auto& r : rows_) os << csv_line(r) << '\n';
}

StepDiagnostics measure(const FlowState& state, const ObstaclePair& obs) {
  state.evaluate(obs);
  const TorusGrid& grid = state.grid();
  const ScalarField& u = state.u();
  const ScalarField& H = state.curvature();
  const ScalarField& f = state.force();
  const ScalarField& ne = state.norm_eps();
  const ScalarField& rhs = state.rhs();
  const double eps = state.eps();

  StepDiagnostics d;
  const ScalarField pen = map_points(grid, [&](std::size_t p) { return penalty_density(u[p], obs.phi[p], obs.psi[p], eps); });
  const ScalarField edens = map_points(grid, [&](std::size_t p) { return ne[p] + pen[p]; });
  const ScalarField diss = map_points(grid, [&](std::size_t p) {
    const double r = -H[p] + f[p];
    return r * r * ne[p];
  });
  const ScalarField l1 = map_points(grid, [&](std::size_t p) { return std::abs(-H[p] + f[p]); });
  d.energy = integrate(edens);
  d.dissipation_rate = integrate(diss);
  d.l1_curvature = integrate(l1);
  d.penalty_mass = integrate(pen);
  d.sup_u = u.max();
  d.inf_u = u.min();
  d.max_grad_norm = state.grad_u().max_norm();
  d.max_rhs = rhs.max_abs();
  return d;
}

double l1_curvature(const FlowState& state, const ObstaclePair& obs) {
  state.evaluate(obs);
  const ScalarField& H = state.curvature();
  const ScalarField& f = state.force();
  return integrate(map_points(state.grid(), [&](std::size_t p) { return std::abs(-H[p] + f[p]); }));
}

double penalty_mass(const FlowState& state, const ObstaclePair& obs) { return integrate(penalty(state.u(), obs, state.eps())); }

TraceRow make_row(const StepDiagnostics& d, double t, double dt, double cumulative) {
  TraceRow r;
  r.t = t;
  r.dt = dt;
  r.energy = d.energy;
  r.dissipation_cumulative = cumulative;
  r.l1_curvature = d.l1_curvature;
  r.penalty_mass = d.penalty_mass;
  r.sup_u = d.sup_u;
  r.inf_u = d.inf_u;
  r.max_grad_norm = d.max_grad_norm;
  r.max_rhs = d.max_rhs;
  return r;
}

void dissipation_ledger_update(DiagnosticsTrace& trace, const StepDiagnostics& before, const StepDiagnostics& after,
                               double t_after, double dt) {
  if (trace.empty()) throw std::logic_error("dissipation_ledger_update needs the initial row");
  const double cumulative = trace.back().dissipation_cumulative + dt * before.dissipation_rate;
  trace.append(make_row(after, t_after, dt, cumulative));
}

LedgerReport check_ledger(const DiagnosticsTrace& trace, double diss_tol) {
  LedgerReport rep;
  if (trace.empty()) return rep;
  // E_b + D_b - D_a - E_a = R_b - R_a with R = E + D, so the worst pair is max R - min R.
  double rmin = trace.front().energy, rmax = rmin;
  for (const auto& r : trace.rows()) {
    const double v = r.energy + r.dissipation_cumulative;
    rmin = std::min(rmin, v);
    rmax = std::max(rmax, v);
  }
  rep.max_residual = rmax - rmin;
  const double e0 = trace.front().energy;
  rep.relative = rep.max_residual / e0;
  rep.tolerance = diss_tol * e0;
  rep.pass = rep.max_residual <= rep.tolerance;
  return rep;
}

EnergyMonotoneReport check_energy_monotone(const DiagnosticsTrace& trace, double rel_tol) {
  EnergyMonotoneReport rep;
  if (trace.empty()) return rep;
  rep.tolerance = rel_tol * trace.front().energy;
  rep.max_increase = -std::numeric_limits<double>::infinity();
  const auto& rows = trace.rows();
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double inc = rows[k].energy - rows[k - 1].energy;
    if (inc > rep.max_increase) {
      rep.max_increase = inc;
      rep.worst_row = k;
    }
  }
  if (rows.size() < 2) rep.max_increase = 0.0;
  rep.pass = rep.max_increase <= rep.tolerance;
  return rep;
}

L1MonotoneReport check_l1_monotone(const DiagnosticsTrace& trace, double l1_tol) {
  L1MonotoneReport rep;
  if (trace.empty()) return rep;
  const auto& rows = trace.rows();
  rep.initial = rows.front().l1_curvature;
  double peak = rep.initial;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    rep.max_jump = std::max(rep.max_jump, rows[k].l1_curvature - rows[k - 1].l1_curvature);
    peak = std::max(peak, rows[k].l1_curvature);
  }
  rep.max_over_initial = rep.initial > 0.0 ? peak / rep.initial : (peak > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  rep.tolerance = l1_tol * (rep.initial + 1.0);
  rep.pass = rep.max_jump <= rep.tolerance;
  return rep;
}

BoundsReport check_bounds(const DiagnosticsTrace& trace, const ObstaclePair& obs, const ScalarField& g, double dt_max) {
  BoundsReport rep;
  const TorusGrid& grid = g.grid();
  const double h = grid.h();
  rep.lower_bound = std::min(obs.psi.min(), g.min());
  rep.upper_bound = std::max(obs.phi.max(), g.max());
  rep.mp_tol_rel = 10.0 * (dt_max + h * h);
  rep.mp_tol = rep.mp_tol_rel * std::max(1.0, g.max_abs());
  // Discrete gradients throughout, so the bound and the monitored quantity
  // share one difference operator.
  rep.gradient_bound = std::max({gradient(obs.phi).max_norm(), gradient(obs.psi).max_norm(), gradient(g).max_norm()});
  const SymmetricMatrixField hg = hessian(g);
  for (std::size_t p = 0; p < grid.size(); ++p) rep.rhs_bound = std::max(rep.rhs_bound, hg.nuclear_at(p));

  for (const auto& r : trace.rows()) {
    rep.worst_lower_violation = std::max(rep.worst_lower_violation, rep.lower_bound - r.inf_u);
    rep.worst_upper_violation = std::max(rep.worst_upper_violation, r.sup_u - rep.upper_bound);
    if (rep.gradient_bound > 0.0)
      rep.worst_gradient_ratio = std::max(rep.worst_gradient_ratio, r.max_grad_norm / rep.gradient_bound);
    else if (r.max_grad_norm > 0.0)
      rep.worst_gradient_ratio = std::numeric_limits<double>::infinity();
    if (rep.rhs_bound > 0.0) rep.max_rhs_ratio = std::max(rep.max_rhs_ratio, r.max_rhs / rep.rhs_bound);
  }
  rep.values_ok = rep.worst_lower_violation <= rep.mp_tol && rep.worst_upper_violation <= rep.mp_tol;
  rep.gradient_ok = rep.worst_gradient_ratio <= 1.0 + rep.mp_tol_rel;
  if (!trace.empty()) {
    const double r0 = trace.front().max_rhs;
    rep.initial_rhs_ratio = rep.rhs_bound > 0.0 ? r0 / rep.rhs_bound : (r0 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.initial_rhs_ok = r0 <= rep.rhs_bound * (1.0 + rep.mp_tol_rel) || r0 == 0.0;
  }
  return rep;
}

}  // namespace omcf
