#include "omcf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "omcf/kernel.hpp"

namespace omcf {

void SolverConfig::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("solver.eps must be > 0");
  if (!(t_end > 0.0)) throw std::invalid_argument("solver.t_end must be > 0");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("solver.cfl_safety must lie in (0, 1]");
  if (!(dt_max > 0.0)) throw std::invalid_argument("solver.dt_max must be > 0");
  if (output_every < 0) throw std::invalid_argument("solver.output_every must be >= 0");
  if (!(energy_increase_tol >= 0.0)) throw std::invalid_argument("solver.energy_increase_tol must be >= 0");
  if (initial.size() == 0) throw std::invalid_argument("solver.initial is empty");
  for (double s : sample_times)
    if (!(s > 0.0 && s <= t_end)) throw std::invalid_argument("solver.sample_times entries must lie in (0, t_end]");
}

FlowState Trajectory::state(std::size_t k) const {
  const Snapshot& s = snapshots.at(k);
  FlowState st(s.u, s.t, eps);
  st.evaluate(*obstacles);
  return st;
}

std::size_t Trajectory::find_time(double t) const {
  for (std::size_t k = 0; k < snapshots.size(); ++k)
    if (std::abs(snapshots[k].t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
  return npos;
}

ScalarField curvature(const ScalarField& u, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("curvature: eps must be positive");
  const TorusGrid& grid = u.grid();
  const int d = grid.dim();
  const VectorField g = gradient(u);
  const SymmetricMatrixField hess = hessian(u);
  return map_points(grid, [&](std::size_t p) {
    double g2 = 0.0, trace = 0.0, quad = 0.0;
    for (int a = 0; a < d; ++a) g2 += g[a][p] * g[a][p];
    const double nrm2 = eps * eps + g2;
    for (int a = 0; a < d; ++a) {
      trace += hess.entry(a, a)[p];
      for (int b = 0; b < d; ++b) quad += g[a][p] * g[b][p] * hess.entry(a, b)[p];
    }
    return -(trace - quad / nrm2) / std::sqrt(nrm2);
  });
}

ScalarField rhs(const FlowState& state, const ObstaclePair& obs) {
  state.evaluate(obs);
  return state.rhs();
}

double stable_dt(const FlowState& state, const ObstaclePair& obs, double cfl_safety, double dt_max) {
  state.evaluate(obs);
  const TorusGrid& grid = state.grid();
  const double h = grid.h();
  const double diffusion = h * h / (2.0 * grid.dim());
  const ScalarField& u = state.u();
  const ScalarField& ne = state.norm_eps();
  double stiff = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    stiff = std::max(stiff, ne[p] * penalty_second_derivative(u[p], obs.phi[p], obs.psi[p], state.eps()));
  const double penalty_limit = stiff > 0.0 ? 1.0 / stiff : std::numeric_limits<double>::infinity();
  return cfl_safety * std::min({diffusion, penalty_limit, dt_max});
}

namespace {

ScalarField euler_update(const FlowState& state, double dt) {
  const ScalarField& u = state.u();
  const ScalarField& r = state.rhs();
  return map_points(u.grid(), [&](std::size_t p) { return u[p] + dt * r[p]; });
}

}  // namespace

void step(FlowState& state, const ObstaclePair& obs, double dt) {
  const double limit = stable_dt(state, obs, 1.0);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " exceeds the stability limit " << limit;
    throw StabilityError(os.str(), dt, limit);
  }
  ScalarField next = euler_update(state, dt);
  state.set(std::move(next), state.t() + dt);
}

Trajectory run(const SolverConfig& config, std::shared_ptr<const ObstaclePair> obs_ptr, const RunHooks& hooks) {
  config.validate();
  if (!obs_ptr) throw std::invalid_argument("run: obstacles missing");
  const ObstaclePair& obs = *obs_ptr;
  if (!(config.initial.grid() == obs.grid())) throw std::invalid_argument("run: initial datum and obstacles differ in grid");
  if (!config.skip_audit) {
    const WellPreparedReport rep = audit_well_prepared(obs, config.initial);
    if (!rep.pass) {
      std::string msg = "well-preparedness audit failed";
      for (const auto& note : rep.notes) msg += "; " + note;
      throw WellPreparedError(msg, {});
    }
  }

  Trajectory traj;
  traj.eps = config.eps;
  traj.obstacles = obs_ptr;

  std::vector<double> targets = config.sample_times;
  targets.push_back(config.t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::size_t next_target = 0;

  FlowState state(config.initial, 0.0, config.eps);
  StepDiagnostics before = measure(state, obs);
  const double e0 = before.energy;
  traj.trace.append(make_row(before, 0.0, 0.0, 0.0));
  if (hooks.on_row) hooks.on_row(traj.trace.back());
  traj.snapshots.push_back({0.0, 0, state.u()});
  if (hooks.on_snapshot) hooks.on_snapshot(traj.snapshots.back());

  std::size_t k = 0;
  while (next_target < targets.size()) {
    const double target = targets[next_target];
    double dt = stable_dt(state, obs, config.cfl_safety, config.dt_max);
    bool landed = false;
    if (state.t() + dt >= target - 1e-12 * target) {
      dt = target - state.t();
      landed = true;
    }
    ScalarField next = euler_update(state, dt);
    ++k;
    if (!next.all_finite()) {
      std::ostringstream os;
      os << "non-finite values after step " << k << " (t = " << state.t() + dt << ")";
      throw NumericalAbort(os.str(), k, std::move(traj));
    }
    const double t_new = landed ? target : state.t() + dt;
    state.set(std::move(next), t_new);
    const StepDiagnostics after = measure(state, obs);
    if (after.energy > before.energy + config.energy_increase_tol * e0) {
      std::ostringstream os;
      os << "energy increased by " << after.energy - before.energy << " at step " << k << " (t = " << t_new
         << "), above tolerance " << config.energy_increase_tol * e0;
      throw NumericalAbort(os.str(), k, std::move(traj));
    }
    dissipation_ledger_update(traj.trace, before, after, t_new, dt);
    if (hooks.on_row) hooks.on_row(traj.trace.back());
    traj.dt_max_used = std::max(traj.dt_max_used, dt);
    traj.steps = k;
    if (landed) ++next_target;
    const bool periodic = config.output_every > 0 && k % static_cast<std::size_t>(config.output_every) == 0;
    if (landed || periodic) {
      traj.snapshots.push_back({t_new, k, state.u()});
      if (hooks.on_snapshot) hooks.on_snapshot(traj.snapshots.back());
    }
    before = after;
  }
  return traj;
}

}  // namespace omcf
