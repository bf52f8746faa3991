#pragma once

// Explicit Euler integration of the penalized level-set equation
//   u_t = a_ij(grad u) u_ij + |grad u|_eps f_eps(u)
// with a diffusion/penalty-stiffness time step limit.

#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "omcf/diagnostics.hpp"
#include "omcf/model.hpp"

namespace omcf {

struct SolverConfig {
  double eps = 0.05;
  double t_end = 0.0;
  double cfl_safety = 0.9;
  double dt_max = std::numeric_limits<double>::infinity();
  /// Snapshot every this many steps (0: only the first and the final state).
  int output_every = 0;
  /// Times the integrator lands on exactly and snapshots.
  std::vector<double> sample_times;
  /// Abort when one step raises the energy by more than this fraction of E(g).
  double energy_increase_tol = 1e-8;
  bool skip_audit = false;
  ScalarField initial;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Snapshot {
  double t = 0.0;
  std::size_t step = 0;
  ScalarField u;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  DiagnosticsTrace trace;
  double eps = 0.0;
  std::shared_ptr<const ObstaclePair> obstacles;
  std::size_t steps = 0;
  double dt_max_used = 0.0;

  const TorusGrid& grid() const { return snapshots.front().u.grid(); }
  /// Evaluated state at snapshot k.
  FlowState state(std::size_t k) const;
  /// Index of the snapshot whose time equals t (within 1e-12), or npos.
  std::size_t find_time(double t) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

class StabilityError : public std::runtime_error {
 public:
  StabilityError(const std::string& what, double dt, double limit)
      : std::runtime_error(what), dt_(dt), limit_(limit) {}
  double dt() const { return dt_; }
  double limit() const { return limit_; }

 private:
  double dt_;
  double limit_;
};

/// Non-finite values or an energy increase beyond tolerance. Carries the
/// trajectory recorded up to the last accepted step.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::size_t step, Trajectory partial)
      : std::runtime_error(what), step_(step), partial_(std::make_shared<Trajectory>(std::move(partial))) {}
  std::size_t step() const { return step_; }
  const Trajectory& partial() const { return *partial_; }

 private:
  std::size_t step_;
  std::shared_ptr<Trajectory> partial_;
};

/// H_eps = -(1/|grad u|_eps) a_ij u_ij. Positive on the zero level of a
/// function that decreases outward from a convex set (normal -grad u / |grad u|
/// points outward, H = div of the normal).
ScalarField curvature(const ScalarField& u, double eps);

/// a_ij u_ij + |grad u|_eps f_eps, evaluated on the state.
ScalarField rhs(const FlowState& state, const ObstaclePair& obs);

/// cfl_safety * min(h^2 / (2d), 1 / max(|grad u|_eps V''(u)), dt_max).
double stable_dt(const FlowState& state, const ObstaclePair& obs, double cfl_safety,
                 double dt_max = std::numeric_limits<double>::infinity());

/// u <- u + dt rhs. Throws StabilityError if dt exceeds stable_dt with unit safety.
void step(FlowState& state, const ObstaclePair& obs, double dt);

struct RunHooks {
  std::function<void(const TraceRow&)> on_row;
  std::function<void(const Snapshot&)> on_snapshot;
};

/// Integrates from the initial datum to t_end. Runs the well-preparedness
/// audit first unless config.skip_audit is set.
Trajectory run(const SolverConfig& config, std::shared_ptr<const ObstaclePair> obs, const RunHooks& hooks = {});

}  // namespace omcf
