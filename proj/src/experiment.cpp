#include "omcf/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "omcf/snapshot_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omcf {

namespace fs = std::filesystem;

bool ExperimentResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string ExperimentResult::first_failure() const {
  for (const auto& c : checks)
    if (!c.pass) return c.name;
  return {};
}

std::string resolve_output_dir(const RunConfig& config) {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? std::string(env) : config.output_dir;
}

void apply_thread_setting(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Output {
 public:
  Output(std::string dir, ExperimentResult& result) : dir_(std::move(dir)), result_(result) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& text) {
    std::ofstream os(fs::path(dir_) / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + (fs::path(dir_) / name).string() + "'");
    os << text;
    result_.files.push_back(name);
  }

  void snapshot(const Snapshot& s) {
    fs::create_directories(fs::path(dir_) / "snapshots");
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/u_%08zu.bin", s.step);
    write_snapshot((fs::path(dir_) / name).string(), s.u, s.t);
    result_.files.push_back(name);
  }

 private:
  std::string dir_;
  ExperimentResult& result_;
};

std::string trace_csv(const DiagnosticsTrace& trace) {
  std::ostringstream os;
  trace.write_csv(os);
  return os.str();
}

void add(ExperimentResult& r, std::string name, double value, double tol, bool pass, std::string detail = {}) {
  r.checks.push_back({std::move(name), value, tol, pass, std::move(detail)});
}

void add_residual(ExperimentResult& r, const ResidualReport& rep, const std::string& check) {
  r.residuals.push_back(rep);
  add(r, check, rep.value, rep.tolerance, rep.pass, rep.field_id);
}

std::string checks_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "check,value,tolerance,pass,detail\n";
  for (const auto& c : r.checks)
    os << c.name << ',' << num(c.value) << ',' << num(c.tolerance) << ',' << (c.pass ? 1 : 0) << ',' << c.detail
       << '\n';
  return os.str();
}

std::string residuals_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << residual_csv_header() << '\n';
  for (const auto& rep : r.residuals) os << residual_csv_line(rep) << '\n';
  return os.str();
}

std::string summary_text(const ExperimentResult& r) {
  std::ostringstream os;
  for (const auto& c : r.checks)
    os << (c.pass ? "pass " : "FAIL ") << c.name << " value=" << num(c.value) << " tol=" << num(c.tolerance) << '\n';
  os << "overall: " << (r.pass() ? "pass" : "fail");
  if (!r.pass()) os << " (first failing check: " << r.first_failure() << ")";
  os << '\n';
  return os.str();
}

void finish(Output& out, ExperimentResult& r) {
  out.write("checks.csv", checks_csv(r));
  out.write("residuals.csv", residuals_csv(r));
  out.write("summary.txt", summary_text(r));
}

SolverConfig solver_settings(const Scenario& sc, double eps) {
  SolverConfig cfg = sc.solver_config(eps);
  // Blow-ups still abort; small increases are left to the energy check.
  cfg.energy_increase_tol = 1.0;
  return cfg;
}

SeparableTestFunction distributional_test_function(const TorusGrid& grid, double T) {
  SeparableTestFunction z;
  const int d = grid.dim();
  z.eta = ScalarField::sample(grid, [d](const Point& x) {
    double p = 0.5;
    for (int a = 0; a < d; ++a) p *= std::cos(2.0 * std::numbers::pi * (x[a] - 0.5));
    return 1.0 + p;
  });
  const double w = 0.5 * std::numbers::pi / T;
  z.tau = [w](double t) { return std::cos(w * t); };
  z.dtau = [w](double t) { return -w * std::sin(w * t); };
  z.c1_norm = 1.5 + std::numbers::pi * std::sqrt(static_cast<double>(d)) + w;
  return z;
}

void trajectory_checks(const RunConfig& c, const Trajectory& traj, const ScalarField& g, ExperimentResult& r,
                       std::ostream* log) {
  const CheckSettings& k = c.checks;
  const ObstaclePair& obs = *traj.obstacles;
  if (k.energy) {
    const auto e = check_energy_monotone(traj.trace, k.energy_tol);
    add(r, "energy_monotone", e.max_increase, e.tolerance, e.pass);
  }
  if (k.ledger) {
    const auto l = check_ledger(traj.trace, k.ledger_tol);
    add(r, "ledger", l.relative, k.ledger_tol, l.pass);
  }
  if (k.l1) {
    const auto l = check_l1_monotone(traj.trace, k.l1_tol);
    add(r, "l1_jump", l.max_jump, l.tolerance, l.pass);
    add(r, "l1_peak", l.max_over_initial, 1.0 + k.l1_tol, l.max_over_initial <= 1.0 + k.l1_tol);
  }
  if (k.bounds) {
    const auto b = check_bounds(traj.trace, obs, g, traj.dt_max_used);
    add(r, "bounds_values", std::max(b.worst_lower_violation, b.worst_upper_violation), b.mp_tol, b.values_ok);
    add(r, "bounds_gradient", b.worst_gradient_ratio, 1.0 + b.mp_tol_rel, b.gradient_ok);
    add(r, "bounds_rhs", b.initial_rhs_ratio, 1.0 + b.mp_tol_rel, b.initial_rhs_ok);
  }
  const double T = traj.snapshots.back().t;
  const TimeWindow window{0.0, T};
  if (k.distributional) {
    const auto z = distributional_test_function(traj.grid(), T);
    add_residual(r, distributional_velocity_residual(traj, z, window, k.dist_tol), "distributional_velocity");
  }
  if (k.dissipation) {
    const LevelSetProbe probe = make_probe(traj.snapshots.front().u, k.level, traj.eps);
    add_residual(r, per_level_dissipation_residual(traj, probe, 0.0, T, k.per_tol), "per_level_dissipation");
  }
  if (k.motion) {
    MotionTolerances mt;
    mt.motion_tol = k.motion_tol;
    for (int f = 0; f < k.motion_fields; ++f) {
      TestField field;
      field.mode = f == 0 ? FieldMode::obstacle_aligned : FieldMode::random_mixed;
      field.seed = c.seed * 1000003ULL + static_cast<std::uint64_t>(f);
      field.id = to_string(field.mode) + "#" + std::to_string(f);
      add_residual(r, bulk_motion_law_residual(traj, field, window, mt, k.motion_two_sided), "motion_law");
      if (log) *log << "  motion field " << field.id << (r.checks.back().pass ? " pass" : " FAIL") << "\n";
    }
  }
  if (k.sphere) {
    const auto s = sphere_deviation(traj, c.dim);
    add(r, "sphere_radius", s.max_deviation, k.sphere_tol, s.max_deviation <= k.sphere_tol && !s.samples.empty());
  }
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config, const std::string& output_dir, std::ostream* log) {
  config.validate();
  apply_thread_setting(config.threads);
  ExperimentResult r;
  r.output_dir = output_dir;
  Output out(output_dir, r);
  out.write("config.effective", echo_config(config));

  const Scenario sc = config.scenario_built();
  const auto obs = sc.obstacles();
  const SolverConfig cfg = solver_settings(sc, config.eps);
  if (log) *log << "run " << config.scenario << " dim=" << config.dim << " n=" << config.n << " eps=" << config.eps << "\n";

  RunHooks hooks;
  if (config.snapshots == SnapshotPolicy::all) hooks.on_snapshot = [&](const Snapshot& s) { out.snapshot(s); };
  Trajectory traj;
  try {
    traj = run(cfg, obs, hooks);
  } catch (const NumericalAbort& e) {
    out.write("trace.csv", trace_csv(e.partial().trace));
    throw;
  }
  out.write("trace.csv", trace_csv(traj.trace));
  if (config.snapshots == SnapshotPolicy::final) out.snapshot(traj.snapshots.back());
  if (log) *log << "  " << traj.steps << " steps to t=" << traj.snapshots.back().t << "\n";

  trajectory_checks(config, traj, cfg.initial, r, log);
  finish(out, r);
  return r;
}

ExperimentResult run_study(const RunConfig& config, const std::string& output_dir, std::ostream* log) {
  config.validate();
  apply_thread_setting(config.threads);
  ExperimentResult r;
  r.output_dir = output_dir;
  Output out(output_dir, r);
  out.write("config.effective", echo_config(config));

  const std::vector<double> eps_list = config.study_eps.empty() ? std::vector<double>{config.eps} : config.study_eps;
  const std::vector<int> n_list = config.study_n.empty() ? std::vector<int>{config.n} : config.study_n;
  std::ostringstream csv;
  csv << "n,eps,steps,t_end,energy,penalty_mass,sup_lower_gap,sup_upper_gap,l1_peak_ratio,sphere_deviation\n";
  for (int n : n_list) {
    std::vector<double> sup_gap, mass;
    for (double eps : eps_list) {
      const Scenario sc = config.scenario_at(n, eps);
      const auto obs = sc.obstacles();
      const SolverConfig cfg = solver_settings(sc, eps);
      if (log) *log << "study n=" << n << " eps=" << eps << "\n";
      const Trajectory traj = run(cfg, obs);
      const ScalarField& u = traj.snapshots.back().u;
      double lo = 0.0, hi = 0.0;
      for (std::size_t p = 0; p < u.size(); ++p) {
        lo = std::max(lo, obs->phi[p] - u[p]);
        hi = std::max(hi, u[p] - obs->psi[p]);
      }
      const TraceRow& last = traj.trace.back();
      const auto l1 = check_l1_monotone(traj.trace, config.checks.l1_tol);
      double dev = std::nan("");
      if (config.scenario == "sphere" && config.dim >= 2) dev = sphere_deviation(traj, config.dim).max_deviation;
      csv << n << ',' << num(eps) << ',' << traj.steps << ',' << num(last.t) << ',' << num(last.energy) << ','
          << num(last.penalty_mass) << ',' << num(lo) << ',' << num(hi) << ',' << num(l1.max_over_initial) << ','
          << num(dev) << '\n';
      sup_gap.push_back(lo);
      mass.push_back(last.penalty_mass);
    }
    if (config.checks.trend) {
      auto decreasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
          if (!(v[i] < v[i - 1])) return false;
        return true;
      };
      const std::string tag = "_n" + std::to_string(n);
      add(r, "trend_sup_lower_gap" + tag, sup_gap.back(), sup_gap.front(), decreasing(sup_gap));
      add(r, "trend_penalty_mass" + tag, mass.back(), mass.front(), decreasing(mass));
    }
  }
  out.write("study.csv", csv.str());
  finish(out, r);
  return r;
}

std::string audit_report(const RunConfig& config, bool* pass) {
  const Scenario sc = config.scenario_built();
  const WellPreparedReport rep = audit_well_prepared(*sc.obstacles(), sc.initial_field());
  std::ostringstream os;
  os << "separation = " << num(rep.separation) << "\n"
     << "max_abs_g = " << num(rep.max_abs_g) << "\n"
     << "max_phi = " << num(rep.max_phi) << "\n"
     << "min_psi = " << num(rep.min_psi) << "\n"
     << "bounds_ok = " << (rep.bounds_ok ? "true" : "false") << "\n"
     << "critical_lower_points = " << rep.critical_lower_points << "\n"
     << "critical_lower_components = " << rep.critical_lower_components << "\n"
     << "critical_upper_points = " << rep.critical_upper_points << "\n"
     << "critical_upper_components = " << rep.critical_upper_components << "\n";
  for (const auto& note : rep.notes) os << "note = " << note << "\n";
  os << "pass = " << (rep.pass ? "true" : "false") << "\n";
  if (pass) *pass = rep.pass;
  return os.str();
}

}  // namespace omcf
