// Acceptance suite: one pass/fail line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "omcf/experiment.hpp"

using namespace omcf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Pass flag plus a running detail line.
struct Detail {
  std::string text;
  template <class T>
  Detail& operator<<(const T& x) {
    std::ostringstream os;
    os << x;
    text += os.str();
    return *this;
  }
  std::string str() const { return text; }
};

struct Verdict {
  bool pass = true;
  Detail detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

// One run per catalog scenario at n = 64, eps = 0.05, shared by criteria 1-3.
struct BaseRun {
  std::string name;
  Trajectory traj;
  ScalarField g;
  double seconds = 0.0;
};

const std::vector<BaseRun>& base_runs() {
  static const std::vector<BaseRun> runs = [] {
    std::vector<BaseRun> out;
    for (const auto& name : scenario_names()) {
      ScenarioSpec spec = catalog_spec(name, 2);
      spec.n = 64;
      const Scenario sc = build_scenario(spec);
      const auto t0 = Clock::now();
      SolverConfig cfg = sc.solver_config(0.05);
      cfg.energy_increase_tol = 1.0;  // criterion 1 judges the trace itself
      BaseRun r;
      r.name = name;
      r.g = cfg.initial;
      r.traj = run(cfg, sc.obstacles());
      r.seconds = seconds_since(t0);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

Verdict energy_dissipation() {
  Verdict v;
  for (const auto& r : base_runs()) {
    const auto e = check_energy_monotone(r.traj.trace, 1e-8);
    const auto l = check_ledger(r.traj.trace, 0.05);
    v.detail << " " << r.name << ": ledger=" << l.relative << " max_dE=" << e.max_increase << " " << r.seconds << "s;";
    v.require(e.pass, r.name + " energy increase");
    v.require(l.pass, r.name + " ledger");
    v.require(r.seconds <= 120.0, r.name + " runtime");
  }
  return v;
}

Verdict l1_estimate() {
  Verdict v;
  for (const auto& r : base_runs()) {
    const auto l = check_l1_monotone(r.traj.trace, 0.05);
    const double rel_jump = l.initial > 0.0 ? l.max_jump / l.initial : l.max_jump;
    v.detail << " " << r.name << ": peak/initial=" << l.max_over_initial << " jump=" << rel_jump << ";";
    v.require(l.max_over_initial <= 1.05, r.name + " peak");
    v.require(rel_jump <= 0.05, r.name + " jump");
  }
  return v;
}

Verdict maximum_principles() {
  Verdict v;
  for (const auto& r : base_runs()) {
    const auto b = check_bounds(r.traj.trace, *r.traj.obstacles, r.g, r.traj.dt_max_used);
    v.detail << " " << r.name << ": value_viol=" << std::max(b.worst_lower_violation, b.worst_upper_violation)
             << " grad_ratio=" << b.worst_gradient_ratio << " rhs_ratio=" << b.initial_rhs_ratio << ";";
    v.require(b.pass(), r.name + " bounds");
  }
  return v;
}

Verdict shrinking_sphere() {
  Verdict v;
  const auto r2 = sphere_convergence_study(catalog_spec("sphere", 2), 10);
  v.detail << " 2D n=128: max_dev=" << r2.max_deviation << " " << r2.runtime_seconds << "s;";
  v.require(!r2.samples.empty() && r2.max_deviation <= 0.03, "2D deviation");
  v.require(r2.runtime_seconds <= 300.0, "2D runtime");
  const auto r3 = sphere_convergence_study(catalog_spec("sphere", 3), 10);
  v.detail << " 3D n=96: max_dev=" << r3.max_deviation << " " << r3.runtime_seconds << "s;";
  v.require(!r3.samples.empty() && r3.max_deviation <= 0.05, "3D deviation");
  return v;
}

Verdict obstacle_clamping() {
  Verdict v;
  const ScenarioSpec spec = catalog_spec("clamping", 2);
  const Scenario sc = build_scenario(spec);
  const auto obs = sc.obstacles();
  const double target = 2.0 * std::numbers::pi * kClampRadius;
  std::vector<double> gaps, masses;
  for (double eps : {0.1, 0.05, 0.025}) {
    const Trajectory traj = run(sc.solver_config(eps), obs);
    const ScalarField& u = traj.snapshots.back().u;
    const double P = perimeter(u, make_probe(u, 0.0, eps));
    double gap = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) gap = std::max(gap, obs->phi[p] - u[p]);
    gaps.push_back(gap);
    masses.push_back(traj.trace.back().penalty_mass);
    const double rel = std::abs(P - target) / target;
    v.detail << " eps=" << eps << ": perimeter_err=" << rel << " sup_gap=" << gap << " mass=" << masses.back() << ";";
    v.require(rel <= 0.05, "perimeter at eps=" + std::to_string(eps));
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    v.require(gaps[i] < gaps[i - 1], "sup(phi - u)_+ not strictly decreasing");
    v.require(masses[i] < masses[i - 1], "penalty mass not strictly decreasing");
  }
  return v;
}

Verdict gamma_limsup() {
  Verdict v;
  ScenarioSpec spec = catalog_spec("clamping", 2);
  const Scenario sc = build_scenario(spec);
  const auto obs = sc.obstacles();
  const TorusGrid grid = sc.grid();
  const double K = spec.amplitude;
  const ScalarField g = sc.initial_field();
  std::vector<std::pair<std::string, ScalarField>> fields;
  fields.emplace_back("constant", ScalarField(grid, 0.3 * K));
  fields.emplace_back("initial", g);
  fields.emplace_back("lower_obstacle", obs->phi);
  fields.emplace_back("midpoint", map_points(grid, [&](std::size_t p) { return 0.5 * (obs->phi[p] + obs->psi[p]); }));
  fields.emplace_back("clipped_wave", map_points(grid, [&](std::size_t p) {
                        const Point x = grid.position(p);
                        const double w = 0.4 * K * std::sin(2.0 * std::numbers::pi * x[0]) *
                                         std::cos(2.0 * std::numbers::pi * x[1]);
                        return std::clamp(w, obs->phi[p], obs->psi[p]);
                      }));
  const std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125};
  for (const auto& [name, u] : fields) {
    const auto rows = gamma_limsup_check(u, *obs, eps_list);
    double worst = 0.0;
    for (const auto& row : rows) {
      worst = std::max(worst, row.gap / row.eps);
      v.require(row.pass, name + " eps=" + std::to_string(row.eps));
      if (name == "constant") v.require(std::abs(row.gap - row.eps) <= 1e-10, "constant gap != eps");
    }
    v.detail << " " << name << ": max gap/eps=" << worst << ";";
  }
  return v;
}

Verdict ordered_pairs_stay_ordered() {
  Verdict v;
  for (const auto& name : scenario_names()) {
    ScenarioSpec spec = catalog_spec(name, 2);
    spec.n = 64;
    const Scenario sc = build_scenario(spec);
    const auto obs = sc.obstacles();
    double worst = 0.0;
    for (const auto& [g1, g2] : ordered_pairs(sc, 10, 7)) {
      SolverConfig cfg = sc.solver_config(0.05);
      cfg.initial = g1;
      const auto rep = comparison_test(g1, g2, *obs, cfg);
      worst = std::max(worst, rep.tolerance > 0.0 ? rep.max_violation / rep.tolerance : rep.max_violation);
      v.require(rep.pass, name + " pair");
    }
    v.detail << " " << name << ": worst viol/tol=" << worst << ";";
  }
  return v;
}

Verdict relabeling_maps() {
  Verdict v;
  ScenarioSpec sphere = catalog_spec("sphere", 2);
  sphere.n = 64;
  const auto affine = relabeling_test(affine_relabeling(2.0, 0.5), build_scenario(sphere), {0.05}, 8);
  v.detail << " affine sphere delta=" << affine.delta.front() << ";";
  v.require(affine.delta.front() <= 1e-10, "affine delta");
  const ScenarioSpec clamp = catalog_spec("clamping", 2);
  const auto cubic =
      relabeling_test(cubic_relabeling(clamp.amplitude), build_scenario(clamp), {0.1, 0.05, 0.025, 0.0125}, 8);
  v.detail << " cubic clamping delta=";
  for (double d : cubic.delta) v.detail << d << " ";
  v.require(cubic.nonincreasing, "cubic deltas increase");
  return v;
}

void motion_fields(Verdict& v, const std::string& tag, const Trajectory& traj, bool two_sided) {
  const TimeWindow window{0.0, traj.snapshots.back().t};
  double worst_low = 1e300, worst_abs = 0.0;
  for (int f = 0; f < 20; ++f) {
    TestField field;
    field.mode = f == 0 ? FieldMode::obstacle_aligned : FieldMode::random_mixed;
    field.seed = static_cast<std::uint64_t>(f);
    field.id = to_string(field.mode) + "#" + std::to_string(f);
    const auto r = bulk_motion_law_residual(traj, field, window, MotionTolerances{}, false);
    worst_low = std::min(worst_low, r.value / r.tolerance);
    worst_abs = std::max(worst_abs, std::abs(r.value) / r.tolerance);
    v.require(r.pass, tag + " one-sided " + field.id);
    if (two_sided) v.require(std::abs(r.value) <= r.tolerance, tag + " two-sided " + field.id);
  }
  v.detail << " " << tag << " motion: min value/tol=" << worst_low << " max |value|/tol=" << worst_abs << ";";
}

Verdict bv_residuals() {
  Verdict v;
  {
    const Scenario sc = build_scenario(catalog_spec("sphere", 2));
    const ScenarioSpec& spec = sc.spec;
    const Trajectory traj = run(sc.solver_config(spec.eps_list.front()), sc.obstacles());
    const double T = traj.snapshots.back().t;
    SeparableTestFunction z;
    z.eta = ScalarField::sample(traj.grid(), [](const Point& x) {
      return 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * (x[0] - 0.5)) * std::cos(2.0 * std::numbers::pi * (x[1] - 0.5));
    });
    const double w = 0.5 * std::numbers::pi / T;
    z.tau = [w](double t) { return std::cos(w * t); };
    z.dtau = [w](double t) { return -w * std::sin(w * t); };
    const auto d = distributional_velocity_residual(traj, z, {0.0, T}, 0.03);
    v.detail << " sphere distributional=" << d.value / d.scale << ";";
    v.require(d.pass, "distributional identity");
    const auto p = per_level_dissipation_residual(traj, make_probe(traj.snapshots.front().u, 0.0, traj.eps), 0.0, T, 0.05);
    v.detail << " sphere dissipation=" << p.value / p.scale << ";";
    v.require(p.pass, "per-level dissipation");
    motion_fields(v, "sphere", traj, true);
  }
  {
    const ScenarioSpec spec = catalog_spec("clamping", 2);
    const Scenario sc = build_scenario(spec);
    const Trajectory traj = run(sc.solver_config(spec.eps_list.back()), sc.obstacles());
    motion_fields(v, "clamping", traj, false);
  }
  return v;
}

Verdict coarea_levels() {
  Verdict v;
  const TorusGrid grid(2, 128);
  for (const char* spec : {"sine:amplitude=1,wave=1/0", "sine:amplitude=0.5,wave=2/1,offset=0.3",
                           "cone:radius=0.3,amplitude=1", "dome:center=0.5/0.5,base=0.3,slope=-1,amplitude=1",
                           "bump:center=0.5/0.5,L=1,scale=1"}) {
    const ScalarField u = parse_field_spec(2, spec).sample(grid);
    const double band = 4.0 * grid.h() * std::max(level_slope(u, 0.5 * (u.max() + u.min())), 1e-3);
    const auto c = coarea_consistency(u, band);
    v.detail << " " << std::string(spec).substr(0, std::string(spec).find(':')) << "=" << c.relative_error << ";";
    v.require(c.relative_error <= 0.02, spec);
  }
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Verdict determinism() {
  Verdict v;
  RunConfig c = parse_config(
      "scenario.name = clamping\n"
      "grid.n = 64\n"
      "solver.eps = 0.05\n"
      "checks.distributional = true\n"
      "checks.dissipation = true\n"
      "checks.motion = true\n"
      "checks.motion_fields = 4\n"
      "seed = 11\n",
      "determinism");
  const auto root = std::filesystem::temp_directory_path() / "omcf_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::vector<ExperimentResult> results;
  for (const auto& [tag, threads] : std::vector<std::pair<std::string, int>>{{"a1", 1}, {"b1", 1}, {"c4", 4}}) {
    c.threads = threads;
    results.push_back(run_experiment(c, (root / tag).string()));
  }
  apply_thread_setting(0);
  std::size_t compared = 0;
  for (const auto& file : results.front().files) {
    if (file == "config.effective") continue;  // records the thread count
    const std::string ref = slurp(root / "a1" / file);
    for (const char* other : {"b1", "c4"}) {
      v.require(slurp(root / other / file) == ref, file + " differs in run " + other);
      ++compared;
    }
  }
  v.detail << " " << results.front().files.size() << " files, " << compared << " comparisons;";
  std::filesystem::remove_all(root);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"energy dissipation", energy_dissipation},
      {"L1 estimate", l1_estimate},
      {"maximum principles", maximum_principles},
      {"shrinking circle/sphere", shrinking_sphere},
      {"obstacle clamping", obstacle_clamping},
      {"Gamma-limsup", gamma_limsup},
      {"comparison principle", ordered_pairs_stay_ordered},
      {"relabeling", relabeling_maps},
      {"BV residuals", bv_residuals},
      {"coarea consistency", coarea_levels},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::printf("criterion %2zu %-24s %s (%.1fs)%s\n", i + 1, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                seconds_since(t0), v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
