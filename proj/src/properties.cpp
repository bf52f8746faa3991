#include "omcf/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace omcf {

void ScenarioSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("scenario.dim must be 1, 2 or 3");
  if (n < 8) throw std::invalid_argument("scenario.n must be at least 8");
  if (eps_list.empty()) throw std::invalid_argument("scenario.eps list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("scenario.eps entries must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("scenario.eps list must be strictly decreasing");
  }
  if (!(t_end > 0.0)) throw std::invalid_argument("scenario.t_end must be > 0");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("scenario.cfl_safety must lie in (0, 1]");
  if (output_every < 0) throw std::invalid_argument("scenario.output_every must be >= 0");
  if (!(amplitude > 0.0)) throw std::invalid_argument("scenario.amplitude must be > 0");
}

namespace {

Point antipode(int dim, const Point& c) {
  Point p = c;
  for (int a = 0; a < dim; ++a) p[a] = std::fmod(p[a] + 0.5, 1.0);
  return p;
}

// Cell centre next to (1/2, ..., 1/2). Keeping the extrema of radial data off
// grid nodes avoids nodes where the central gradient vanishes exactly while the
// Hessian does not.
Point center_point(int dim, int n) {
  Point c{0.5, 0.5, 0.5};
  for (int a = 0; a < dim; ++a) c[a] += 0.5 / n;
  return c;
}

Index3 nearest_index(const TorusGrid& grid, const Point& x) {
  Index3 idx{0, 0, 0};
  for (int a = 0; a < grid.dim(); ++a) idx[a] = grid.wrap(static_cast<int>(std::lround(x[a] * grid.n())));
  return idx;
}

}  // namespace

std::shared_ptr<const ObstaclePair> Scenario::obstacles() const {
  const TorusGrid g = grid();
  ObstaclePair obs = ObstaclePair::from_analytic(g, lower, upper, L, ell);
  for (const auto& x : lower_critical) obs.critical_lower.push_back(nearest_index(g, x));
  for (const auto& x : upper_critical) obs.critical_upper.push_back(nearest_index(g, x));
  return std::make_shared<const ObstaclePair>(std::move(obs));
}

ScalarField Scenario::initial_field() const { return initial.sample(grid()); }

SolverConfig Scenario::solver_config(double eps) const {
  SolverConfig c;
  c.eps = eps;
  c.t_end = spec.t_end;
  c.cfl_safety = spec.cfl_safety;
  c.output_every = spec.output_every;
  c.initial = initial_field();
  return c;
}

std::vector<std::string> scenario_names() { return {"sphere", "clamping", "sandwich", "stationary"}; }

ScenarioSpec catalog_spec(const std::string& name, int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("scenario dimension must be 1, 2 or 3");
  ScenarioSpec s;
  s.name = name;
  s.dim = dim;
  const double dm1 = std::max(1, dim - 1);
  if (name == "sphere") {
    s.n = dim == 3 ? 96 : 128;
    s.eps_list = {0.01};
    s.t_end = 0.8 * extinction_time(kSphereRadius, std::max(dim, 2));
    s.output_every = 20;
  } else if (name == "clamping") {
    s.n = 64;
    s.eps_list = {0.1, 0.05, 0.025};
    s.t_end = 0.045 / dm1;
    s.output_every = 20;
    s.amplitude = 100.0;
  } else if (name == "sandwich") {
    s.n = 64;
    s.eps_list = {0.05};
    s.t_end = 0.045 / dm1;
    s.output_every = 20;
    s.amplitude = 50.0;
  } else if (name == "stationary") {
    s.n = 32;
    s.eps_list = {0.05};
    s.t_end = 0.01;
    s.output_every = 10;
  } else {
    std::string names;
    for (const auto& k : scenario_names()) names += (names.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown scenario '" + name + "' (available: " + names + ")");
  }
  return s;
}

Scenario build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Scenario sc;
  sc.spec = spec;
  const int d = spec.dim;
  const double K = spec.amplitude;
  const Point c = center_point(d, spec.n);
  if (spec.name == "sphere") {
    // Shrinking sphere of radius 0.3, obstacles far outside the data range.
    sc.initial = make_cone(d, c, kSphereRadius, K, 0.03, 0.44);
    sc.lower = make_constant(-10.0 * K);
    sc.upper = make_constant(10.0 * K);
    sc.L = K;
    sc.ell = 0.5 * K;
  } else if (spec.name == "clamping") {
    // g and phi are K (a - rho) for one periodic distance rho that equals |x - c|
    // out to r = 0.3, so g - phi = 0.15 K everywhere: every level of g shrinks
    // onto the matching level of phi, the zero level onto the circle of radius
    // 0.15. rho has no flat parts, only isolated critical points.
    DomeShape shape;
    shape.center = c;
    shape.width = 0.03;
    const double far = shape.value(d, antipode(d, c), nullptr);
    sc.initial = make_dome(d, shape, kSphereRadius, -1.0, K);
    sc.lower = make_dome(d, shape, kClampRadius, -1.0, K);
    sc.upper = make_constant(0.5 * K);
    sc.L = std::max(0.3, far - 0.3) * 1.1 * K;
    sc.ell = 0.05 * K;
    sc.lower_critical = dome_critical_points(d, c);
  } else if (spec.name == "sandwich") {
    // Clamping geometry plus an upper obstacle 0.05 K above g: phi holds the
    // zero level at radius 0.15 while psi caps the rise of u around the
    // minimum at the antipode.
    DomeShape shape;
    shape.center = c;
    shape.width = 0.03;
    const double far = shape.value(d, antipode(d, c), nullptr);
    sc.initial = make_dome(d, shape, kSphereRadius, -1.0, K);
    sc.lower = make_dome(d, shape, kClampRadius, -1.0, K);
    sc.upper = make_dome(d, shape, kSphereRadius + 0.05, -1.0, K);
    sc.L = std::max(0.35, far - 0.3) * 1.1 * K;
    sc.ell = 0.05 * K;
    sc.lower_critical = dome_critical_points(d, c);
    sc.upper_critical = dome_critical_points(d, c);
  } else if (spec.name == "stationary") {
    sc.initial = make_constant(0.0);
    sc.lower = make_constant(-1.0 * K);
    sc.upper = make_constant(1.0 * K);
    sc.L = 0.5 * K;
    sc.ell = 0.25 * K;
  } else {
    catalog_spec(spec.name, d);  // throws with the list of names
  }
  return sc;
}

// ---------------------------------------------------------------------------

double extinction_time(double R0, int dim) {
  if (dim < 2) throw std::invalid_argument("extinction_time needs dim >= 2");
  return R0 * R0 / (2.0 * (dim - 1));
}

std::optional<double> sphere_oracle(double R0, int dim, double t) {
  const double T = extinction_time(R0, dim);
  if (t > T) return std::nullopt;
  if (t == T) return 0.0;
  return std::sqrt(R0 * R0 - 2.0 * (dim - 1) * t);
}

double radius_from_perimeter(double perimeter, int dim) {
  if (dim == 2) return perimeter / (2.0 * std::numbers::pi);
  if (dim == 3) return std::sqrt(perimeter / (4.0 * std::numbers::pi));
  throw std::invalid_argument("radius_from_perimeter needs dim 2 or 3");
}

// ---------------------------------------------------------------------------

ComparisonReport comparison_test(const ScalarField& g1, const ScalarField& g2, const ObstaclePair& obs,
                                 const SolverConfig& config) {
  config.validate();
  if (!(g1.grid() == g2.grid()) || !(g1.grid() == obs.grid()))
    throw std::invalid_argument("comparison_test: data live on different grids");
  for (std::size_t p = 0; p < g1.size(); ++p)
    if (g1[p] > g2[p]) throw std::invalid_argument("comparison_test: g1 <= g2 fails at a grid point");

  FlowState s1(g1, 0.0, config.eps), s2(g2, 0.0, config.eps);
  s1.evaluate(obs);
  s2.evaluate(obs);
  double rhs_gap = 0.0;
  for (std::size_t p = 0; p < g1.size(); ++p) rhs_gap = std::max(rhs_gap, std::abs(s1.rhs()[p] - s2.rhs()[p]));
  const double scale = std::max({1.0, g1.max_abs(), g2.max_abs()});

  ComparisonReport rep;
  for (bool last = false; !last;) {
    double dt = std::min(stable_dt(s1, obs, config.cfl_safety, config.dt_max),
                         stable_dt(s2, obs, config.cfl_safety, config.dt_max));
    last = s1.t() + dt >= config.t_end * (1.0 - 1e-12);
    if (last) dt = config.t_end - s1.t();
    step(s1, obs, dt);
    step(s2, obs, dt);
    ++rep.steps;
    rep.dt_max = std::max(rep.dt_max, dt);
    double v = 0.0;
    for (std::size_t p = 0; p < g1.size(); ++p) {
      const double diff = s1.u()[p] - s2.u()[p];
      if (!std::isfinite(diff)) {
        v = std::numeric_limits<double>::infinity();
        break;
      }
      v = std::max(v, diff);
    }
    rep.max_violation = std::max(rep.max_violation, v);
    if (std::isinf(v)) break;
  }
  rep.tolerance = 1e-6 * scale + 10.0 * rep.dt_max * rhs_gap;
  rep.pass = rep.max_violation <= rep.tolerance;
  return rep;
}

std::vector<std::pair<ScalarField, ScalarField>> ordered_pairs(const Scenario& sc, int count, std::uint64_t seed) {
  const TorusGrid grid = sc.grid();
  const ScalarField g = sc.initial_field();
  const auto obs = sc.obstacles();
  const double S = std::max(g.max_abs(), 0.1 * sc.spec.amplitude);
  std::mt19937_64 rng(seed);
  std::vector<std::pair<ScalarField, ScalarField>> out;
  for (int j = 0; j < count; ++j) {
    const double a = S * (0.02 + 0.18 * static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const VectorField W = random_trig_field(grid, rng(), 2, 6, 1.0);
    ScalarField other(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double bump = a * 0.5 * (1.0 + W[0][p]);
      other[p] = j % 2 == 0 ? std::min(obs->psi[p], g[p] + bump) : std::max(obs->phi[p], g[p] - bump);
    }
    if (j % 2 == 0)
      out.emplace_back(g, std::move(other));
    else
      out.emplace_back(std::move(other), g);
  }
  return out;
}

// ---------------------------------------------------------------------------

Relabeling affine_relabeling(double a, double b) {
  if (!(a > 0.0)) throw std::invalid_argument("affine relabeling needs a > 0");
  Relabeling r;
  r.name = "affine";
  r.F = [a, b](double s) { return a * s + b; };
  r.dF = [a](double) { return a; };
  r.eps_scale = a;
  return r;
}

Relabeling cubic_relabeling(double K) {
  Relabeling r;
  r.name = "cubic";
  r.F = [K](double s) {
    const double y = s / K;
    return K * (y * y * y + y);
  };
  r.dF = [K](double s) {
    const double y = s / K;
    return 3.0 * y * y + 1.0;
  };
  return r;
}

RelabelingReport relabeling_test(const Relabeling& F, const Scenario& sc, const std::vector<double>& eps_list,
                                 int samples) {
  if (!F.F || !F.dF) throw std::invalid_argument("relabeling needs F and F'");
  if (samples < 1) throw std::invalid_argument("relabeling needs at least one sample time");
  const TorusGrid grid = sc.grid();
  const auto obs = sc.obstacles();
  const ScalarField g = sc.initial_field();
  for (const ScalarField* f : {&obs->phi, &obs->psi, &g})
    for (std::size_t p = 0; p < f->size(); ++p)
      if (!(F.dF((*f)[p]) > 0.0)) throw std::invalid_argument("relabeling map is not increasing on the data range");

  const AnalyticField lower = relabel(sc.lower, F.F, F.dF, F.name);
  const AnalyticField upper = relabel(sc.upper, F.F, F.dF, F.name);
  const AnalyticField init = relabel(sc.initial, F.F, F.dF, F.name);
  auto twin_obs = std::make_shared<const ObstaclePair>(ObstaclePair::from_analytic(grid, lower, upper, 0.0, 0.0));

  std::vector<double> times;
  for (int k = 1; k <= samples; ++k) times.push_back(sc.spec.t_end * k / samples);

  RelabelingReport rep;
  for (double eps : eps_list) {
    SolverConfig base = sc.solver_config(eps);
    base.output_every = 0;
    base.sample_times = times;
    const Trajectory a = run(base, obs);

    SolverConfig twin = base;
    twin.eps = eps * F.eps_scale;
    twin.initial = init.sample(grid);
    // The relabeled data share the geometry but not the L bounds of the original.
    twin.skip_audit = true;
    const Trajectory b = run(twin, twin_obs);

    double delta = 0.0;
    for (const auto& snap : a.snapshots) {
      const std::size_t kb = b.find_time(snap.t);
      if (kb == Trajectory::npos) continue;
      const ScalarField& ub = b.snapshots[kb].u;
      for (std::size_t p = 0; p < grid.size(); ++p) delta = std::max(delta, std::abs(F.F(snap.u[p]) - ub[p]));
    }
    rep.eps.push_back(eps);
    rep.delta.push_back(delta);
  }
  rep.nonincreasing = true;
  for (std::size_t i = 0; i + 1 < rep.delta.size(); ++i)
    rep.nonincreasing = rep.nonincreasing && rep.delta[i + 1] <= 1.1 * rep.delta[i];
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<GammaLimsupRow> gamma_limsup_check(const ScalarField& u, const ObstaclePair& obs,
                                               const std::vector<double>& eps_list, double q_tol) {
  const double lim = limit_energy(u, obs);
  if (!std::isfinite(lim)) throw std::invalid_argument("gamma_limsup_check: u violates the obstacle constraint");
  std::vector<GammaLimsupRow> rows;
  for (double eps : eps_list) {
    GammaLimsupRow r;
    r.eps = eps;
    r.energy = energy(u, obs, eps);
    r.limit = lim;
    r.gap = r.energy - lim;
    r.pass = r.gap >= 0.0 && r.gap <= eps + q_tol;
    rows.push_back(r);
  }
  return rows;
}

SphereStudyReport sphere_deviation(const Trajectory& traj, int dim) {
  SphereStudyReport rep;
  const double h = traj.grid().h();
  for (const auto& snap : traj.snapshots) {
    const auto exact = sphere_oracle(kSphereRadius, dim, snap.t);
    if (!exact || *exact < 4.0 * h) break;
    const LevelSetProbe probe = make_probe(snap.u, 0.0, traj.eps);
    SphereSample s;
    s.t = snap.t;
    s.radius = radius_from_perimeter(perimeter(snap.u, probe), dim);
    s.exact = *exact;
    s.relative_deviation = std::abs(s.radius - s.exact) / s.exact;
    rep.max_deviation = std::max(rep.max_deviation, s.relative_deviation);
    rep.samples.push_back(s);
  }
  return rep;
}

SphereStudyReport sphere_convergence_study(const ScenarioSpec& spec, int samples) {
  if (spec.name != "sphere") throw std::invalid_argument("sphere_convergence_study needs the sphere scenario");
  if (samples < 1) throw std::invalid_argument("sphere_convergence_study needs at least one sample");
  const auto start = std::chrono::steady_clock::now();
  const Scenario sc = build_scenario(spec);
  SolverConfig cfg = sc.solver_config(spec.eps_list.front());
  cfg.output_every = 0;
  for (int k = 1; k <= samples; ++k) cfg.sample_times.push_back(spec.t_end * k / samples);
  const Trajectory traj = run(cfg, sc.obstacles());

  SphereStudyReport rep = sphere_deviation(traj, spec.dim);
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace omcf
