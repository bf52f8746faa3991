#include <cmath>
#include <numbers>

#include "doctest.h"
#include "omcf/properties.hpp"
#include "omcf/solver.hpp"

using namespace omcf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::shared_ptr<const ObstaclePair> constants(const TorusGrid& g, double lo, double hi, double L, double ell) {
  return std::make_shared<const ObstaclePair>(
      ObstaclePair::from_analytic(g, make_constant(lo), make_constant(hi), L, ell));
}

ScalarField sine(const TorusGrid& g, double amp = 1.0) {
  return ScalarField::sample(g, [amp](const auto& x) { return amp * std::sin(kTwoPi * x[0]); });
}

}  // namespace

TEST_CASE("curvature of simple fields") {
  const TorusGrid g(2, 64);
  CHECK(curvature(ScalarField(g, 2.0), 0.05).max_abs() == 0.0);
  // zero Hessian at the zero crossing x = 1/4 of sin(2 pi x) ... where cos vanishes the
  // Hessian does not, so probe x = 0 and x = 1/2 where sin'' = 0.
  const ScalarField H = curvature(sine(g), 0.05);
  for (int j = 0; j < 64; ++j) {
    CHECK(std::abs(H[g.flat_index({0, j, 0})]) < 1e-12);
    CHECK(std::abs(H[g.flat_index({32, j, 0})]) < 1e-12);
  }
}

TEST_CASE("curvature of a paraboloid is 1/r") {
  const int n = 256;
  const TorusGrid g(2, n);
  const double c = 0.5;
  const ScalarField u = ScalarField::sample(g, [c](const auto& x) {
    const double dx = periodic_delta(x[0], c), dy = periodic_delta(x[1], c);
    return -(dx * dx + dy * dy);
  });
  const ScalarField H = curvature(u, 1e-4);
  int checked = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto x = g.position(p);
    const double r = std::hypot(periodic_delta(x[0], c), periodic_delta(x[1], c));
    if (std::abs(r - 0.2) > g.h()) continue;
    CHECK(H[p] == doctest::Approx(1.0 / r).epsilon(0.02));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("rhs examples and the velocity identity") {
  const TorusGrid g(2, 32);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  {
    FlowState st(ScalarField(g, 0.3), 0.0, 0.05);
    CHECK(rhs(st, *obs).max_abs() == 0.0);
  }
  {
    // c above psi: |grad u|_eps = eps, rhs = eps f = -eps (4/eps) (c - psi)^3
    const double eps = 0.05, c = 1.2;
    FlowState st(ScalarField(g, c), 0.0, eps);
    const ScalarField r = rhs(st, *obs);
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(r[p] == doctest::Approx(-4.0 * std::pow(c - 1.0, 3)));
  }
  {
    const auto wide = constants(g, -0.5, 0.5, 1.0, 0.25);
    FlowState st(sine(g, 0.8), 0.0, 0.05);  // violates both obstacles near the extrema
    st.evaluate(*wide);
    const ScalarField& r = st.rhs();
    double scale = 1.0;
    for (std::size_t p = 0; p < g.size(); ++p) scale = std::max(scale, std::abs(r[p]));
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double id = st.norm_eps()[p] * (-st.curvature()[p] + st.force()[p]);
      CHECK(std::abs(r[p] - id) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("stable dt examples") {
  const TorusGrid g(2, 64);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  FlowState st(ScalarField(g, 0.0), 0.0, 0.01);
  CHECK(stable_dt(st, *obs, 0.9) == doctest::Approx(0.9 / (64.0 * 64.0) / 4.0).epsilon(1e-14));
  CHECK(stable_dt(st, *obs, 0.9, 1e-6) == doctest::Approx(0.9e-6));

  // violation 0.1 at eps = 0.01 with |grad u|_eps ~ 1: penalty limit 1/12, diffusion dominates
  FlowState viol(ScalarField::sample(g, [](const auto& x) { return x[0] < 0.5 ? 1.1 : 0.0; }), 0.0, 0.01);
  CHECK(stable_dt(viol, *obs, 1.0) == doctest::Approx(1.0 / (64.0 * 64.0) / 4.0));
  const double stiff = 12.0 / 0.01 * 0.1 * 0.1;
  CHECK(1.0 / stiff == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("step rejects unstable time steps and keeps constants") {
  const TorusGrid g(2, 32);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  FlowState st(ScalarField(g, 0.2), 0.0, 0.05);
  step(st, *obs, 1e-5);
  CHECK(st.u().max() == 0.2);
  CHECK(st.u().min() == 0.2);
  CHECK(st.t() == doctest::Approx(1e-5));
  FlowState s2(sine(g), 0.0, 0.05);
  const double limit = stable_dt(s2, *obs, 1.0);
  CHECK_THROWS_AS(step(s2, *obs, 1.5 * limit), StabilityError);
  CHECK_THROWS_AS(step(s2, *obs, -1e-6), StabilityError);
}

TEST_CASE("one Euler step is first order consistent") {
  const TorusGrid g(2, 32);
  const auto obs = constants(g, -2.0, 2.0, 1.5, 0.25);
  const ScalarField g0 = sine(g);
  FlowState ref(g0, 0.0, 0.1);
  const ScalarField r0 = rhs(ref, *obs);
  const double dt = 0.25 * stable_dt(ref, *obs, 1.0);
  FlowState one(g0, 0.0, 0.1);
  step(one, *obs, dt);
  for (std::size_t p = 0; p < g.size(); ++p) CHECK(one.u()[p] - g0[p] == doctest::Approx(dt * r0[p]).epsilon(1e-12));

  // two half steps vs one full step: the difference scales like dt^2
  auto gap = [&](double tau) {
    FlowState full(g0, 0.0, 0.1), half(g0, 0.0, 0.1);
    step(full, *obs, tau);
    step(half, *obs, tau / 2);
    step(half, *obs, tau / 2);
    double m = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) m = std::max(m, std::abs(full.u()[p] - half.u()[p]));
    return m;
  };
  const double ratio = gap(dt) / gap(dt / 2);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("run keeps a stationary datum and records the trajectory") {
  const TorusGrid g(2, 16);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  SolverConfig cfg;
  cfg.eps = 0.05;
  cfg.t_end = 0.01;
  cfg.output_every = 5;
  cfg.initial = ScalarField(g, 0.0);
  const Trajectory tr = run(cfg, obs);
  CHECK(tr.snapshots.front().t == 0.0);
  CHECK(tr.snapshots.back().t == doctest::Approx(0.01).epsilon(1e-14));
  for (std::size_t k = 1; k < tr.snapshots.size(); ++k) CHECK(tr.snapshots[k].t > tr.snapshots[k - 1].t);
  for (const auto& s : tr.snapshots) CHECK(s.u.max_abs() == 0.0);
  CHECK(tr.trace.size() == tr.steps + 1);
  CHECK(tr.find_time(0.01) == tr.snapshots.size() - 1);
  CHECK(tr.find_time(0.0033) == Trajectory::npos);
}

TEST_CASE("run lands exactly on sample times") {
  const TorusGrid g(2, 16);
  const auto obs = constants(g, -2.0, 2.0, 1.5, 0.25);
  SolverConfig cfg;
  cfg.eps = 0.05;
  cfg.t_end = 0.004;
  cfg.sample_times = {0.001, 0.0025};
  cfg.initial = sine(g);
  const Trajectory tr = run(cfg, obs);
  CHECK(tr.find_time(0.001) != Trajectory::npos);
  CHECK(tr.find_time(0.0025) != Trajectory::npos);
  CHECK(tr.snapshots.size() == 4);
}

TEST_CASE("run validates its configuration and the data") {
  const TorusGrid g(2, 16);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  SolverConfig cfg;
  cfg.t_end = 0.01;
  cfg.initial = ScalarField(g, 0.0);
  cfg.eps = 0.0;
  CHECK_THROWS_AS(run(cfg, obs), std::invalid_argument);
  cfg.eps = 0.05;
  cfg.cfl_safety = 1.5;
  CHECK_THROWS_AS(run(cfg, obs), std::invalid_argument);
  cfg.cfl_safety = 0.9;
  cfg.initial[3] = 1.5;  // above psi
  CHECK_THROWS_AS(run(cfg, obs), WellPreparedError);
}

TEST_CASE("run aborts on non-finite values and keeps the partial trace") {
  const TorusGrid g(2, 16);
  const auto obs = constants(g, -1.0, 1.0, 0.5, 0.25);
  SolverConfig cfg;
  cfg.t_end = 0.01;
  cfg.skip_audit = true;
  cfg.initial = ScalarField(g, 0.0);
  cfg.initial[7] = std::nan("");
  try {
    run(cfg, obs);
    FAIL("expected NumericalAbort");
  } catch (const NumericalAbort& e) {
    CHECK(e.step() == 1);
    CHECK(e.partial().trace.size() == 1);
  }
}

TEST_CASE("shrinking circle tracks the sphere oracle at n = 64") {
  ScenarioSpec spec = catalog_spec("sphere", 2);
  spec.n = 64;
  const auto rep = sphere_convergence_study(spec, 5);
  CHECK(rep.samples.size() >= 4);
  CHECK(rep.max_deviation <= 0.03);
}
