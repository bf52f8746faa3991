#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "omcf/model.hpp"

using namespace omcf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ObstaclePair constant_pair(const TorusGrid& g, double lo, double hi, double L = 0.5, double ell = 0.25) {
  return ObstaclePair::from_analytic(g, make_constant(lo), make_constant(hi), L, ell);
}

}  // namespace

TEST_CASE("penalty examples") {
  CHECK(penalty_density(0.5, 0.0, 1.0, 0.1) == 0.0);
  CHECK(penalty_density(1.2, 0.0, 1.0, 0.1) == doctest::Approx(0.016).epsilon(1e-12));
  CHECK(penalty_density(-0.1, 0.0, 1.0, 0.01) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("penalty force examples") {
  CHECK(penalty_force_density(0.5, 0.0, 1.0, 0.1) == 0.0);
  CHECK(penalty_force_density(1.2, 0.0, 1.0, 0.1) == doctest::Approx(-0.32).epsilon(1e-12));
  CHECK(penalty_force_density(-0.1, 0.0, 1.0, 0.01) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("penalty is nonnegative and vanishes exactly inside the band") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double z = u(rng);
    const double v = penalty_density(z, 0.0, 1.0, 0.05);
    CHECK(v >= 0.0);
    CHECK((v == 0.0) == (z >= 0.0 && z <= 1.0));
  }
}

TEST_CASE("force is the negated derivative of the penalty") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  const double eps = 0.03;
  for (int i = 0; i < 500; ++i) {
    const double z = u(rng);
    const double dz = 1e-6;
    const double fd = (penalty_density(z + dz, 0.0, 1.0, eps) - penalty_density(z - dz, 0.0, 1.0, eps)) / (2 * dz);
    const double f = penalty_force_density(z, 0.0, 1.0, eps);
    CHECK(std::abs(fd + f) <= 1e-6 * std::max(1.0, std::abs(f)));
    const double fd2 = (penalty_force_density(z + dz, 0.0, 1.0, eps) - penalty_force_density(z - dz, 0.0, 1.0, eps)) /
                       (2 * dz);
    CHECK(std::abs(-fd2 - penalty_second_derivative(z, 0.0, 1.0, eps)) <=
          1e-5 * std::max(1.0, penalty_second_derivative(z, 0.0, 1.0, eps)));
  }
}

TEST_CASE("energy integrand is jointly convex") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0), l(0.0, 1.0);
  const double eps = 0.07, phi = -0.5, psi = 0.8;
  for (int i = 0; i < 2000; ++i) {
    const double p[2] = {u(rng), u(rng)}, q[2] = {u(rng), u(rng)};
    const double z = u(rng), w = u(rng), lam = l(rng);
    const double m[2] = {lam * p[0] + (1 - lam) * q[0], lam * p[1] + (1 - lam) * q[1]};
    const double lhs = energy_density(m, lam * z + (1 - lam) * w, phi, psi, eps);
    const double rhs = lam * energy_density(p, z, phi, psi, eps) + (1 - lam) * energy_density(q, w, phi, psi, eps);
    CHECK(lhs <= rhs + 1e-12 * (1 + std::abs(rhs)));
  }
}

TEST_CASE("energy examples") {
  const TorusGrid g(2, 32);
  const ObstaclePair obs = constant_pair(g, -1.0, 1.0);
  CHECK(energy(ScalarField(g, 0.3), obs, 0.05) == doctest::Approx(0.05).epsilon(1e-14));

  const TorusGrid g1(2, 128);
  const ObstaclePair wide = constant_pair(g1, -2.0, 2.0, 1.5, 0.25);
  const ScalarField s = ScalarField::sample(g1, [](const auto& x) { return std::sin(kTwoPi * x[0]); });
  CHECK(energy(s, wide, 1e-6) == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("energy includes the penalty of violating cells") {
  const TorusGrid g(1, 64);
  const ObstaclePair obs = constant_pair(g, 0.0, 1.0);
  ScalarField u(g, 0.5);
  const double eps = 0.1;
  const double base = energy(u, obs, eps);
  for (int i = 0; i < 16; ++i) u[i] = 1.2;  // alpha = 1/4 of the cells, with jumps at the ends
  const double alpha = 0.25;
  const double with_pen = energy(u, obs, eps);
  const double grad_part = integrate(map_points(g, [&](std::size_t p) {
    const double d = gradient(u)[0][p];
    return std::sqrt(eps * eps + d * d);
  }));
  CHECK(with_pen - grad_part == doctest::Approx(alpha * 0.016).epsilon(1e-12));
  CHECK(base == doctest::Approx(eps));
}

TEST_CASE("limit energy") {
  const TorusGrid g(2, 128);
  const ObstaclePair obs = constant_pair(g, -2.0, 2.0, 1.5, 0.25);
  CHECK(limit_energy(ScalarField(g, 1.0), obs) == 0.0);
  const ScalarField s = ScalarField::sample(g, [](const auto& x) { return std::sin(kTwoPi * x[0]); });
  CHECK(limit_energy(s, obs) == doctest::Approx(4.0).epsilon(0.01));
  ScalarField bad(g, 0.0);
  bad[17] = 2.5;
  CHECK(std::isinf(limit_energy(bad, obs)));
}

TEST_CASE("energy exceeds the limit energy by at most eps") {
  const TorusGrid g(2, 64);
  const ObstaclePair obs = constant_pair(g, -2.0, 2.0, 1.5, 0.25);
  const ScalarField u = ScalarField::sample(g, [](const auto& x) { return 0.5 * std::sin(kTwoPi * x[0]); });
  const double lim = limit_energy(u, obs);
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    const double gap = energy(u, obs, eps) - lim;
    CHECK(gap >= 0.0);
    CHECK(gap <= eps + 1e-10);
  }
}

TEST_CASE("well-preparedness audit with constant obstacles") {
  const TorusGrid g(2, 32);
  const ObstaclePair obs = constant_pair(g, -1.0, 1.0);
  const WellPreparedReport rep = audit_well_prepared(obs, ScalarField(g, 0.0));
  CHECK(rep.separation == 2.0);
  CHECK(rep.critical_lower_components == 0);
  CHECK(rep.critical_upper_components == 0);
  CHECK(rep.bounds_ok);
  CHECK(rep.pass);
}

TEST_CASE("audit finds exactly one critical component for the bump obstacle") {
  const TorusGrid g(2, 64);
  const double L = 1.0;
  const Point c{0.5 + 0.5 / 64, 0.5 + 0.5 / 64, 0.5};
  ObstaclePair obs = ObstaclePair::from_analytic(g, make_constant(-3.0 * L), make_bump(2, {c}, L, 1.0), 2.5 * L, 0.1);
  obs.critical_upper.push_back({32, 32, 0});
  const ScalarField init = ScalarField::sample(g, [](const auto&) { return -1.0; });
  const WellPreparedReport rep = audit_well_prepared(obs, init);
  CHECK(rep.critical_upper_components == 1);
  for (const auto& note : rep.notes) MESSAGE(note);
  CHECK(rep.pass);
  ObstaclePair undeclared = obs;
  undeclared.critical_upper.clear();
  CHECK_FALSE(audit_well_prepared(undeclared, init).pass);
}

TEST_CASE("audit rejects ordering and separation violations") {
  const TorusGrid g(2, 16);
  const ObstaclePair obs = constant_pair(g, -1.0, 1.0);
  ScalarField init(g, 0.0);
  init[5] = 1.1;
  CHECK_THROWS_AS(audit_well_prepared(obs, init), WellPreparedError);
  try {
    audit_well_prepared(obs, init);
  } catch (const WellPreparedError& e) {
    CHECK(e.offending().size() == 1);
  }
  const ObstaclePair touching = constant_pair(g, 0.0, 0.0);
  CHECK_THROWS_AS(audit_well_prepared(touching, ScalarField(g, 0.0)), WellPreparedError);
}

TEST_CASE("flow state caches follow the field") {
  const TorusGrid g(2, 32);
  const ObstaclePair obs = constant_pair(g, -1.0, 1.0);
  FlowState st(ScalarField(g, 0.0), 0.0, 0.05);
  CHECK_FALSE(st.has_caches());
  st.evaluate(obs);
  CHECK(st.has_caches());
  CHECK(st.rhs().max_abs() == 0.0);
  st.set(ScalarField::sample(g, [](const auto& x) { return 0.5 * std::sin(kTwoPi * x[0]); }), 0.1);
  CHECK_FALSE(st.has_caches());
  CHECK_THROWS(st.rhs());
  CHECK_THROWS_AS(FlowState(ScalarField(g, 0.0), 0.0, 0.0), std::invalid_argument);
}
