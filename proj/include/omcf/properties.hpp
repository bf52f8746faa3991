#pragma once

// Scenario catalog and behavioural harnesses: the sphere oracle, comparison
// and relabeling tests, the Gamma-limsup gap and the sphere convergence study.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "omcf/bvcheck.hpp"
#include "omcf/profiles.hpp"
#include "omcf/solver.hpp"

namespace omcf {

struct ScenarioSpec {
  std::string name;
  int dim = 2;
  int n = 64;
  std::vector<double> eps_list;  // strictly decreasing
  double t_end = 0.0;
  double cfl_safety = 0.9;
  int output_every = 0;
  std::uint64_t seed = 1;
  /// Slope scale of the data; obstacles and g are multiplied by it.
  double amplitude = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Scenario {
  ScenarioSpec spec;
  AnalyticField lower;
  AnalyticField upper;
  AnalyticField initial;
  double L = 0.0;
  double ell = 0.0;
  std::vector<Point> lower_critical;  // positions of the declared critical points
  std::vector<Point> upper_critical;

  TorusGrid grid() const { return TorusGrid(spec.dim, spec.n); }
  std::shared_ptr<const ObstaclePair> obstacles() const;
  ScalarField initial_field() const;
  /// Solver settings for one eps of the list (sample times left empty).
  SolverConfig solver_config(double eps) const;
};

/// sphere, clamping, sandwich, stationary.
std::vector<std::string> scenario_names();
/// Catalog defaults for a scenario. Throws std::invalid_argument listing the
/// available names for an unknown one.
ScenarioSpec catalog_spec(const std::string& name, int dim = 2);
/// Builds obstacles and initial data for a spec whose name is in the catalog.
Scenario build_scenario(const ScenarioSpec& spec);

/// Geometry constants of the catalog (radii in torus units).
inline constexpr double kSphereRadius = 0.3;
inline constexpr double kClampRadius = 0.15;

// ---------------------------------------------------------------------------

/// R(t) = sqrt(R0^2 - 2 (d-1) t); nullopt after extinction.
std::optional<double> sphere_oracle(double R0, int dim, double t);
double extinction_time(double R0, int dim);

/// Zero-level radius from the perimeter: P / (2 pi) in 2D, sqrt(P / (4 pi)) in 3D.
double radius_from_perimeter(double perimeter, int dim);

struct ComparisonReport {
  double max_violation = 0.0;  // max over steps of sup (u1 - u2)_+
  double tolerance = 0.0;
  std::size_t steps = 0;
  double dt_max = 0.0;
  bool pass = false;
};

/// Runs both data in lockstep (shared dt, the smaller stable step) and
/// tracks sup (u1 - u2)_+ after every step. Tolerance
///   1e-6 * max(1, max|g|) + 10 dt_max max|rhs(g1) - rhs(g2)|.
/// Throws std::invalid_argument unless g1 <= g2 pointwise.
ComparisonReport comparison_test(const ScalarField& g1, const ScalarField& g2, const ObstaclePair& obs,
                                 const SolverConfig& config);

/// Seeded ordered pairs (g1 <= g2) obtained by pushing g up or down by a
/// smooth nonnegative perturbation and clipping to the obstacles.
std::vector<std::pair<ScalarField, ScalarField>> ordered_pairs(const Scenario& sc, int count, std::uint64_t seed);

struct Relabeling {
  std::string name;
  std::function<double(double)> F;
  std::function<double(double)> dF;
  /// The relabeled run uses eps * eps_scale. Affine maps F(s) = a s + b commute
  /// with the regularized flow exactly when eps_scale = a.
  double eps_scale = 1.0;
};

Relabeling affine_relabeling(double a, double b);
/// F(s) = K F0(s / K) with F0(y) = y^3 + y.
Relabeling cubic_relabeling(double K);

struct RelabelingReport {
  std::vector<double> eps;
  std::vector<double> delta;  // sup over sample times of |F(u) - u_F|
  bool nonincreasing = false;  // delta[i+1] <= 1.1 delta[i]
};

/// Runs the scenario and its relabeled twin for each eps in the list and
/// compares F(u) with the relabeled solution at `samples` common times.
/// Throws std::invalid_argument if F' <= 0 on the range of the data.
RelabelingReport relabeling_test(const Relabeling& F, const Scenario& sc, const std::vector<double>& eps_list,
                                 int samples = 8);

struct GammaLimsupRow {
  double eps = 0.0;
  double energy = 0.0;
  double limit = 0.0;
  double gap = 0.0;
  bool pass = false;
};

/// Checks 0 <= E_eps(u) - E(u) <= eps + q_tol for each eps. Throws
/// std::invalid_argument when u violates the constraint.
std::vector<GammaLimsupRow> gamma_limsup_check(const ScalarField& u, const ObstaclePair& obs,
                                               const std::vector<double>& eps_list, double q_tol = 1e-10);

struct SphereSample {
  double t = 0.0;
  double radius = 0.0;
  double exact = 0.0;
  double relative_deviation = 0.0;
};

struct SphereStudyReport {
  std::vector<SphereSample> samples;
  double max_deviation = 0.0;
  double runtime_seconds = 0.0;
};

/// Radius samples of a sphere-scenario trajectory at its snapshots, stopping
/// once R < 4h. runtime_seconds is left at 0.
SphereStudyReport sphere_deviation(const Trajectory& traj, int dim);

/// Runs the sphere scenario at eps = spec.eps_list.front(), samples the radius
/// at `samples` equally spaced times up to t_end, stopping once R < 4h.
SphereStudyReport sphere_convergence_study(const ScenarioSpec& spec, int samples = 10);

}  // namespace omcf
