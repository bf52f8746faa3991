#pragma once

// Level-set diagnostics on trajectories: normals and normal velocity, coarea
// surface integrals, contact sets, admissible test vector fields and the
// residuals of the weak (BV) formulation of the obstacle flow.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "omcf/solver.hpp"

namespace omcf {

/// Level gamma, mollified-delta half-width `band` (in units of u) and the
/// threshold separating {|grad u| > 0} from flat regions.
struct LevelSetProbe {
  double gamma = 0.0;
  double band = 0.0;
  double grad_floor = 0.0;

  /// Throws std::invalid_argument unless band >= 2h and grad_floor > 0.
  void validate(const TorusGrid& grid) const;
};

/// max(10 eps, h * median Frobenius norm of hess u over {|grad u| > 10 eps}).
double default_grad_floor(const ScalarField& u, double eps);

/// Median |grad u| over nodes next to a sign change of u - gamma (max|grad u|
/// when the level is empty).
double level_slope(const ScalarField& u, double gamma);

/// band = max(2h, cells * h * level_slope); the band spans about `cells` grid
/// cells across the level set.
LevelSetProbe make_probe(const ScalarField& u, double gamma, double eps, double cells = 4.0);

struct ResidualReport {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  double scale = 0.0;
  bool two_sided = false;
  bool pass = false;
  double gamma = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::string field_id;
  bool degenerate = false;  // band met cells below the gradient floor
  std::string note;
};

std::string residual_csv_header();
std::string residual_csv_line(const ResidualReport& r);

/// Mollifier rho(s) = 15/16 (1 - s^2)^2 on [-1, 1] and the scaled delta rho(s/a)/a.
double quartic_bump(double s);
double mollified_delta(double s, double a);

struct NormalVelocity {
  VectorField nu;  // -grad u / |grad u| where |grad u| > floor, 0 elsewhere
  ScalarField V;   // u_t / |grad u| where |grad u| > floor, 0 elsewhere
};

/// u_t is the right-hand side of the flow at the state.
NormalVelocity normal_velocity(const FlowState& state, const ObstaclePair& obs, double grad_floor);
NormalVelocity normal_velocity(const Trajectory& traj, std::size_t k, double grad_floor);

struct CoareaResult {
  double value = 0.0;
  bool degenerate = false;
  std::size_t degenerate_cells = 0;
};

/// integral of g delta_a(u - gamma) |grad u|, an approximation of the surface
/// integral of g over {u = gamma}.
CoareaResult coarea(const ScalarField& u, const ScalarField& g, const LevelSetProbe& probe);
double coarea_surface_integral(const ScalarField& u, const ScalarField& g, const LevelSetProbe& probe);
double perimeter(const ScalarField& u, const LevelSetProbe& probe);

struct CoareaConsistency {
  double level_sum = 0.0;        // sum_k perimeter(gamma_k) * dgamma
  double total_variation = 0.0;  // integral of |grad u|
  double relative_error = 0.0;
};
/// Sums perimeters over a uniform gamma grid covering the range of u.
CoareaConsistency coarea_consistency(const ScalarField& u, double band, int levels_per_band = 8);

struct ContactMasks {
  std::vector<char> plus;   // psi - u < tol
  std::vector<char> minus;  // u - phi < tol
  double tol = 0.0;
  std::size_t plus_count() const;
  std::size_t minus_count() const;
};

/// Default contact tolerance min(psi - phi) / 10.
double default_contact_tol(const ObstaclePair& obs);
/// Throws std::invalid_argument if tol <= 0, tol >= min(psi - phi)/2 or the masks overlap.
ContactMasks contact_sets(const ScalarField& u, const ObstaclePair& obs, double tol);

enum class FieldMode { zero, obstacle_aligned, random_mixed };
std::string to_string(FieldMode mode);
FieldMode parse_field_mode(const std::string& name);

struct AdmissibleField {
  VectorField X;
  double c1_norm = 0.0;     // max|X| + max|DX|
  double min_plus = 0.0;    // min over A+ of X . grad psi (0 if A+ empty)
  double min_minus = 0.0;   // min over A- of -X . grad phi (0 if A- empty)
  bool admissible = false;  // both minima >= -1e-12
};

/// X = chi+ s+ grad psi - chi- s- grad phi + (1 - chi+ - chi-) W with smooth
/// cutoffs equal to 1 on the masks, s+- >= 0 and W a seeded trigonometric field.
/// obstacle_aligned uses W = 0 and s+- = 1; random_mixed draws s+- and W from the seed.
AdmissibleField admissible_field(const ObstaclePair& obs, const ContactMasks& masks, FieldMode mode,
                                 std::uint64_t seed);

/// Evaluates the two constraint minima for an arbitrary field.
AdmissibleField audit_admissible(VectorField X, const ObstaclePair& obs, const ContactMasks& masks);

/// Seeded smooth periodic vector field with max|W| <= amplitude (trigonometric
/// series over integer wave vectors with sup norm <= max_wave).
VectorField random_trig_field(const TorusGrid& grid, std::uint64_t seed, int max_wave = 2, int terms = 6,
                              double amplitude = 1.0);

/// Produces the test field for one snapshot; the harness audits it against
/// that snapshot's contact sets.
struct TestField {
  std::string id;
  FieldMode mode = FieldMode::zero;
  std::uint64_t seed = 0;
  /// Overrides the generator when set.
  std::function<VectorField(const FlowState&)> custom;
  double contact_tol = 0.0;  // <= 0 selects default_contact_tol
};

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct MotionTolerances {
  double motion_tol = 0.05;
  double grad_floor = 0.0;  // <= 0 selects default_grad_floor per snapshot
};

/// Integral over the window of the bulk integrand
///   [(I - nu x nu) : DX + V nu . X] |grad u| on {|grad u| > floor},
/// trapezoidal in time over the snapshots inside the window. One-sided pass
/// (value >= -tol) unless two_sided; tol = motion_tol * window * ||X||_C1 * max TV.
ResidualReport bulk_motion_law_residual(const Trajectory& traj, const TestField& field, const TimeWindow& window,
                                        const MotionTolerances& tol, bool two_sided = false);

/// The same integrand on the level gamma (coarea band of the probe).
ResidualReport levelset_motion_law_residual(const Trajectory& traj, const LevelSetProbe& probe, const TestField& field,
                                            const TimeWindow& window, double motion_tol, bool two_sided = false);

/// zeta(x, t) = eta(x) tau(t).
struct SeparableTestFunction {
  ScalarField eta;
  std::function<double(double)> tau;
  std::function<double(double)> dtau;
  double c1_norm = 1.0;
};

/// |int int zeta_t u - (-int int zeta V |grad u| + [int zeta u]_{t0}^{t1})| over the window,
/// trapezoidal in time. Tolerance dist_tol times the sum of absolute right-hand-side terms.
ResidualReport distributional_velocity_residual(const Trajectory& traj, const SeparableTestFunction& zeta,
                                                const TimeWindow& window, double dist_tol, double grad_floor = 0.0);

/// P(t2) + int_{t1}^{t2} int_{level} V^2 - P(t1); one-sided pass iff value <= per_tol * P(t1).
ResidualReport per_level_dissipation_residual(const Trajectory& traj, const LevelSetProbe& probe, double t1, double t2,
                                              double per_tol);

struct FlatnessReport {
  std::vector<double> eps;
  /// gaps[p][m]: |int (|grad u_p| - |grad u_{p+1}|) eta_m| averaged over common snapshot times.
  std::vector<std::vector<double>> gaps;
  /// normal_gaps[p]: average over common times of int |nu_p - nu_{p+1}|^2 on the floor set.
  std::vector<double> normal_gaps;
  /// Fraction of dictionary entries whose gaps decrease along the sequence.
  double decreasing_fraction = 0.0;
  bool normal_gaps_decreasing = false;
};

/// Fixed dictionary of smooth test functions used for the weak-* gaps.
std::vector<ScalarField> flatness_dictionary(const TorusGrid& grid);

/// Compares consecutive runs of an eps-sequence at common snapshot times in the window.
FlatnessReport weak_star_flatness(const std::vector<const Trajectory*>& runs, const TimeWindow& window);

}  // namespace omcf
