#pragma once

// Obstacles, the quartic penalty potential and its force, the regularized and
// limit energies, and the well-preparedness audit.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "omcf/grid.hpp"
#include "omcf/profiles.hpp"

namespace omcf {

/// Lower obstacle phi, upper obstacle psi and the well-preparedness constants.
struct ObstaclePair {
  ScalarField phi;
  ScalarField psi;
  std::optional<VectorField> grad_phi_exact;
  std::optional<VectorField> grad_psi_exact;
  double L = 0.0;
  double ell = 0.0;
  /// Declared critical points of phi (lower) and psi (upper).
  std::vector<Index3> critical_lower;
  std::vector<Index3> critical_upper;
  std::string lower_spec;
  std::string upper_spec;

  const TorusGrid& grid() const { return phi.grid(); }
  /// Analytic gradient when available, central differences otherwise.
  VectorField grad_phi() const;
  VectorField grad_psi() const;

  static ObstaclePair from_analytic(const TorusGrid& grid, const AnalyticField& lower, const AnalyticField& upper,
                                    double L, double ell);
};

// Pointwise penalty pieces. V(u) = ((phi-u)_+^4 + (u-psi)_+^4) / eps.
inline double penalty_density(double u, double phi, double psi, double eps) {
  const double lo = phi - u > 0.0 ? phi - u : 0.0;
  const double hi = u - psi > 0.0 ? u - psi : 0.0;
  return (lo * lo * lo * lo + hi * hi * hi * hi) / eps;
}

/// f = -V'(u) = 4/eps (phi-u)_+^3 - 4/eps (u-psi)_+^3.
inline double penalty_force_density(double u, double phi, double psi, double eps) {
  const double lo = phi - u > 0.0 ? phi - u : 0.0;
  const double hi = u - psi > 0.0 ? u - psi : 0.0;
  return 4.0 * (lo * lo * lo - hi * hi * hi) / eps;
}

/// V''(u) = 12/eps ((u-psi)_+^2 + (phi-u)_+^2).
inline double penalty_second_derivative(double u, double phi, double psi, double eps) {
  const double lo = phi - u > 0.0 ? phi - u : 0.0;
  const double hi = u - psi > 0.0 ? u - psi : 0.0;
  return 12.0 * (lo * lo + hi * hi) / eps;
}

/// Integrand of E_eps: |p|_eps + V(z) at a point with obstacle values (phi, psi).
double energy_density(std::span<const double> p, double z, double phi, double psi, double eps);

ScalarField penalty(const ScalarField& u, const ObstaclePair& obs, double eps);
ScalarField penalty_force(const ScalarField& u, const ObstaclePair& obs, double eps);

/// E_eps(u) = integral of |grad u|_eps + V_eps(u).
double energy(const ScalarField& u, const ObstaclePair& obs, double eps);

/// Absolute tolerance on the pointwise constraint phi <= u <= psi.
inline constexpr double kConstraintTol = 1e-12;

/// Total variation of u if phi <= u <= psi on the grid, +infinity otherwise.
double limit_energy(const ScalarField& u, const ObstaclePair& obs);

// ---------------------------------------------------------------------------

class WellPreparedError : public std::runtime_error {
 public:
  WellPreparedError(const std::string& what, std::vector<Index3> offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const std::vector<Index3>& offending() const { return offending_; }

 private:
  std::vector<Index3> offending_;
};

struct WellPreparedReport {
  double separation = 0.0;  // min(psi - phi)
  double max_abs_g = 0.0;
  double max_phi = 0.0;
  double min_psi = 0.0;
  bool bounds_ok = false;  // |g| <= L, max phi <= L, min psi >= -L
  double grad_tol_lower = 0.0;
  double grad_tol_upper = 0.0;
  std::size_t critical_lower_points = 0;
  std::size_t critical_upper_points = 0;
  int critical_lower_components = 0;
  int critical_upper_components = 0;
  /// One representative (first visited) point per component.
  std::vector<Index3> lower_component_seeds;
  std::vector<Index3> upper_component_seeds;
  bool pass = false;
  std::vector<std::string> notes;
};

/// Checks strict separation, the ordering phi <= g <= psi (both throw on
/// failure), the L bounds and the discrete critical sets of the obstacles.
WellPreparedReport audit_well_prepared(const ObstaclePair& obs, const ScalarField& g);

/// Connected components (face neighbours, periodic) of a mask; returns the
/// number of components and writes one seed index per component.
int count_components(const TorusGrid& grid, const std::vector<char>& mask, std::vector<Index3>* seeds = nullptr);

// ---------------------------------------------------------------------------

/// u_eps at time t plus derived quantities. Caches are either empty or
/// consistent with the current u.
class FlowState {
 public:
  FlowState(ScalarField u, double t, double eps);

  const ScalarField& u() const { return u_; }
  double t() const { return t_; }
  double eps() const { return eps_; }
  const TorusGrid& grid() const { return u_.grid(); }

  /// Replaces u and invalidates caches.
  void set(ScalarField u, double t);

  bool has_caches() const { return cached_; }
  /// Computes gradient, |grad u|_eps, H_eps, f_eps and the right-hand side.
  /// Recomputes when called with a different obstacle pair.
  void evaluate(const ObstaclePair& obs) const;

  const VectorField& grad_u() const;
  const ScalarField& norm_eps() const;
  const ScalarField& curvature() const;
  const ScalarField& force() const;
  const ScalarField& rhs() const;

 private:
  void require_caches() const;

  ScalarField u_;
  double t_ = 0.0;
  double eps_ = 0.0;
  mutable bool cached_ = false;
  mutable const ObstaclePair* cached_obs_ = nullptr;
  mutable VectorField grad_;
  mutable ScalarField norm_eps_;
  mutable ScalarField curvature_;
  mutable ScalarField force_;
  mutable ScalarField rhs_;
};

}  // namespace omcf
