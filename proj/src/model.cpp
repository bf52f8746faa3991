#include "omcf/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "omcf/kernel.hpp"

namespace omcf {

VectorField ObstaclePair::grad_phi() const { return grad_phi_exact ? *grad_phi_exact : gradient(phi); }
VectorField ObstaclePair::grad_psi() const { return grad_psi_exact ? *grad_psi_exact : gradient(psi); }

ObstaclePair ObstaclePair::from_analytic(const TorusGrid& grid, const AnalyticField& lower, const AnalyticField& upper,
                                         double L, double ell) {
  ObstaclePair obs;
  obs.phi = lower.sample(grid);
  obs.psi = upper.sample(grid);
  obs.grad_phi_exact = lower.sample_gradient(grid);
  obs.grad_psi_exact = upper.sample_gradient(grid);
  obs.L = L;
  obs.ell = ell;
  obs.lower_spec = lower.spec;
  obs.upper_spec = upper.spec;
  return obs;
}

double energy_density(std::span<const double> p, double z, double phi, double psi, double eps) {
  return regularized_norm(p, eps) + penalty_density(z, phi, psi, eps);
}

ScalarField penalty(const ScalarField& u, const ObstaclePair& obs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("penalty: eps must be positive");
  return map_points(u.grid(), [&](std::size_t p) { return penalty_density(u[p], obs.phi[p], obs.psi[p], eps); });
}

ScalarField penalty_force(const ScalarField& u, const ObstaclePair& obs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("penalty_force: eps must be positive");
  return map_points(u.grid(), [&](std::size_t p) { return penalty_force_density(u[p], obs.phi[p], obs.psi[p], eps); });
}

double energy(const ScalarField& u, const ObstaclePair& obs, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("energy: eps must be positive");
  const VectorField g = gradient(u);
  const int d = u.grid().dim();
  const ScalarField density = map_points(u.grid(), [&](std::size_t p) {
    double pv[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) pv[a] = g[a][p];
    return energy_density(std::span<const double>(pv, d), u[p], obs.phi[p], obs.psi[p], eps);
  });
  return integrate(density);
}

double limit_energy(const ScalarField& u, const ObstaclePair& obs) {
  for (std::size_t p = 0; p < u.size(); ++p)
    if (u[p] < obs.phi[p] - kConstraintTol || u[p] > obs.psi[p] + kConstraintTol)
      return std::numeric_limits<double>::infinity();
  const VectorField g = gradient(u);
  return integrate(map_points(u.grid(), [&](std::size_t p) { return g.norm_at(p); }));
}

// ---------------------------------------------------------------------------

int count_components(const TorusGrid& grid, const std::vector<char>& mask, std::vector<Index3>* seeds) {
  std::vector<char> seen(mask.size(), 0);
  int count = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    ++count;
    if (seeds) seeds->push_back(grid.multi_index(start));
    seen[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      const Index3 idx = grid.multi_index(p);
      for (int a = 0; a < grid.dim(); ++a) {
        for (int step : {-1, 1}) {
          Index3 nb = idx;
          nb[a] += step;
          const std::size_t q = grid.flat_index(nb);
          if (mask[q] && !seen[q]) {
            seen[q] = 1;
            queue.push_back(q);
          }
        }
      }
    }
  }
  return count;
}

namespace {

std::string describe_points(const TorusGrid& grid, const std::vector<Index3>& pts, std::size_t limit = 8) {
  std::ostringstream os;
  for (std::size_t k = 0; k < pts.size() && k < limit; ++k) {
    os << (k ? " " : "") << "(";
    for (int a = 0; a < grid.dim(); ++a) os << (a ? "," : "") << pts[k][a];
    os << ")";
  }
  if (pts.size() > limit) os << " ... (" << pts.size() << " total)";
  return os.str();
}

double max_hessian_frobenius(const ScalarField& f) {
  const SymmetricMatrixField hess = hessian(f);
  double m = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) m = std::max(m, hess.frobenius_at(p));
  return m;
}

}  // namespace

WellPreparedReport audit_well_prepared(const ObstaclePair& obs, const ScalarField& g) {
  const TorusGrid& grid = obs.grid();
  if (!(g.grid() == grid)) throw std::invalid_argument("audit_well_prepared: initial datum lives on a different grid");
  WellPreparedReport rep;

  rep.separation = std::numeric_limits<double>::infinity();
  std::vector<Index3> touching;
  std::vector<Index3> below;
  std::vector<Index3> above;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double gap = obs.psi[p] - obs.phi[p];
    rep.separation = std::min(rep.separation, gap);
    if (gap <= 0.0) touching.push_back(grid.multi_index(p));
    if (g[p] < obs.phi[p]) below.push_back(grid.multi_index(p));
    if (g[p] > obs.psi[p]) above.push_back(grid.multi_index(p));
  }
  if (!touching.empty())
    throw WellPreparedError("obstacles are not strictly separated (psi - phi <= 0) at " + describe_points(grid, touching),
                            touching);
  if (!below.empty() || !above.empty()) {
    std::vector<Index3> all = below;
    all.insert(all.end(), above.begin(), above.end());
    std::string msg = "ordering phi <= g <= psi violated";
    if (!below.empty()) msg += "; g < phi at " + describe_points(grid, below);
    if (!above.empty()) msg += "; g > psi at " + describe_points(grid, above);
    throw WellPreparedError(msg, all);
  }

  rep.max_abs_g = g.max_abs();
  rep.max_phi = obs.phi.max();
  rep.min_psi = obs.psi.min();
  rep.bounds_ok = rep.max_abs_g <= obs.L && rep.max_phi <= obs.L && rep.min_psi >= -obs.L;
  if (!rep.bounds_ok) rep.notes.push_back("bound |g|, max phi <= L or min psi >= -L fails for L = " + std::to_string(obs.L));

  const double h = grid.h();
  rep.grad_tol_lower = 10.0 * h * max_hessian_frobenius(obs.phi);
  rep.grad_tol_upper = 10.0 * h * max_hessian_frobenius(obs.psi);
  const VectorField gphi = obs.grad_phi();
  const VectorField gpsi = obs.grad_psi();
  const double level = obs.L + obs.ell;
  std::vector<char> lower(grid.size(), 0), upper(grid.size(), 0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    lower[p] = obs.phi[p] >= -level && gphi.norm_at(p) <= rep.grad_tol_lower;
    upper[p] = obs.psi[p] <= level && gpsi.norm_at(p) <= rep.grad_tol_upper;
    rep.critical_lower_points += lower[p];
    rep.critical_upper_points += upper[p];
  }
  rep.critical_lower_components = count_components(grid, lower, &rep.lower_component_seeds);
  rep.critical_upper_components = count_components(grid, upper, &rep.upper_component_seeds);

  const bool lower_ok = rep.critical_lower_components <= static_cast<int>(obs.critical_lower.size());
  const bool upper_ok = rep.critical_upper_components <= static_cast<int>(obs.critical_upper.size());
  if (!lower_ok)
    rep.notes.push_back("lower obstacle has " + std::to_string(rep.critical_lower_components) +
                        " critical components, declared " + std::to_string(obs.critical_lower.size()));
  if (!upper_ok)
    rep.notes.push_back("upper obstacle has " + std::to_string(rep.critical_upper_components) +
                        " critical components, declared " + std::to_string(obs.critical_upper.size()));
  rep.pass = rep.bounds_ok && lower_ok && upper_ok;
  return rep;
}

// ---------------------------------------------------------------------------

FlowState::FlowState(ScalarField u, double t, double eps) : u_(std::move(u)), t_(t), eps_(eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("FlowState: eps must be positive");
}

void FlowState::set(ScalarField u, double t) {
  u_ = std::move(u);
  t_ = t;
  cached_ = false;
}

void FlowState::evaluate(const ObstaclePair& obs) const {
  if (cached_ && cached_obs_ == &obs) return;
  const TorusGrid& grid = u_.grid();
  const int dim = grid.dim();
  const double n = grid.n();
  if (grad_.dim() != dim || !(grad_.grid() == grid)) {
    grad_ = VectorField(grid);
    norm_eps_ = ScalarField(grid);
    curvature_ = ScalarField(grid);
    force_ = ScalarField(grid);
    rhs_ = ScalarField(grid);
  }
  const double* u = u_.values().data();
  const double* phi = obs.phi.values().data();
  const double* psi = obs.psi.values().data();
  for_each_stencil(grid, [&](const Stencil& s) {
    const auto e = detail::evaluate_point(u, s, dim, n, phi[s.center], psi[s.center], eps_);
    for (int a = 0; a < dim; ++a) grad_[a][s.center] = e.grad[a];
    norm_eps_[s.center] = e.norm_eps;
    curvature_[s.center] = e.curvature;
    force_[s.center] = e.force;
    rhs_[s.center] = e.rhs;
  });
  cached_ = true;
  cached_obs_ = &obs;
}

void FlowState::require_caches() const {
  if (!cached_) throw std::logic_error("FlowState caches requested before evaluate()");
}

const VectorField& FlowState::grad_u() const { return require_caches(), grad_; }
const ScalarField& FlowState::norm_eps() const { return require_caches(), norm_eps_; }
const ScalarField& FlowState::curvature() const { return require_caches(), curvature_; }
const ScalarField& FlowState::force() const { return require_caches(), force_; }
const ScalarField& FlowState::rhs() const { return require_caches(), rhs_; }

}  // namespace omcf
