#include "omcf/bvcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace omcf {

void LevelSetProbe::validate(const TorusGrid& grid) const {
  if (!(band >= 2.0 * grid.h())) throw std::invalid_argument("level-set probe band must be at least 2h");
  if (!(grad_floor > 0.0)) throw std::invalid_argument("level-set probe gradient floor must be positive");
}

double default_grad_floor(const ScalarField& u, double eps) {
  const VectorField g = gradient(u);
  const SymmetricMatrixField hess = hessian(u);
  std::vector<double> vals;
  for (std::size_t p = 0; p < u.size(); ++p)
    if (g.norm_at(p) > 10.0 * eps) vals.push_back(hess.frobenius_at(p));
  double median = 0.0;
  if (!vals.empty()) {
    auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
    std::nth_element(vals.begin(), mid, vals.end());
    median = *mid;
  }
  return std::max(10.0 * eps, u.grid().h() * median);
}

double level_slope(const ScalarField& u, double gamma) {
  const TorusGrid& grid = u.grid();
  const VectorField g = gradient(u);
  std::vector<double> slopes;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Index3 idx = grid.multi_index(p);
    for (int a = 0; a < grid.dim(); ++a) {
      Index3 nb = idx;
      ++nb[a];
      const std::size_t q = grid.flat_index(nb);
      if ((u[p] - gamma) * (u[q] - gamma) <= 0.0 && u[p] != u[q]) {
        slopes.push_back(g.norm_at(p));
        break;
      }
    }
  }
  if (slopes.empty()) return g.max_norm();
  auto mid = slopes.begin() + static_cast<std::ptrdiff_t>(slopes.size() / 2);
  std::nth_element(slopes.begin(), mid, slopes.end());
  return *mid;
}

LevelSetProbe make_probe(const ScalarField& u, double gamma, double eps, double cells) {
  const double h = u.grid().h();
  LevelSetProbe probe;
  probe.gamma = gamma;
  probe.band = std::max(2.0 * h, cells * h * level_slope(u, gamma));
  probe.grad_floor = default_grad_floor(u, eps);
  return probe;
}

std::string residual_csv_header() { return "name,field,gamma,t0,t1,value,tolerance,scale,two_sided,degenerate,pass"; }

std::string residual_csv_line(const ResidualReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d", r.name.c_str(),
                r.field_id.c_str(), r.gamma, r.t0, r.t1, r.value, r.tolerance, r.scale, r.two_sided ? 1 : 0,
                r.degenerate ? 1 : 0, r.pass ? 1 : 0);
  return buf;
}

double quartic_bump(double s) {
  if (s <= -1.0 || s >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return 15.0 / 16.0 * q * q;
}

double mollified_delta(double s, double a) { return quartic_bump(s / a) / a; }

// ---------------------------------------------------------------------------

NormalVelocity normal_velocity(const FlowState& state, const ObstaclePair& obs, double grad_floor) {
  state.evaluate(obs);
  const TorusGrid& grid = state.grid();
  const int d = grid.dim();
  const VectorField& g = state.grad_u();
  const ScalarField& r = state.rhs();
  NormalVelocity out{VectorField(grid), ScalarField(grid)};
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double m = g.norm_at(p);
    if (m > grad_floor) {
      for (int a = 0; a < d; ++a) out.nu[a][p] = -g[a][p] / m;
      out.V[p] = r[p] / m;
    }
  }
  return out;
}

NormalVelocity normal_velocity(const Trajectory& traj, std::size_t k, double grad_floor) {
  return normal_velocity(traj.state(k), *traj.obstacles, grad_floor);
}

CoareaResult coarea(const ScalarField& u, const ScalarField& g, const LevelSetProbe& probe) {
  probe.validate(u.grid());
  const VectorField grad = gradient(u);
  CoareaResult res;
  const ScalarField dens = map_points(u.grid(), [&](std::size_t p) {
    const double s = u[p] - probe.gamma;
    if (std::abs(s) >= probe.band) return 0.0;
    return g[p] * mollified_delta(s, probe.band) * grad.norm_at(p);
  });
  for (std::size_t p = 0; p < u.size(); ++p)
    if (std::abs(u[p] - probe.gamma) < probe.band && grad.norm_at(p) < probe.grad_floor) ++res.degenerate_cells;
  res.degenerate = res.degenerate_cells > 0;
  res.value = integrate(dens);
  return res;
}

double coarea_surface_integral(const ScalarField& u, const ScalarField& g, const LevelSetProbe& probe) {
  return coarea(u, g, probe).value;
}

double perimeter(const ScalarField& u, const LevelSetProbe& probe) {
  return coarea(u, ScalarField(u.grid(), 1.0), probe).value;
}

CoareaConsistency coarea_consistency(const ScalarField& u, double band, int levels_per_band) {
  if (!(band > 0.0) || levels_per_band < 1) throw std::invalid_argument("coarea_consistency: bad band or level count");
  const VectorField grad = gradient(u);
  const double dgamma = band / levels_per_band;
  const double g0 = u.min() - band;
  // Per point, sum the deltas of every level on the grid g0 + k dgamma.
  const ScalarField dens = map_points(u.grid(), [&](std::size_t p) {
    const double x = u[p];
    const auto k_lo = static_cast<long>(std::floor((x - band - g0) / dgamma));
    const auto k_hi = static_cast<long>(std::ceil((x + band - g0) / dgamma));
    double w = 0.0;
    for (long k = std::max(0L, k_lo); k <= k_hi; ++k) w += mollified_delta(x - (g0 + k * dgamma), band);
    return w * dgamma * grad.norm_at(p);
  });
  CoareaConsistency c;
  c.level_sum = integrate(dens);
  c.total_variation = integrate(map_points(u.grid(), [&](std::size_t p) { return grad.norm_at(p); }));
  c.relative_error = c.total_variation > 0.0 ? std::abs(c.level_sum - c.total_variation) / c.total_variation
                                             : std::abs(c.level_sum);
  return c;
}

// ---------------------------------------------------------------------------

std::size_t ContactMasks::plus_count() const { return static_cast<std::size_t>(std::count(plus.begin(), plus.end(), 1)); }
std::size_t ContactMasks::minus_count() const {
  return static_cast<std::size_t>(std::count(minus.begin(), minus.end(), 1));
}

namespace {

double min_separation(const ObstaclePair& obs) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < obs.phi.size(); ++p) m = std::min(m, obs.psi[p] - obs.phi[p]);
  return m;
}

}  // namespace

double default_contact_tol(const ObstaclePair& obs) { return min_separation(obs) / 10.0; }

ContactMasks contact_sets(const ScalarField& u, const ObstaclePair& obs, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("contact tolerance must be positive");
  const double sep = min_separation(obs);
  if (!(tol < sep / 2.0))
    throw std::invalid_argument("contact tolerance " + std::to_string(tol) + " must be below half the obstacle separation " +
                                std::to_string(sep));
  ContactMasks m;
  m.tol = tol;
  m.plus.assign(u.size(), 0);
  m.minus.assign(u.size(), 0);
  for (std::size_t p = 0; p < u.size(); ++p) {
    m.plus[p] = obs.psi[p] - u[p] < tol;
    m.minus[p] = u[p] - obs.phi[p] < tol;
    if (m.plus[p] && m.minus[p]) throw std::invalid_argument("contact sets overlap");
  }
  return m;
}

std::string to_string(FieldMode mode) {
  switch (mode) {
    case FieldMode::zero: return "zero";
    case FieldMode::obstacle_aligned: return "obstacle-aligned";
    case FieldMode::random_mixed: return "random-mixed";
  }
  return "?";
}

FieldMode parse_field_mode(const std::string& name) {
  if (name == "zero") return FieldMode::zero;
  if (name == "obstacle-aligned") return FieldMode::obstacle_aligned;
  if (name == "random-mixed") return FieldMode::random_mixed;
  throw std::invalid_argument("unknown field mode '" + name + "' (zero, obstacle-aligned, random-mixed)");
}

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Euclidean distance to the mask, exact for points within `radius` cells
/// of the mask boundary and +infinity beyond.
std::vector<double> local_distance(const TorusGrid& grid, const std::vector<char>& mask, int radius) {
  const int d = grid.dim();
  const double h = grid.h();
  std::vector<double> dist(mask.size(), std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    dist[p] = 0.0;
    const Index3 idx = grid.multi_index(p);
    bool boundary = false;
    for (int a = 0; a < d && !boundary; ++a)
      for (int step : {-1, 1}) {
        Index3 nb = idx;
        nb[a] += step;
        if (!mask[grid.flat_index(nb)]) boundary = true;
      }
    if (!boundary) continue;
    const int r1 = d > 1 ? radius : 0;
    const int r2 = d > 2 ? radius : 0;
    for (int i = -radius; i <= radius; ++i)
      for (int j = -r1; j <= r1; ++j)
        for (int k = -r2; k <= r2; ++k) {
          const Index3 nb{idx[0] + i, idx[1] + j, idx[2] + k};
          const std::size_t q = grid.flat_index(nb);
          if (mask[q]) continue;
          const double dd = h * std::sqrt(static_cast<double>(i * i + j * j + k * k));
          dist[q] = std::min(dist[q], dd);
        }
  }
  return dist;
}

/// C^1 step: 1 at s >= 1, 0 at s <= 0.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * (3.0 - 2.0 * s);
}

double c1_norm(const VectorField& X) {
  const TorusGrid& grid = X.grid();
  const int d = grid.dim();
  std::vector<VectorField> dx;
  for (int a = 0; a < d; ++a) dx.push_back(gradient(X[a]));
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    m0 = std::max(m0, X.norm_at(p));
    double f = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) f += dx[a][b][p] * dx[a][b][p];
    m1 = std::max(m1, std::sqrt(f));
  }
  return m0 + m1;
}

}  // namespace

VectorField random_trig_field(const TorusGrid& grid, std::uint64_t seed, int max_wave, int terms, double amplitude) {
  const int d = grid.dim();
  std::mt19937_64 rng(seed);
  VectorField W(grid);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int a = 0; a < d; ++a) {
    struct Term {
      std::array<int, 3> k{0, 0, 0};
      double c = 0.0, s = 0.0;
    };
    std::vector<Term> ts(static_cast<std::size_t>(terms));
    double total = 0.0;
    for (auto& t : ts) {
      bool nonzero = false;
      while (!nonzero) {
        for (int b = 0; b < d; ++b) {
          t.k[b] = static_cast<int>(std::floor(u01(rng) * (2 * max_wave + 1))) - max_wave;
          nonzero = nonzero || t.k[b] != 0;
        }
      }
      t.c = 2.0 * u01(rng) - 1.0;
      t.s = 2.0 * u01(rng) - 1.0;
      total += std::abs(t.c) + std::abs(t.s);
    }
    const double scale = total > 0.0 ? amplitude / total : 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto x = grid.position(p);
      double v = 0.0;
      for (const auto& t : ts) {
        double phase = 0.0;
        for (int b = 0; b < d; ++b) phase += t.k[b] * x[b];
        v += t.c * std::cos(two_pi * phase) + t.s * std::sin(two_pi * phase);
      }
      W[a][p] = scale * v;
    }
  }
  return W;
}

AdmissibleField audit_admissible(VectorField X, const ObstaclePair& obs, const ContactMasks& masks) {
  const TorusGrid& grid = obs.grid();
  const int d = grid.dim();
  const VectorField gphi = obs.grad_phi();
  const VectorField gpsi = obs.grad_psi();
  AdmissibleField out;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (masks.plus[p]) {
      double v = 0.0;
      for (int a = 0; a < d; ++a) v += X[a][p] * gpsi[a][p];
      out.min_plus = std::min(out.min_plus, v);
    }
    if (masks.minus[p]) {
      double v = 0.0;
      for (int a = 0; a < d; ++a) v -= X[a][p] * gphi[a][p];
      out.min_minus = std::min(out.min_minus, v);
    }
  }
  out.admissible = out.min_plus >= -1e-12 && out.min_minus >= -1e-12;
  out.c1_norm = c1_norm(X);
  out.X = std::move(X);
  return out;
}

AdmissibleField admissible_field(const ObstaclePair& obs, const ContactMasks& masks, FieldMode mode,
                                 std::uint64_t seed) {
  const TorusGrid& grid = obs.grid();
  const int d = grid.dim();
  VectorField X(grid);
  if (mode == FieldMode::zero) return audit_admissible(std::move(X), obs, masks);

  constexpr int kRadius = 4;
  const std::vector<double> dplus = local_distance(grid, masks.plus, 2 * kRadius);
  const std::vector<double> dminus = local_distance(grid, masks.minus, 2 * kRadius);
  // Cutoff width: kRadius cells, shrunk so neither cutoff reaches the other mask.
  double delta = kRadius * grid.h();
  for (std::size_t p = 0; p < grid.size(); ++p)
    if (masks.minus[p] && std::isfinite(dplus[p])) delta = std::min(delta, 0.5 * dplus[p]);

  const VectorField gphi = obs.grad_phi();
  const VectorField gpsi = obs.grad_psi();
  const double nphi = gphi.max_norm() > 0.0 ? 1.0 / gphi.max_norm() : 0.0;
  const double npsi = gpsi.max_norm() > 0.0 ? 1.0 / gpsi.max_norm() : 0.0;

  VectorField W(grid);
  ScalarField splus(grid, 1.0), sminus(grid, 1.0);
  if (mode == FieldMode::random_mixed) {
    W = random_trig_field(grid, seed);
    const VectorField s = random_trig_field(grid, seed ^ 0x9e3779b97f4a7c15ULL, 2, 4, 0.5);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      splus[p] = 1.0 + s[0][p];
      sminus[p] = 1.0 + s[d > 1 ? 1 : 0][p];
    }
  }

  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double cp = masks.plus[p] ? 1.0 : smooth_step(1.0 - dplus[p] / delta);
    const double cm = masks.minus[p] ? 1.0 : smooth_step(1.0 - dminus[p] / delta);
    const double rest = std::max(0.0, 1.0 - cp - cm);
    for (int a = 0; a < d; ++a)
      X[a][p] = cp * splus[p] * npsi * gpsi[a][p] - cm * sminus[p] * nphi * gphi[a][p] + rest * W[a][p];
  }
  return audit_admissible(std::move(X), obs, masks);
}

// ---------------------------------------------------------------------------

namespace {

struct WindowIndices {
  std::size_t first = 0;
  std::size_t last = 0;
};

WindowIndices window_indices(const Trajectory& traj, const TimeWindow& w) {
  const double slack = 1e-12 * std::max(1.0, std::abs(w.t1));
  std::size_t first = Trajectory::npos, last = Trajectory::npos;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const double t = traj.snapshots[k].t;
    if (t >= w.t0 - slack && t <= w.t1 + slack) {
      if (first == Trajectory::npos) first = k;
      last = k;
    }
  }
  if (first == Trajectory::npos || last == first)
    throw std::invalid_argument("time window holds fewer than two snapshots");
  return {first, last};
}

/// Trapezoidal rule over snapshot times first..last for per-snapshot values.
double trapezoid(const Trajectory& traj, const WindowIndices& wi, const std::vector<double>& vals) {
  CompensatedSum acc;
  for (std::size_t k = wi.first; k < wi.last; ++k) {
    const double dt = traj.snapshots[k + 1].t - traj.snapshots[k].t;
    acc.add(0.5 * dt * (vals[k - wi.first] + vals[k + 1 - wi.first]));
  }
  return acc.value();
}

/// [(I - nu x nu) : DX + V nu . X] on {|grad u| > floor}, 0 elsewhere.
ScalarField motion_integrand(const NormalVelocity& nv, const VectorField& X, const VectorField& grad_u, double floor) {
  const TorusGrid& grid = X.grid();
  const int d = grid.dim();
  std::vector<VectorField> dx;
  for (int a = 0; a < d; ++a) dx.push_back(gradient(X[a]));
  return map_points(grid, [&](std::size_t p) {
    if (!(grad_u.norm_at(p) > floor)) return 0.0;
    double div = 0.0, nn = 0.0, vx = 0.0;
    for (int a = 0; a < d; ++a) {
      div += dx[a][a][p];
      vx += nv.nu[a][p] * X[a][p];
      for (int b = 0; b < d; ++b) nn += nv.nu[a][p] * nv.nu[b][p] * dx[a][b][p];
    }
    return div - nn + nv.V[p] * vx;
  });
}

AdmissibleField make_test_field(const TestField& field, const FlowState& state, const ObstaclePair& obs) {
  const double tol = field.contact_tol > 0.0 ? field.contact_tol : default_contact_tol(obs);
  const ContactMasks masks = contact_sets(state.u(), obs, tol);
  AdmissibleField af = field.custom ? audit_admissible(field.custom(state), obs, masks)
                                    : admissible_field(obs, masks, field.mode, field.seed);
  if (!af.admissible)
    throw std::invalid_argument("test field '" + field.id + "' is not admissible at t = " + std::to_string(state.t()));
  return af;
}

void finish(ResidualReport& r, bool two_sided) {
  r.two_sided = two_sided;
  r.pass = two_sided ? std::abs(r.value) <= r.tolerance : r.value >= -r.tolerance;
}

}  // namespace

ResidualReport bulk_motion_law_residual(const Trajectory& traj, const TestField& field, const TimeWindow& window,
                                        const MotionTolerances& tol, bool two_sided) {
  const WindowIndices wi = window_indices(traj, window);
  const ObstaclePair& obs = *traj.obstacles;
  std::vector<double> vals;
  double c1 = 0.0, tv = 0.0;
  for (std::size_t k = wi.first; k <= wi.last; ++k) {
    const FlowState st = traj.state(k);
    const double floor = tol.grad_floor > 0.0 ? tol.grad_floor : default_grad_floor(st.u(), traj.eps);
    const AdmissibleField af = make_test_field(field, st, obs);
    const NormalVelocity nv = normal_velocity(st, obs, floor);
    const VectorField& g = st.grad_u();
    const ScalarField integrand = motion_integrand(nv, af.X, g, floor);
    vals.push_back(integrate(map_points(st.grid(), [&](std::size_t p) { return integrand[p] * g.norm_at(p); })));
    c1 = std::max(c1, af.c1_norm);
    tv = std::max(tv, integrate(map_points(st.grid(), [&](std::size_t p) { return g.norm_at(p); })));
  }
  ResidualReport r;
  r.name = "bulk_motion_law";
  r.field_id = field.id;
  r.t0 = traj.snapshots[wi.first].t;
  r.t1 = traj.snapshots[wi.last].t;
  r.value = trapezoid(traj, wi, vals);
  r.scale = (r.t1 - r.t0) * c1 * tv;
  r.tolerance = tol.motion_tol * r.scale;
  finish(r, two_sided);
  return r;
}

ResidualReport levelset_motion_law_residual(const Trajectory& traj, const LevelSetProbe& probe, const TestField& field,
                                            const TimeWindow& window, double motion_tol, bool two_sided) {
  probe.validate(traj.grid());
  const WindowIndices wi = window_indices(traj, window);
  const ObstaclePair& obs = *traj.obstacles;
  std::vector<double> vals;
  double c1 = 0.0, per = 0.0;
  bool degenerate = false;
  for (std::size_t k = wi.first; k <= wi.last; ++k) {
    const FlowState st = traj.state(k);
    const AdmissibleField af = make_test_field(field, st, obs);
    const NormalVelocity nv = normal_velocity(st, obs, probe.grad_floor);
    const ScalarField integrand = motion_integrand(nv, af.X, st.grad_u(), probe.grad_floor);
    const CoareaResult cr = coarea(st.u(), integrand, probe);
    vals.push_back(cr.value);
    degenerate = degenerate || cr.degenerate;
    c1 = std::max(c1, af.c1_norm);
    per = std::max(per, perimeter(st.u(), probe));
  }
  ResidualReport r;
  r.name = "levelset_motion_law";
  r.field_id = field.id;
  r.gamma = probe.gamma;
  r.t0 = traj.snapshots[wi.first].t;
  r.t1 = traj.snapshots[wi.last].t;
  r.value = trapezoid(traj, wi, vals);
  r.scale = (r.t1 - r.t0) * c1 * per;
  r.tolerance = motion_tol * r.scale;
  r.degenerate = degenerate;
  if (degenerate) r.note = "band meets cells below the gradient floor";
  finish(r, two_sided);
  return r;
}

ResidualReport distributional_velocity_residual(const Trajectory& traj, const SeparableTestFunction& zeta,
                                                const TimeWindow& window, double dist_tol, double grad_floor) {
  const WindowIndices wi = window_indices(traj, window);
  std::vector<double> lhs_vals, rhs_vals;
  double b0 = 0.0, b1 = 0.0;
  for (std::size_t k = wi.first; k <= wi.last; ++k) {
    const FlowState st = traj.state(k);
    const double t = st.t();
    const double floor = grad_floor > 0.0 ? grad_floor : default_grad_floor(st.u(), traj.eps);
    const ScalarField& u = st.u();
    const ScalarField& r = st.rhs();
    const VectorField& g = st.grad_u();
    const double eta_u = integrate(map_points(st.grid(), [&](std::size_t p) { return zeta.eta[p] * u[p]; }));
    // V |grad u| equals u_t on {|grad u| > floor} and vanishes elsewhere.
    const double eta_vg = integrate(map_points(st.grid(), [&](std::size_t p) {
      return g.norm_at(p) > floor ? zeta.eta[p] * r[p] : 0.0;
    }));
    lhs_vals.push_back(zeta.dtau(t) * eta_u);
    rhs_vals.push_back(zeta.tau(t) * eta_vg);
    if (k == wi.first) b0 = zeta.tau(t) * eta_u;
    if (k == wi.last) b1 = zeta.tau(t) * eta_u;
  }
  const double lhs = trapezoid(traj, wi, lhs_vals);
  const double bulk = trapezoid(traj, wi, rhs_vals);
  const double rhs_total = -bulk + b1 - b0;
  ResidualReport r;
  r.name = "distributional_velocity";
  r.field_id = "separable";
  r.t0 = traj.snapshots[wi.first].t;
  r.t1 = traj.snapshots[wi.last].t;
  r.value = std::abs(lhs - rhs_total);
  r.scale = std::abs(bulk) + std::abs(b1) + std::abs(b0);
  r.tolerance = dist_tol * r.scale;
  finish(r, true);
  return r;
}

ResidualReport per_level_dissipation_residual(const Trajectory& traj, const LevelSetProbe& probe, double t1, double t2,
                                              double per_tol) {
  probe.validate(traj.grid());
  if (!(t1 < t2)) throw std::invalid_argument("per-level dissipation needs t1 < t2");
  const std::size_t k1 = traj.find_time(t1), k2 = traj.find_time(t2);
  if (k1 == Trajectory::npos || k2 == Trajectory::npos)
    throw std::invalid_argument("per-level dissipation times must be snapshot times");
  const WindowIndices wi{k1, k2};
  const ObstaclePair& obs = *traj.obstacles;
  std::vector<double> vals;
  bool degenerate = false;
  double p1 = 0.0, p2 = 0.0;
  for (std::size_t k = k1; k <= k2; ++k) {
    const FlowState st = traj.state(k);
    const NormalVelocity nv = normal_velocity(st, obs, probe.grad_floor);
    const ScalarField v2 = map_points(st.grid(), [&](std::size_t p) { return nv.V[p] * nv.V[p]; });
    const CoareaResult cr = coarea(st.u(), v2, probe);
    vals.push_back(cr.value);
    degenerate = degenerate || cr.degenerate;
    if (k == k1) p1 = perimeter(st.u(), probe);
    if (k == k2) p2 = perimeter(st.u(), probe);
  }
  ResidualReport r;
  r.name = "per_level_dissipation";
  r.field_id = "-";
  r.gamma = probe.gamma;
  r.t0 = t1;
  r.t1 = t2;
  r.value = p2 + trapezoid(traj, wi, vals) - p1;
  r.scale = p1;
  r.tolerance = per_tol * p1;
  r.degenerate = degenerate;
  if (degenerate) r.note = "band meets cells below the gradient floor";
  r.two_sided = false;
  r.pass = r.value <= r.tolerance;
  return r;
}

// ---------------------------------------------------------------------------

std::vector<ScalarField> flatness_dictionary(const TorusGrid& grid) {
  const int d = grid.dim();
  std::vector<std::array<int, 3>> waves;
  for (int a = 0; a < d; ++a) {
    std::array<int, 3> k{0, 0, 0};
    k[a] = 1;
    waves.push_back(k);
    k[a] = 2;
    waves.push_back(k);
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      std::array<int, 3> k{0, 0, 0};
      k[a] = 1;
      k[b] = 1;
      waves.push_back(k);
      k[b] = -1;
      waves.push_back(k);
    }
  std::vector<ScalarField> dict;
  dict.emplace_back(grid, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (const auto& k : waves) {
    auto phase = [k, d](const Point& x) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += k[a] * x[a];
      return two_pi * s;
    };
    dict.push_back(ScalarField::sample(grid, [&](const Point& x) { return std::cos(phase(x)); }));
    dict.push_back(ScalarField::sample(grid, [&](const Point& x) { return std::sin(phase(x)); }));
  }
  return dict;
}

FlatnessReport weak_star_flatness(const std::vector<const Trajectory*>& runs, const TimeWindow& window) {
  if (runs.size() < 2) throw std::invalid_argument("weak_star_flatness needs at least two runs");
  const TorusGrid& grid = runs.front()->grid();
  double eps_max = 0.0;
  for (const auto* r : runs) {
    if (!(r->grid() == grid)) throw std::invalid_argument("weak_star_flatness: runs live on different grids");
    eps_max = std::max(eps_max, r->eps);
  }
  const std::vector<ScalarField> dict = flatness_dictionary(grid);
  const int d = grid.dim();
  FlatnessReport rep;
  for (const auto* r : runs) rep.eps.push_back(r->eps);

  for (std::size_t p = 0; p + 1 < runs.size(); ++p) {
    const Trajectory& A = *runs[p];
    const Trajectory& B = *runs[p + 1];
    std::vector<double> gap(dict.size(), 0.0);
    double ngap = 0.0;
    int count = 0;
    for (std::size_t ka = 0; ka < A.snapshots.size(); ++ka) {
      const double t = A.snapshots[ka].t;
      if (t < window.t0 - 1e-12 || t > window.t1 + 1e-12) continue;
      const std::size_t kb = B.find_time(t);
      if (kb == Trajectory::npos) continue;
      const VectorField ga = gradient(A.snapshots[ka].u);
      const VectorField gb = gradient(B.snapshots[kb].u);
      const double floor = std::max(default_grad_floor(A.snapshots[ka].u, eps_max),
                                    default_grad_floor(B.snapshots[kb].u, eps_max));
      for (std::size_t m = 0; m < dict.size(); ++m) {
        const double v = integrate(map_points(grid, [&](std::size_t q) {
          return (ga.norm_at(q) - gb.norm_at(q)) * dict[m][q];
        }));
        gap[m] += std::abs(v);
      }
      ngap += integrate(map_points(grid, [&](std::size_t q) {
        const double na = ga.norm_at(q), nb = gb.norm_at(q);
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
          const double va = na > floor ? -ga[a][q] / na : 0.0;
          const double vb = nb > floor ? -gb[a][q] / nb : 0.0;
          s += (va - vb) * (va - vb);
        }
        return s;
      }));
      ++count;
    }
    if (count == 0) throw std::invalid_argument("weak_star_flatness: no common snapshot times in the window");
    for (auto& v : gap) v /= count;
    rep.gaps.push_back(gap);
    rep.normal_gaps.push_back(ngap / count);
  }

  std::size_t decreasing = 0;
  for (std::size_t m = 0; m < dict.size(); ++m) {
    bool dec = true;
    for (std::size_t p = 0; p + 1 < rep.gaps.size(); ++p) dec = dec && rep.gaps[p + 1][m] < rep.gaps[p][m];
    decreasing += dec;
  }
  rep.decreasing_fraction = static_cast<double>(decreasing) / static_cast<double>(dict.size());
  rep.normal_gaps_decreasing = true;
  for (std::size_t p = 0; p + 1 < rep.normal_gaps.size(); ++p)
    rep.normal_gaps_decreasing = rep.normal_gaps_decreasing && rep.normal_gaps[p + 1] < rep.normal_gaps[p];
  return rep;
}

}  // namespace omcf
