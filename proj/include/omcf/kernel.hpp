#pragma once

// Pointwise evaluation of the regularized level-set operator. Used by
// FlowState::evaluate and by the standalone curvature/rhs operators.

#include "omcf/grid.hpp"
#include "omcf/model.hpp"

namespace omcf::detail {

struct PointEval {
  double grad[3] = {0.0, 0.0, 0.0};
  double norm_eps = 0.0;
  double contraction = 0.0;  // a_ij^eps d_ij u
  double curvature = 0.0;    // H_eps = -contraction / |grad u|_eps
  double force = 0.0;        // f_eps
  double rhs = 0.0;          // contraction + |grad u|_eps f_eps
};

inline PointEval evaluate_point(const double* u, const Stencil& s, int dim, double n, double phi, double psi,
                                double eps) {
  const double inv2h = 0.5 * n;
  const double invh2 = n * n;
  const double inv4h2 = 0.25 * n * n;
  PointEval e;
  double g2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    e.grad[a] = central_first(u, s, a, inv2h);
    g2 += e.grad[a] * e.grad[a];
  }
  const double nrm2 = eps * eps + g2;
  double trace = 0.0;
  double quad = 0.0;  // grad^T D2 grad
  for (int a = 0; a < dim; ++a) {
    const double daa = central_second(u, s, a, invh2);
    trace += daa;
    quad += e.grad[a] * e.grad[a] * daa;
    for (int b = a + 1; b < dim; ++b) quad += 2.0 * e.grad[a] * e.grad[b] * central_mixed(u, s, a, b, inv4h2);
  }
  e.norm_eps = std::sqrt(nrm2);
  e.contraction = trace - quad / nrm2;
  e.curvature = -e.contraction / e.norm_eps;
  e.force = penalty_force_density(u[s.center], phi, psi, eps);
  e.rhs = e.contraction + e.norm_eps * e.force;
  return e;
}

}  // namespace omcf::detail
