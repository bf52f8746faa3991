#include "omcf/grid.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace omcf {

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
  if (n < 8) throw std::invalid_argument("grid needs at least 8 points per axis, got " + std::to_string(n));
  size_ = 1;
  for (int a = 0; a < dim; ++a) {
    ext_[a] = n;
    size_ *= static_cast<std::size_t>(n);
  }
  stride_[2] = 1;
  stride_[1] = static_cast<std::size_t>(ext_[2]);
  stride_[0] = stride_[1] * static_cast<std::size_t>(ext_[1]);
  cell_volume_ = 1.0 / static_cast<double>(size_);
}

Index3 TorusGrid::multi_index(std::size_t flat) const {
  Index3 idx{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    idx[a] = static_cast<int>(flat / stride_[a]);
    flat %= stride_[a];
  }
  return idx;
}

std::size_t TorusGrid::flat_index(const Index3& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat += static_cast<std::size_t>(wrap(idx[a])) * stride_[a];
  return flat;
}

std::array<double, 3> TorusGrid::position(std::size_t flat) const {
  const Index3 idx = multi_index(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = coord(idx[a]);
  return x;
}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw std::invalid_argument("field size does not match grid");
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

VectorField::VectorField(const TorusGrid& grid) : grid_(grid) {
  comps_.reserve(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) comps_.emplace_back(grid);
}

double VectorField::norm_at(std::size_t p) const {
  double s = 0.0;
  for (const auto& c : comps_) s += c[p] * c[p];
  return std::sqrt(s);
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (std::size_t p = 0; p < grid_.size(); ++p) m = std::max(m, norm_at(p));
  return m;
}

bool VectorField::all_finite() const {
  return std::all_of(comps_.begin(), comps_.end(), [](const ScalarField& c) { return c.all_finite(); });
}

SymmetricMatrixField::SymmetricMatrixField(const TorusGrid& grid) : grid_(grid) {
  const int d = grid.dim();
  entries_.reserve(d * (d + 1) / 2);
  for (int k = 0; k < d * (d + 1) / 2; ++k) entries_.emplace_back(grid);
}

int SymmetricMatrixField::packed(int a, int b, int dim) {
  if (a > b) std::swap(a, b);
  // row-major upper triangle
  return a * dim - a * (a - 1) / 2 + (b - a);
}

double SymmetricMatrixField::frobenius_at(std::size_t p) const {
  const int d = grid_.dim();
  double s = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double v = entry(a, b)[p];
      s += v * v;
    }
  return std::sqrt(s);
}

namespace {

// Eigenvalues of a symmetric 3x3 matrix (closed-form trigonometric method).
std::array<double, 3> sym3_eigenvalues(double a11, double a12, double a13, double a22, double a23, double a33) {
  const double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  if (p1 == 0.0) return {a11, a22, a33};
  const double q = (a11 + a22 + a33) / 3.0;
  const double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const double b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
  const double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
  const double det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) + b13 * (b12 * b23 - b22 * b13);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

}  // namespace

double SymmetricMatrixField::nuclear_at(std::size_t p) const {
  const int d = grid_.dim();
  if (d == 1) return std::abs(entry(0, 0)[p]);
  if (d == 2) {
    const double a = entry(0, 0)[p], b = entry(0, 1)[p], c = entry(1, 1)[p];
    const double m = 0.5 * (a + c);
    const double r = std::hypot(0.5 * (a - c), b);
    return std::abs(m + r) + std::abs(m - r);
  }
  const auto ev = sym3_eigenvalues(entry(0, 0)[p], entry(0, 1)[p], entry(0, 2)[p], entry(1, 1)[p],
                                   entry(1, 2)[p], entry(2, 2)[p]);
  return std::abs(ev[0]) + std::abs(ev[1]) + std::abs(ev[2]);
}

VectorField gradient(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  VectorField out(grid);
  const double inv2h = 0.5 * grid.n();
  const double* src = f.values().data();
  for_each_stencil(grid, [&](const Stencil& s) {
    for (int a = 0; a < grid.dim(); ++a) out[a][s.center] = central_first(src, s, a, inv2h);
  });
  return out;
}

SymmetricMatrixField hessian(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  SymmetricMatrixField out(grid);
  const double n = grid.n();
  const double invh2 = n * n;
  const double inv4h2 = 0.25 * n * n;
  const double* src = f.values().data();
  for_each_stencil(grid, [&](const Stencil& s) {
    for (int a = 0; a < grid.dim(); ++a) {
      out.entry(a, a)[s.center] = central_second(src, s, a, invh2);
      for (int b = a + 1; b < grid.dim(); ++b) out.entry(a, b)[s.center] = central_mixed(src, s, a, b, inv4h2);
    }
  });
  return out;
}

double regularized_norm(std::span<const double> p, double eps) {
  if (eps < 0.0) throw std::invalid_argument("regularized_norm: eps must be >= 0");
  double s = eps * eps;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

double deterministic_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 2048;
  const std::size_t nblocks = (values.size() + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    CompensatedSum acc;
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(values.size(), lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) acc.add(values[i]);
    partial[b] = acc.value();
  }
  CompensatedSum total;
  for (double v : partial) total.add(v);
  return total.value();
}

double integrate(const ScalarField& f) { return deterministic_sum(f.values()) * f.grid().cell_volume(); }

double periodic_delta(double x, double c) {
  double d = x - c;
  d -= std::floor(d + 0.5);
  return d;
}

}  // namespace omcf
