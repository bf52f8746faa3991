#pragma once

// Periodic uniform grid on the flat unit torus [0,1)^d, grid-sampled fields,
// central-difference operators and deterministic quadrature.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace omcf {

using Index3 = std::array<int, 3>;

/// Uniform periodic grid with the same number of points on every axis.
/// Point i sits at x = i/n, so h*n == 1 holds exactly in coordinates.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return 1.0 / n_; }
  std::size_t size() const { return size_; }

  /// Extent per axis; axes beyond dim() have extent 1.
  const Index3& extents() const { return ext_; }
  /// Row-major strides, axis 0 slowest.
  const std::array<std::size_t, 3>& strides() const { return stride_; }

  double coord(int i) const { return static_cast<double>(i) / n_; }
  int wrap(int i) const {
    int r = i % n_;
    return r < 0 ? r + n_ : r;
  }

  Index3 multi_index(std::size_t flat) const;
  std::size_t flat_index(const Index3& idx) const;  // wraps every active axis
  std::array<double, 3> position(std::size_t flat) const;

  /// Volume of one cell, h^d.
  double cell_volume() const { return cell_volume_; }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_;
  }

 private:
  int dim_ = 0;
  int n_ = 0;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
  Index3 ext_{1, 1, 1};
  std::array<std::size_t, 3> stride_{0, 0, 0};
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const TorusGrid& grid, double value = 0.0)
      : grid_(grid), values_(grid.size(), value) {}
  ScalarField(const TorusGrid& grid, std::vector<double> values);

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  double max() const;
  double min() const;
  double max_abs() const;

  /// Samples fn(x) where x is the point position (only the first dim entries are meaningful).
  template <class Fn>
  static ScalarField sample(const TorusGrid& grid, Fn&& fn) {
    ScalarField out(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) out.values_[p] = fn(grid.position(p));
    return out;
  }

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }

  ScalarField& operator[](int axis) { return comps_[axis]; }
  const ScalarField& operator[](int axis) const { return comps_[axis]; }

  double norm_at(std::size_t p) const;
  double max_norm() const;
  bool all_finite() const;

 private:
  TorusGrid grid_;
  std::vector<ScalarField> comps_;
};

/// Symmetric d x d matrix per grid point, packed upper triangle.
class SymmetricMatrixField {
 public:
  SymmetricMatrixField() = default;
  explicit SymmetricMatrixField(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  static int packed(int a, int b, int dim);

  ScalarField& entry(int a, int b) { return entries_[packed(a, b, grid_.dim())]; }
  const ScalarField& entry(int a, int b) const { return entries_[packed(a, b, grid_.dim())]; }

  double frobenius_at(std::size_t p) const;
  /// Sum of absolute eigenvalues at a point.
  double nuclear_at(std::size_t p) const;

 private:
  TorusGrid grid_;
  std::vector<ScalarField> entries_;
};

// ---------------------------------------------------------------------------
// Point stencils. Shared by the standalone operators and the fused solver
// kernel so both produce bit-identical values.

struct Stencil {
  std::size_t center = 0;
  std::array<std::ptrdiff_t, 3> plus{0, 0, 0};   // flat offset of the +1 neighbour per axis
  std::array<std::ptrdiff_t, 3> minus{0, 0, 0};  // flat offset of the -1 neighbour per axis
};

inline double central_first(const double* f, const Stencil& s, int a, double inv2h) {
  return (f[s.center + s.plus[a]] - f[s.center + s.minus[a]]) * inv2h;
}

inline double central_second(const double* f, const Stencil& s, int a, double invh2) {
  return (f[s.center + s.plus[a]] - 2.0 * f[s.center] + f[s.center + s.minus[a]]) * invh2;
}

inline double central_mixed(const double* f, const Stencil& s, int a, int b, double inv4h2) {
  const std::size_t c = s.center;
  return (f[c + s.plus[a] + s.plus[b]] - f[c + s.plus[a] + s.minus[b]] -
          f[c + s.minus[a] + s.plus[b]] + f[c + s.minus[a] + s.minus[b]]) *
         inv4h2;
}

/// Visits every grid point with its periodic stencil. The outermost axis is
/// split across OpenMP threads; fn must only write to index s.center.
template <class Fn>
void for_each_stencil(const TorusGrid& grid, Fn&& fn) {
  const auto& ext = grid.extents();
  const auto& st = grid.strides();
  const int dim = grid.dim();
#pragma omp parallel for schedule(static)
  for (int i0 = 0; i0 < ext[0]; ++i0) {
    Stencil s;
    for (int i1 = 0; i1 < ext[1]; ++i1) {
      for (int i2 = 0; i2 < ext[2]; ++i2) {
        const Index3 idx{i0, i1, i2};
        s.center = static_cast<std::size_t>(i0) * st[0] + static_cast<std::size_t>(i1) * st[1] +
                   static_cast<std::size_t>(i2) * st[2];
        for (int a = 0; a < dim; ++a) {
          const auto stride = static_cast<std::ptrdiff_t>(st[a]);
          const int n = ext[a];
          s.plus[a] = (idx[a] + 1 == n) ? -(n - 1) * stride : stride;
          s.minus[a] = (idx[a] == 0) ? (n - 1) * stride : -stride;
        }
        fn(s);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Operators

VectorField gradient(const ScalarField& f);
SymmetricMatrixField hessian(const ScalarField& f);

/// sqrt(eps^2 + |p|^2).
double regularized_norm(std::span<const double> p, double eps);

/// Rectangle rule sum(f) * h^d with a fixed-topology compensated reduction.
double integrate(const ScalarField& f);

/// Compensated sum over fixed-size blocks, blocks combined in index order.
/// The result does not depend on the number of threads.
double deterministic_sum(std::span<const double> values);

/// Neumaier accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Pointwise map into a new field (parallel, order independent).
template <class Fn>
ScalarField map_points(const TorusGrid& grid, Fn&& fn) {
  ScalarField out(grid);
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  auto vals = out.values();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) vals[p] = fn(static_cast<std::size_t>(p));
  return out;
}

/// Periodic displacement x - c wrapped into [-1/2, 1/2) per axis.
double periodic_delta(double x, double c);

}  // namespace omcf
