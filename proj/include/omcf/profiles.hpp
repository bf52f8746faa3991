#pragma once

// Analytic fields on the torus: obstacles and initial data that can be
// sampled with exact gradients. Addressable by a compact text spec
//   kind:key=value,key=value
// e.g. "cone:radius=0.3,amplitude=1" or "constant:value=-10".

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "omcf/grid.hpp"

namespace omcf {

using Point = std::array<double, 3>;

struct AnalyticField {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::string spec;  // canonical text form

  ScalarField sample(const TorusGrid& grid) const;
  VectorField sample_gradient(const TorusGrid& grid) const;
};

/// A knot of a radial profile: slope jumps by `jump` at radius `r`.
struct RadialKnot {
  double r = 0.0;
  double jump = 0.0;
  double width = 0.0;  // <= 0 uses the profile width
};

/// amplitude * (base + slope*|r|_w + sum_k jump_k * ramp_w(r - r_k)), r the periodic
/// distance to center. |.|_w and ramp_w are C^2 smoothings of |.| and max(.,0)
/// over half-width w (per knot when set) whose second derivative vanishes where the slope does. The profile must be flat before r reaches 1/2.
struct RadialProfile {
  Point center{0.5, 0.5, 0.5};
  double base = 0.0;
  double slope = 0.0;
  std::vector<RadialKnot> knots;
  double width = 0.0;
  double amplitude = 1.0;

  double knot_width(const RadialKnot& k) const;
  double value(double r) const;
  double derivative(double r) const;
  /// Radius beyond which the profile is constant.
  double flat_radius() const;
};

double smooth_abs(double r, double w);
double smooth_abs_derivative(double r, double w);
double smooth_ramp(double x, double w);
double smooth_ramp_derivative(double x, double w);

/// Radially increasing C^1 bump: (128L/3)(s^2 - 1/64) for s < 1/4, a monotone cubic
/// Hermite join on [1/4, 3/8), and 3L beyond, with s = |x - c| / scale. Its zero set is
/// the sphere of radius scale/8 and its only critical point with value <= 2L is c.
double remark_bump_profile(double s, double L);
double remark_bump_derivative(double s, double L);

AnalyticField make_constant(double value);
AnalyticField make_radial(int dim, const RadialProfile& profile);
/// Smoothed cone amplitude*(radius - r) flattened beyond `plateau`; the tip is
/// smoothed over `width`, the rim over `plateau_width`.
AnalyticField make_cone(int dim, const Point& center, double radius, double amplitude, double width,
                        double plateau, double plateau_width = 0.05);
AnalyticField make_bump(int dim, const std::vector<Point>& centers, double L, double scale);

/// Smooth periodic distance-like function: |x - c| (tip smoothed over `width`)
/// for r <= inner, blended C^2 by r = outer <= 1/2 into sqrt(sum_a s(x_a - c_a))
/// with s a smooth periodic surrogate of x^2. Its only critical points are c,
/// the antipode and the half-period saddles.
struct DomeShape {
  Point center{0.5, 0.5, 0.5};
  double width = 0.0;
  double inner = 0.30;
  double outer = 0.45;

  double value(int dim, const Point& x, Point* grad) const;
};

/// amplitude * (base + slope * rho(x)) with rho the dome distance.
AnalyticField make_dome(int dim, const DomeShape& shape, double base, double slope, double amplitude);
/// Critical points of the dome distance: centre, antipode, half-period saddles.
std::vector<Point> dome_critical_points(int dim, const Point& center);
AnalyticField make_sine(int dim, double amplitude, const std::array<int, 3>& wave, double offset);

/// Applies a monotone map F to an analytic field (gradient via F').
AnalyticField relabel(const AnalyticField& f, std::function<double(double)> F, std::function<double(double)> dF,
                      const std::string& tag);

/// Parses "kind:key=value,...". Throws std::invalid_argument naming the offending key.
AnalyticField parse_field_spec(int dim, const std::string& spec);

/// Names of the analytic field kinds understood by parse_field_spec.
std::vector<std::string> field_kinds();

}  // namespace omcf
