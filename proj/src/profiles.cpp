#include "omcf/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace omcf {

ScalarField AnalyticField::sample(const TorusGrid& grid) const {
  return ScalarField::sample(grid, [&](const Point& x) { return value(x); });
}

VectorField AnalyticField::sample_gradient(const TorusGrid& grid) const {
  VectorField out(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Point g = gradient(grid.position(p));
    for (int a = 0; a < grid.dim(); ++a) out[a][p] = g[a];
  }
  return out;
}

namespace {

// Smooth step 3s^2 - 2s^3 on [0, 1]: zero slope at both ends.
double step3(double s) { return s * s * (3.0 - 2.0 * s); }

}  // namespace

double smooth_abs(double r, double w) {
  r = std::abs(r);
  if (r >= w) return r;
  const double s = r / w;
  return w * (s * s * s - 0.5 * s * s * s * s + 0.5);
}

double smooth_abs_derivative(double r, double w) {
  if (std::abs(r) >= w) return r < 0 ? -1.0 : 1.0;
  const double q = step3(std::abs(r) / w);
  return r < 0 ? -q : q;
}

double smooth_ramp(double x, double w) {
  if (x <= -w) return 0.0;
  if (x >= w) return x;
  const double s = (x + w) / (2.0 * w);
  return 2.0 * w * (s * s * s - 0.5 * s * s * s * s);
}

double smooth_ramp_derivative(double x, double w) {
  if (x <= -w) return 0.0;
  if (x >= w) return 1.0;
  return step3((x + w) / (2.0 * w));
}

double RadialProfile::knot_width(const RadialKnot& k) const { return k.width > 0.0 ? k.width : width; }

double RadialProfile::value(double r) const {
  double v = base + slope * smooth_abs(r, width);
  for (const auto& k : knots) v += k.jump * smooth_ramp(r - k.r, knot_width(k));
  return amplitude * v;
}

double RadialProfile::derivative(double r) const {
  double v = slope * smooth_abs_derivative(r, width);
  for (const auto& k : knots) v += k.jump * smooth_ramp_derivative(r - k.r, knot_width(k));
  return amplitude * v;
}

double RadialProfile::flat_radius() const {
  double total = slope;
  double last = width;
  for (const auto& k : knots) {
    total += k.jump;
    last = std::max(last, k.r + knot_width(k));
  }
  if (std::abs(total) > 1e-12) return std::numeric_limits<double>::infinity();
  return last;
}

namespace {

constexpr double kBumpInner = 0.25;
constexpr double kBumpOuter = 0.375;

double periodic_radius(int dim, const Point& x, const Point& c, Point* dx) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double d = periodic_delta(x[a], c[a]);
    if (dx) (*dx)[a] = d;
    r2 += d * d;
  }
  return std::sqrt(r2);
}

Point radial_gradient(int dim, const Point& dx, double r, double dfdr) {
  Point g{0.0, 0.0, 0.0};
  if (r == 0.0 || dfdr == 0.0) return g;
  for (int a = 0; a < dim; ++a) g[a] = dfdr * dx[a] / r;
  return g;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_point(int dim, const Point& p) {
  std::string s;
  for (int a = 0; a < dim; ++a) {
    if (a) s += "/";
    s += format_double(p[a]);
  }
  return s;
}

}  // namespace

double remark_bump_profile(double s, double L) {
  if (s < kBumpInner) return (128.0 * L / 3.0) * (s * s - 1.0 / 64.0);
  if (s >= kBumpOuter) return 3.0 * L;
  // Hermite data: value 2L slope 64L/3 at 1/4, value 3L slope 0 at 3/8.
  const double delta = kBumpOuter - kBumpInner;
  const double t = (s - kBumpInner) / delta;
  const double y0 = 2.0 * L, y1 = 3.0 * L, m0 = (64.0 * L / 3.0) * delta;
  const double h00 = 2 * t * t * t - 3 * t * t + 1;
  const double h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t;
  return y0 * h00 + m0 * h10 + y1 * h01;
}

double remark_bump_derivative(double s, double L) {
  if (s < kBumpInner) return (256.0 * L / 3.0) * s;
  if (s >= kBumpOuter) return 0.0;
  const double delta = kBumpOuter - kBumpInner;
  const double t = (s - kBumpInner) / delta;
  const double y0 = 2.0 * L, y1 = 3.0 * L, m0 = (64.0 * L / 3.0) * delta;
  const double d00 = 6 * t * t - 6 * t;
  const double d10 = 3 * t * t - 4 * t + 1;
  const double d01 = -6 * t * t + 6 * t;
  return (y0 * d00 + m0 * d10 + y1 * d01) / delta;
}

AnalyticField make_constant(double value) {
  AnalyticField f;
  f.value = [value](const Point&) { return value; };
  f.gradient = [](const Point&) { return Point{0.0, 0.0, 0.0}; };
  f.spec = "constant:value=" + format_double(value);
  return f;
}

AnalyticField make_radial(int dim, const RadialProfile& profile) {
  if (profile.flat_radius() > 0.5)
    throw std::invalid_argument("radial profile must be flat before the periodic distance reaches 1/2");
  AnalyticField f;
  f.value = [dim, profile](const Point& x) { return profile.value(periodic_radius(dim, x, profile.center, nullptr)); };
  f.gradient = [dim, profile](const Point& x) {
    Point dx{0.0, 0.0, 0.0};
    const double r = periodic_radius(dim, x, profile.center, &dx);
    return radial_gradient(dim, dx, r, profile.derivative(r));
  };
  std::string knots;
  for (const auto& k : profile.knots) {
    if (!knots.empty()) knots += ";";
    knots += format_double(k.r) + "@" + format_double(k.jump);
    if (k.width > 0.0) knots += "@" + format_double(k.width);
  }
  f.spec = "radial:center=" + format_point(dim, profile.center) + ",base=" + format_double(profile.base) +
           ",slope=" + format_double(profile.slope) + (knots.empty() ? "" : ",knots=" + knots) +
           ",width=" + format_double(profile.width) + ",amplitude=" + format_double(profile.amplitude);
  return f;
}

AnalyticField make_cone(int dim, const Point& center, double radius, double amplitude, double width,
                        double plateau, double plateau_width) {
  RadialProfile p;
  p.center = center;
  p.base = radius;
  p.slope = -1.0;
  p.knots = {{plateau, 1.0, plateau_width}};
  p.width = width;
  p.amplitude = amplitude;
  AnalyticField f = make_radial(dim, p);
  f.spec = "cone:center=" + format_point(dim, center) + ",radius=" + format_double(radius) +
           ",amplitude=" + format_double(amplitude) + ",width=" + format_double(width) +
           ",plateau=" + format_double(plateau) + ",plateau_width=" + format_double(plateau_width);
  return f;
}

namespace {

// C^2 smoothstep 10s^3 - 15s^4 + 6s^5 on [0, 1].
double smoothstep5(double s, double* ds) {
  if (s <= 0.0 || s >= 1.0) {
    if (ds) *ds = 0.0;
    return s <= 0.0 ? 0.0 : 1.0;
  }
  if (ds) *ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

}  // namespace

// Periodic surrogate for x^2: the series (arcsin y)^2 = sum_n c_n y^(2n) with
// y = sin(pi x) equals (pi x)^2 on |x| <= 1/2; truncated it is smooth, periodic,
// increasing on (0, 1/2) and matches x^2 closely away from the half period.
double periodic_square(double x, double* dsdx) {
  constexpr int kTerms = 8;
  const double y = std::sin(M_PI * x);
  const double y2 = y * y;
  double c = 1.0, pw = y2, sum = 0.0, dsum = 0.0;
  for (int n = 1; n <= kTerms; ++n) {
    sum += c * pw;
    dsum += c * 2.0 * n * pw / y2;  // d/dy of c y^(2n), divided by y
    c *= (2.0 * n) * (2.0 * n) / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
    pw *= y2;
  }
  if (dsdx) *dsdx = dsum * y * M_PI * std::cos(M_PI * x) / (M_PI * M_PI);
  return sum / (M_PI * M_PI);
}

double DomeShape::value(int dim, const Point& x, Point* grad) const {
  Point dx{0.0, 0.0, 0.0};
  const double r = periodic_radius(dim, x, center, &dx);
  const double rs = smooth_abs(r, width);
  const double drs = smooth_abs_derivative(r, width);
  double S = 0.0;
  Point dS{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) S += periodic_square(dx[a], &dS[a]);
  const double rt = std::sqrt(S);
  double dchi = 0.0;
  const double chi = smoothstep5((r - inner) / (outer - inner), &dchi);
  dchi /= (outer - inner);
  if (grad) {
    *grad = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      const double er = r > 0.0 ? dx[a] / r : 0.0;
      const double dt = S > 0.0 ? dS[a] / (2.0 * rt) : 0.0;
      (*grad)[a] = (1.0 - chi) * drs * er + chi * dt + (rt - rs) * dchi * er;
    }
  }
  return (1.0 - chi) * rs + chi * rt;
}

AnalyticField make_dome(int dim, const DomeShape& shape, double base, double slope, double amplitude) {
  if (!(shape.width >= 0.0 && shape.width < shape.inner && shape.inner < shape.outer && shape.outer <= 0.5))
    throw std::invalid_argument("dome needs 0 <= width < inner < outer <= 1/2");
  AnalyticField f;
  f.value = [=](const Point& x) { return amplitude * (base + slope * shape.value(dim, x, nullptr)); };
  f.gradient = [=](const Point& x) {
    Point g;
    shape.value(dim, x, &g);
    for (auto& v : g) v *= amplitude * slope;
    return g;
  };
  f.spec = "dome:center=" + format_point(dim, shape.center) + ",base=" + format_double(base) +
           ",slope=" + format_double(slope) + ",width=" + format_double(shape.width) +
           ",inner=" + format_double(shape.inner) + ",outer=" + format_double(shape.outer) +
           ",amplitude=" + format_double(amplitude);
  return f;
}

std::vector<Point> dome_critical_points(int dim, const Point& center) {
  std::vector<Point> pts;
  const int count = 1 << dim;
  for (int mask = 0; mask < count; ++mask) {
    Point p = center;
    for (int a = 0; a < dim; ++a)
      if (mask & (1 << a)) p[a] = std::fmod(p[a] + 0.5, 1.0);
    pts.push_back(p);
  }
  return pts;
}

AnalyticField make_bump(int dim, const std::vector<Point>& centers, double L, double scale) {
  if (centers.empty()) throw std::invalid_argument("bump needs at least one center");
  if (scale <= 0.0 || scale * kBumpOuter > 0.5) throw std::invalid_argument("bump scale must lie in (0, 4/3]");
  AnalyticField f;
  f.value = [=](const Point& x) {
    double v = 3.0 * L;
    for (const auto& c : centers) v += remark_bump_profile(periodic_radius(dim, x, c, nullptr) / scale, L) - 3.0 * L;
    return v;
  };
  f.gradient = [=](const Point& x) {
    Point g{0.0, 0.0, 0.0};
    for (const auto& c : centers) {
      Point dx{0.0, 0.0, 0.0};
      const double r = periodic_radius(dim, x, c, &dx);
      const Point gi = radial_gradient(dim, dx, r, remark_bump_derivative(r / scale, L) / scale);
      for (int a = 0; a < dim; ++a) g[a] += gi[a];
    }
    return g;
  };
  std::string cs;
  for (const auto& c : centers) {
    if (!cs.empty()) cs += ";";
    cs += format_point(dim, c);
  }
  f.spec = "bump:center=" + cs + ",L=" + format_double(L) + ",scale=" + format_double(scale);
  return f;
}

AnalyticField make_sine(int dim, double amplitude, const std::array<int, 3>& wave, double offset) {
  AnalyticField f;
  f.value = [=](const Point& x) {
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) phase += wave[a] * x[a];
    return offset + amplitude * std::sin(2.0 * M_PI * phase);
  };
  f.gradient = [=](const Point& x) {
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) phase += wave[a] * x[a];
    const double c = amplitude * 2.0 * M_PI * std::cos(2.0 * M_PI * phase);
    Point g{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) g[a] = c * wave[a];
    return g;
  };
  std::string w;
  for (int a = 0; a < dim; ++a) w += (a ? "/" : "") + std::to_string(wave[a]);
  f.spec = "sine:amplitude=" + format_double(amplitude) + ",wave=" + w + ",offset=" + format_double(offset);
  return f;
}

AnalyticField relabel(const AnalyticField& f, std::function<double(double)> F, std::function<double(double)> dF,
                      const std::string& tag) {
  AnalyticField out;
  auto value = f.value;
  auto grad = f.gradient;
  out.value = [value, F](const Point& x) { return F(value(x)); };
  out.gradient = [value, grad, dF](const Point& x) {
    Point g = grad(x);
    const double s = dF(value(x));
    for (double& v : g) v *= s;
    return g;
  };
  out.spec = tag + "(" + f.spec + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace {

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("field spec key '" + key + "': '" + text + "' is not a number");
  }
  if (used != text.size()) throw std::invalid_argument("field spec key '" + key + "': trailing characters in '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Point parse_point(int dim, const std::string& key, const std::string& text) {
  const auto parts = split(text, '/');
  Point p{0.5, 0.5, 0.5};
  if (parts.size() == 1) {
    const double v = parse_number(key, parts[0]);
    p = {v, v, v};
  } else if (static_cast<int>(parts.size()) == dim) {
    for (int a = 0; a < dim; ++a) p[a] = parse_number(key, parts[a]);
  } else {
    throw std::invalid_argument("field spec key '" + key + "': expected 1 or " + std::to_string(dim) + " coordinates");
  }
  return p;
}

class SpecArgs {
 public:
  SpecArgs(std::string kind, std::map<std::string, std::string> kv) : kind_(std::move(kind)), kv_(std::move(kv)) {}

  double number(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_number(key, it->second);
  }
  double required(const std::string& key) {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) throw std::invalid_argument("field spec '" + kind_ + "' requires key '" + key + "'");
    return parse_number(key, it->second);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) throw std::invalid_argument("field spec '" + kind_ + "': unknown key '" + k + "'");
  }

 private:
  std::string kind_;
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

}  // namespace

std::vector<std::string> field_kinds() { return {"bump", "cone", "constant", "dome", "radial", "sine"}; }

AnalyticField parse_field_spec(int dim, const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos && colon + 1 < spec.size()) {
    for (const auto& item : split(spec.substr(colon + 1), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("field spec item '" + item + "' is not key=value");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  SpecArgs args(kind, kv);
  AnalyticField f;
  if (kind == "constant") {
    f = make_constant(args.required("value"));
  } else if (kind == "cone") {
    const Point c = parse_point(dim, "center", args.text("center", "0.5"));
    f = make_cone(dim, c, args.required("radius"), args.number("amplitude", 1.0), args.number("width", 0.0),
                  args.number("plateau", 0.44), args.number("plateau_width", 0.05));
  } else if (kind == "radial") {
    RadialProfile p;
    p.center = parse_point(dim, "center", args.text("center", "0.5"));
    p.base = args.number("base", 0.0);
    p.slope = args.number("slope", 0.0);
    p.width = args.number("width", 0.0);
    p.amplitude = args.number("amplitude", 1.0);
    const std::string knots = args.text("knots", "");
    if (!knots.empty()) {
      for (const auto& k : split(knots, ';')) {
        const auto parts = split(k, '@');
        if (parts.size() != 2 && parts.size() != 3)
          throw std::invalid_argument("radial knot '" + k + "' must be r@jump or r@jump@width");
        RadialKnot knot{parse_number("knots", parts[0]), parse_number("knots", parts[1]), 0.0};
        if (parts.size() == 3) knot.width = parse_number("knots", parts[2]);
        p.knots.push_back(knot);
      }
    }
    f = make_radial(dim, p);
  } else if (kind == "dome") {
    DomeShape shape;
    shape.center = parse_point(dim, "center", args.text("center", "0.5"));
    shape.width = args.number("width", 0.0);
    shape.inner = args.number("inner", shape.inner);
    shape.outer = args.number("outer", shape.outer);
    f = make_dome(dim, shape, args.number("base", 0.0), args.number("slope", 1.0), args.number("amplitude", 1.0));
  } else if (kind == "bump") {
    std::vector<Point> centers;
    for (const auto& c : split(args.text("center", "0.5"), ';')) centers.push_back(parse_point(dim, "center", c));
    f = make_bump(dim, centers, args.required("L"), args.number("scale", 1.0));
  } else if (kind == "sine") {
    std::array<int, 3> wave{1, 0, 0};
    const auto parts = split(args.text("wave", "1"), '/');
    if (static_cast<int>(parts.size()) > dim) throw std::invalid_argument("sine wave vector longer than dimension");
    for (std::size_t a = 0; a < parts.size(); ++a) wave[a] = static_cast<int>(parse_number("wave", parts[a]));
    f = make_sine(dim, args.number("amplitude", 1.0), wave, args.number("offset", 0.0));
  } else {
    std::string names;
    for (const auto& k : field_kinds()) names += (names.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown field kind '" + kind + "' (available: " + names + ")");
  }
  args.finish();
  return f;
}

}  // namespace omcf
