#include "omcf/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace omcf {

ConfigParseError::ConfigParseError(const std::string& source, int line, int column, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

ConfigValidationError::ConfigValidationError(const std::string& field, const std::string& what)
    : std::runtime_error(field + ": " + what), field_(field) {}

std::string to_string(SnapshotPolicy p) {
  switch (p) {
    case SnapshotPolicy::none: return "none";
    case SnapshotPolicy::final: return "final";
    case SnapshotPolicy::all: return "all";
  }
  return "final";
}

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int key_col = 0;
  int value_col = 0;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  void text(const std::string& key, std::string& out) const {
    if (auto it = entries_.find(key); it != entries_.end()) out = it->second.value;
  }

  void number(const std::string& key, double& out) const {
    if (auto it = entries_.find(key); it != entries_.end()) out = parse_double(it->second, it->second.value, 0);
  }

  void integer(const std::string& key, int& out) const {
    if (auto it = entries_.find(key); it != entries_.end()) out = parse_int(it->second, it->second.value, 0);
  }

  void seed(const std::string& key, std::uint64_t& out) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    const std::string& v = it->second.value;
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
      fail(it->second, 0, "expected a non-negative integer, got '" + v + "'");
    out = x;
  }

  void flag(const std::string& key, bool& out) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    if (it->second.value == "true") out = true;
    else if (it->second.value == "false") out = false;
    else fail(it->second, 0, "expected true or false, got '" + it->second.value + "'");
  }

  template <class T, class Parse>
  void list(const std::string& key, std::vector<T>& out, Parse parse) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    out.clear();
    const std::string& v = it->second.value;
    std::size_t start = 0;
    while (start <= v.size() && !v.empty()) {
      std::size_t end = v.find(',', start);
      if (end == std::string::npos) end = v.size();
      std::size_t a = start, b = end;
      while (a < b && std::isspace(static_cast<unsigned char>(v[a]))) ++a;
      while (b > a && std::isspace(static_cast<unsigned char>(v[b - 1]))) --b;
      out.push_back(parse(it->second, v.substr(a, b - a), static_cast<int>(a)));
      start = end + 1;
    }
  }

  [[noreturn]] void fail(const Entry& e, int offset, const std::string& what) const {
    throw ConfigParseError(source_, e.line, e.value_col + offset, what);
  }

  double parse_double(const Entry& e, const std::string& v, int offset) const {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) fail(e, offset, "expected a number, got '" + v + "'");
    return x;
  }

  int parse_int(const Entry& e, const std::string& v, int offset) const {
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
      fail(e, offset, "expected an integer, got '" + v + "'");
    return x;
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& keys() {
  static const std::vector<std::string> k = {
      "scenario.name",        "scenario.amplitude",    "grid.dim",          "grid.n",
      "solver.eps",           "solver.t_end",          "solver.cfl_safety", "solver.output_every",
      "data.lower",           "data.upper",            "data.initial",      "data.L",
      "data.ell",             "study.eps",             "study.n",           "checks.energy",
      "checks.energy_tol",    "checks.ledger",         "checks.ledger_tol", "checks.l1",
      "checks.l1_tol",        "checks.bounds",         "checks.distributional", "checks.dist_tol",
      "checks.dissipation",   "checks.per_tol",        "checks.level",      "checks.motion",
      "checks.motion_tol",    "checks.motion_fields",  "checks.motion_two_sided", "checks.sphere",
      "checks.sphere_tol",    "checks.trend",          "output.dir",        "output.snapshots",
      "seed",                 "threads"};
  return k;
}

bool valid_key_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_' ||
         c == '.' || c == 'L';
}

std::map<std::string, Entry> tokenize(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string body = raw.substr(0, raw.find('#'));
    std::size_t a = 0;
    while (a < body.size() && std::isspace(static_cast<unsigned char>(body[a]))) ++a;
    if (a == body.size()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw ConfigParseError(source, line, static_cast<int>(body.size()) + 1, "expected '='");
    std::size_t kend = eq;
    while (kend > a && std::isspace(static_cast<unsigned char>(body[kend - 1]))) --kend;
    if (kend == a) throw ConfigParseError(source, line, static_cast<int>(a) + 1, "missing key before '='");
    const std::string key = body.substr(a, kend - a);
    for (std::size_t i = 0; i < key.size(); ++i)
      if (!valid_key_char(key[i]))
        throw ConfigParseError(source, line, static_cast<int>(a + i) + 1,
                               std::string("invalid character '") + key[i] + "' in key");
    const auto& known = keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigParseError(source, line, static_cast<int>(a) + 1, "unknown key '" + key + "'");
    if (out.count(key))
      throw ConfigParseError(source, line, static_cast<int>(a) + 1,
                             "duplicate key '" + key + "' (first set on line " + std::to_string(out[key].line) + ")");
    std::size_t v0 = eq + 1;
    while (v0 < body.size() && std::isspace(static_cast<unsigned char>(body[v0]))) ++v0;
    std::size_t v1 = body.size();
    while (v1 > v0 && std::isspace(static_cast<unsigned char>(body[v1 - 1]))) --v1;
    out[key] = Entry{body.substr(v0, v1 - v0), line, static_cast<int>(a) + 1, static_cast<int>(v0) + 1};
  }
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigValidationError(field, what);
}

}  // namespace

std::vector<std::string> config_keys() { return keys(); }

Scenario RunConfig::scenario_at(int n_override, double eps_override) const {
  ScenarioSpec spec;
  if (is_custom()) {
    spec.name = "custom";
    spec.dim = dim;
  } else {
    spec = catalog_spec(scenario, dim);
  }
  spec.n = n_override;
  spec.eps_list = {eps_override};
  spec.t_end = t_end;
  spec.cfl_safety = cfl_safety;
  spec.output_every = output_every;
  spec.amplitude = amplitude;
  spec.seed = seed;
  if (!is_custom()) return build_scenario(spec);

  spec.validate();
  Scenario sc;
  sc.spec = spec;
  auto field = [&](const std::string& key, const std::string& text) {
    try {
      return parse_field_spec(dim, text);
    } catch (const std::invalid_argument& e) {
      throw ConfigValidationError(key, e.what());
    }
  };
  sc.lower = field("data.lower", lower);
  sc.upper = field("data.upper", upper);
  sc.initial = field("data.initial", initial);
  sc.L = L;
  sc.ell = ell;
  return sc;
}

void RunConfig::validate() const {
  const auto names = scenario_names();
  if (!is_custom() && std::find(names.begin(), names.end(), scenario) == names.end()) {
    std::string list;
    for (const auto& k : names) list += k + ", ";
    throw ConfigValidationError("scenario.name", "unknown scenario '" + scenario + "' (available: " + list + "custom)");
  }
  require(dim >= 1 && dim <= 3, "grid.dim", "must be 1, 2 or 3");
  require(n >= 8, "grid.n", "must be at least 8");
  require(eps > 0.0, "solver.eps", "must be > 0");
  require(t_end > 0.0, "solver.t_end", "must be > 0");
  require(cfl_safety > 0.0 && cfl_safety <= 1.0, "solver.cfl_safety", "must lie in (0, 1]");
  require(output_every >= 0, "solver.output_every", "must be >= 0");
  require(amplitude > 0.0, "scenario.amplitude", "must be > 0");
  if (is_custom()) {
    require(!lower.empty(), "data.lower", "required for a custom scenario");
    require(!upper.empty(), "data.upper", "required for a custom scenario");
    require(!initial.empty(), "data.initial", "required for a custom scenario");
    require(L > 0.0, "data.L", "must be > 0");
    require(ell > 0.0, "data.ell", "must be > 0");
  } else {
    require(lower.empty(), "data.lower", "only valid with scenario.name = custom");
    require(upper.empty(), "data.upper", "only valid with scenario.name = custom");
    require(initial.empty(), "data.initial", "only valid with scenario.name = custom");
  }
  for (std::size_t i = 0; i < study_eps.size(); ++i) {
    require(study_eps[i] > 0.0, "study.eps", "entries must be > 0");
    require(i == 0 || study_eps[i] < study_eps[i - 1], "study.eps", "must be strictly decreasing");
  }
  for (int m : study_n) require(m >= 8, "study.n", "entries must be at least 8");
  const CheckSettings& c = checks;
  require(c.energy_tol > 0.0, "checks.energy_tol", "must be > 0");
  require(c.ledger_tol > 0.0, "checks.ledger_tol", "must be > 0");
  require(c.l1_tol > 0.0, "checks.l1_tol", "must be > 0");
  require(c.dist_tol > 0.0, "checks.dist_tol", "must be > 0");
  require(c.per_tol > 0.0, "checks.per_tol", "must be > 0");
  require(c.motion_tol > 0.0, "checks.motion_tol", "must be > 0");
  require(c.motion_fields >= 1, "checks.motion_fields", "must be >= 1");
  require(c.sphere_tol > 0.0, "checks.sphere_tol", "must be > 0");
  require(!c.sphere || scenario == "sphere", "checks.sphere", "needs scenario.name = sphere");
  require(!c.sphere || dim >= 2, "checks.sphere", "needs grid.dim >= 2");
  require(!output_dir.empty(), "output.dir", "must not be empty");
  require(threads >= 0, "threads", "must be >= 0");
  if (is_custom()) (void)scenario_built();  // surfaces field spec errors with the key name
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source, tokenize(text, source));
  RunConfig c;
  r.text("scenario.name", c.scenario);
  r.integer("grid.dim", c.dim);
  if (!c.is_custom()) {
    try {
      const ScenarioSpec s = catalog_spec(c.scenario, c.dim);
      c.n = s.n;
      c.eps = s.eps_list.front();
      c.t_end = s.t_end;
      c.cfl_safety = s.cfl_safety;
      c.output_every = s.output_every;
      c.amplitude = s.amplitude;
      c.seed = s.seed;
      if (s.eps_list.size() > 1) c.study_eps = s.eps_list;
    } catch (const std::invalid_argument& e) {
      std::string what = e.what();
      const bool unknown = what.rfind("unknown scenario", 0) == 0;
      if (unknown) what.insert(what.size() - 1, ", custom");
      throw ConfigValidationError(unknown ? "scenario.name" : "grid.dim", what);
    }
  }
  r.number("scenario.amplitude", c.amplitude);
  r.integer("grid.n", c.n);
  r.number("solver.eps", c.eps);
  r.number("solver.t_end", c.t_end);
  r.number("solver.cfl_safety", c.cfl_safety);
  r.integer("solver.output_every", c.output_every);
  r.text("data.lower", c.lower);
  r.text("data.upper", c.upper);
  r.text("data.initial", c.initial);
  r.number("data.L", c.L);
  r.number("data.ell", c.ell);
  r.list("study.eps", c.study_eps, [&](const Entry& e, const std::string& v, int off) {
    return r.parse_double(e, v, off);
  });
  r.list("study.n", c.study_n, [&](const Entry& e, const std::string& v, int off) { return r.parse_int(e, v, off); });
  CheckSettings& k = c.checks;
  r.flag("checks.energy", k.energy);
  r.number("checks.energy_tol", k.energy_tol);
  r.flag("checks.ledger", k.ledger);
  r.number("checks.ledger_tol", k.ledger_tol);
  r.flag("checks.l1", k.l1);
  r.number("checks.l1_tol", k.l1_tol);
  r.flag("checks.bounds", k.bounds);
  r.flag("checks.distributional", k.distributional);
  r.number("checks.dist_tol", k.dist_tol);
  r.flag("checks.dissipation", k.dissipation);
  r.number("checks.per_tol", k.per_tol);
  r.number("checks.level", k.level);
  r.flag("checks.motion", k.motion);
  r.number("checks.motion_tol", k.motion_tol);
  r.integer("checks.motion_fields", k.motion_fields);
  r.flag("checks.motion_two_sided", k.motion_two_sided);
  r.flag("checks.sphere", k.sphere);
  r.number("checks.sphere_tol", k.sphere_tol);
  r.flag("checks.trend", k.trend);
  r.text("output.dir", c.output_dir);
  if (r.has("output.snapshots")) {
    std::string p;
    r.text("output.snapshots", p);
    if (p == "none") c.snapshots = SnapshotPolicy::none;
    else if (p == "final") c.snapshots = SnapshotPolicy::final;
    else if (p == "all") c.snapshots = SnapshotPolicy::all;
    else throw ConfigValidationError("output.snapshots", "expected none, final or all, got '" + p + "'");
  }
  r.seed("seed", c.seed);
  r.integer("threads", c.threads);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigValidationError("config", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), path);
  try {
    const Scenario sc = c.scenario_built();
    const WellPreparedReport rep = audit_well_prepared(*sc.obstacles(), sc.initial_field());
    if (!rep.pass) {
      std::string msg = "well-preparedness audit failed";
      for (const auto& note : rep.notes) msg += "; " + note;
      throw ConfigValidationError(c.is_custom() ? "data" : "scenario.name", msg);
    }
  } catch (const WellPreparedError& e) {
    throw ConfigValidationError(c.is_custom() ? "data" : "scenario.name", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigValidationError(c.is_custom() ? "data" : "scenario.name", e.what());
  }
  return c;
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  kv("scenario.name", c.scenario);
  kv("scenario.amplitude", fmt(c.amplitude));
  kv("grid.dim", std::to_string(c.dim));
  kv("grid.n", std::to_string(c.n));
  kv("solver.eps", fmt(c.eps));
  kv("solver.t_end", fmt(c.t_end));
  kv("solver.cfl_safety", fmt(c.cfl_safety));
  kv("solver.output_every", std::to_string(c.output_every));
  if (c.is_custom()) {
    kv("data.lower", c.lower);
    kv("data.upper", c.upper);
    kv("data.initial", c.initial);
    kv("data.L", fmt(c.L));
    kv("data.ell", fmt(c.ell));
  }
  std::string se, sn;
  for (double e : c.study_eps) se += (se.empty() ? "" : ", ") + fmt(e);
  for (int m : c.study_n) sn += (sn.empty() ? "" : ", ") + std::to_string(m);
  kv("study.eps", se);
  kv("study.n", sn);
  const CheckSettings& k = c.checks;
  kv("checks.energy", b(k.energy));
  kv("checks.energy_tol", fmt(k.energy_tol));
  kv("checks.ledger", b(k.ledger));
  kv("checks.ledger_tol", fmt(k.ledger_tol));
  kv("checks.l1", b(k.l1));
  kv("checks.l1_tol", fmt(k.l1_tol));
  kv("checks.bounds", b(k.bounds));
  kv("checks.distributional", b(k.distributional));
  kv("checks.dist_tol", fmt(k.dist_tol));
  kv("checks.dissipation", b(k.dissipation));
  kv("checks.per_tol", fmt(k.per_tol));
  kv("checks.level", fmt(k.level));
  kv("checks.motion", b(k.motion));
  kv("checks.motion_tol", fmt(k.motion_tol));
  kv("checks.motion_fields", std::to_string(k.motion_fields));
  kv("checks.motion_two_sided", b(k.motion_two_sided));
  kv("checks.sphere", b(k.sphere));
  kv("checks.sphere_tol", fmt(k.sphere_tol));
  kv("checks.trend", b(k.trend));
  kv("output.dir", c.output_dir);
  kv("output.snapshots", to_string(c.snapshots));
  kv("seed", std::to_string(c.seed));
  kv("threads", std::to_string(c.threads));
  return os.str();
}

}  // namespace omcf
