#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wloja/experiment.hpp"
#include "wloja/functionals.hpp"

namespace wloja {

using json = nlohmann::ordered_json;

namespace {

/// Typed, path-aware access to a JSON object; every error names the field.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
        throw ConfigError(field(key), "unknown field");
      }
    }
  }

  Node child(const std::string& key) const { return Node(j_.at(key), field(key)); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return number(key);
  }

  double number(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "required");
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key);
  }

  long integer(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<long>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> options) const {
    const std::string value = string(key, fallback);
    if (std::find_if(options.begin(), options.end(), [&](const char* o) { return value == o; }) == options.end()) {
      std::string list;
      for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
      throw ConfigError(field(key), "'" + value + "' is not one of: " + list);
    }
    return value;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

void parse_grid(const Node& n, GridSpec& g) {
  n.allow({"x_min", "x_max", "n"});
  g.x_min = n.number("x_min", g.x_min);
  g.x_max = n.number("x_max", g.x_max);
  g.n = n.integer("n", g.n);
  require(g.x_max > g.x_min, n.field("x_max"), "must exceed x_min");
  require(g.n >= 2, n.field("n"), "must be at least 2");
}

void parse_potential(const Node& n, PotentialSpec& p) {
  n.allow({"name", "params"});
  p.name = n.choice("name", p.name, {"quadratic", "double_well", "abs", "quad_plus_cos", "constant"});
  p.params.clear();
  if (n.has("params")) {
    const Node params = n.child("params");
    for (const auto& [key, value] : n.raw("params").items()) p.params[key] = params.number(key);
  }
}

void parse_functional(const Node& n, FunctionalSpec& f) {
  n.allow({"family", "kernel", "m"});
  f.family = n.choice("family", f.family,
                      {"relative_entropy", "relative_internal", "internal_plus_potential", "potential_only"});
  f.kernel = n.choice("kernel", f.kernel, {"boltzmann", "power"});
  f.m = n.number("m", f.m);
  if (f.kernel == "power") {
    require(f.m > 0, n.field("m"), "must be positive");
    require(f.m != 1, n.field("m"), "m = 1 is the boltzmann kernel");
    if (f.family == "internal_plus_potential") require(f.m > 1, n.field("m"), "must exceed 1 with a potential");
  }
}

void parse_initial(const Node& n, InitialSpec& s) {
  n.allow({"type", "mean", "sigma", "a", "b", "atoms", "path"});
  s.type = n.choice("type", s.type, {"gaussian", "uniform", "atoms", "file", "equilibrium"});
  s.mean = n.number("mean", s.mean);
  s.sigma = n.number("sigma", s.sigma);
  s.a = n.number("a", s.a);
  s.b = n.number("b", s.b);
  s.path = n.string("path", s.path);
  if (s.type == "gaussian") require(s.sigma > 0, n.field("sigma"), "must be positive");
  if (s.type == "uniform") require(s.b > s.a, n.field("b"), "must exceed a");
  if (s.type == "file") require(!s.path.empty(), n.field("path"), "required for a file initial condition");
  if (s.type == "atoms") {
    require(n.has("atoms"), n.field("atoms"), "required for an atoms initial condition");
    const auto& atoms = n.raw("atoms");
    require(atoms.is_array() && !atoms.empty(), n.field("atoms"), "expected a nonempty array of [x, weight]");
    s.atoms.clear();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string f = n.field("atoms") + "[" + std::to_string(i) + "]";
      const auto& a = atoms[i];
      require(a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number(), f, "expected [x, weight]");
      const double x = a[0].get<double>(), w = a[1].get<double>();
      require(std::isfinite(x), f, "position must be finite");
      require(w > 0 && std::isfinite(w), f, "weight must be positive");
      s.atoms.emplace_back(x, w);
    }
  }
}

void parse_solver(const Node& n, SolverControls<double>& c) {
  n.allow({"t_end", "cfl", "snapshot_stride", "floor_ratio", "max_steps", "dt", "scheme", "check_every_step"});
  c.t_end = n.number("t_end", c.t_end);
  c.cfl = n.number("cfl", c.cfl);
  c.snapshot_stride = n.integer("snapshot_stride", c.snapshot_stride);
  c.floor_ratio = n.number("floor_ratio", c.floor_ratio);
  c.max_steps = n.integer("max_steps", c.max_steps);
  if (auto dt = n.optional_number("dt")) c.dt_max = *dt;
  const auto scheme = n.choice("scheme", "well_balanced", {"well_balanced", "kirchhoff_upwind"});
  c.scheme = scheme == "well_balanced" ? FluxScheme::well_balanced : FluxScheme::kirchhoff_upwind;
  c.check_every_step = n.boolean("check_every_step", c.check_every_step);
  require(c.t_end > 0, n.field("t_end"), "must be positive");
  require(c.cfl > 0 && c.cfl < 1, n.field("cfl"), "must lie in (0, 1)");
  require(c.snapshot_stride >= 1, n.field("snapshot_stride"), "must be at least 1");
  require(c.floor_ratio > 0 && c.floor_ratio < 1, n.field("floor_ratio"), "must lie in (0, 1)");
  require(c.max_steps >= 1, n.field("max_steps"), "must be at least 1");
  require(!c.dt_max || *c.dt_max > 0, n.field("dt"), "must be positive");
}

void parse_loja(const Node& n, LojaSpec& l) {
  n.allow({"theta", "c_g", "c_f", "r0", "holley_stroock", "tolerance"});
  l.theta = n.optional_number("theta");
  l.c_g = n.optional_number("c_g");
  l.c_f = n.optional_number("c_f");
  l.r0 = n.optional_number("r0");
  l.holley_stroock = n.boolean("holley_stroock", l.holley_stroock);
  l.tolerance = n.number("tolerance", l.tolerance);
  require(!l.theta || (*l.theta > 0 && *l.theta <= 1), n.field("theta"), "must lie in (0, 1]");
  require(!l.c_g || *l.c_g >= 0, n.field("c_g"), "must be nonnegative");
  require(!l.c_f || *l.c_f >= 0, n.field("c_f"), "must be nonnegative");
  require(l.tolerance >= 0, n.field("tolerance"), "must be nonnegative");
}

void parse_inequality(const Node& n, InequalitySpec& s) {
  n.allow({"type", "samples", "count", "means", "sigmas", "m", "tolerance"});
  s.type = n.choice("type", s.type, {"lsi_talagrand", "gn_ohta", "holley_stroock"});
  s.samples = n.choice("samples", s.samples, {"perturbed_gaussian", "gaussian", "initial"});
  s.count = n.integer("count", s.count);
  s.means = n.numbers("means");
  s.sigmas = n.numbers("sigmas");
  s.m = n.optional_number("m");
  s.tolerance = n.number("tolerance", s.tolerance);
  require(s.count >= 1, n.field("count"), "must be at least 1");
  require(!s.m || *s.m > 1, n.field("m"), "must exceed 1");
  require(s.tolerance >= 0, n.field("tolerance"), "must be nonnegative");
  if (s.samples == "gaussian") {
    require(!s.means.empty(), n.field("means"), "required for gaussian samples");
    if (s.sigmas.empty()) s.sigmas.assign(s.means.size(), 1.0);
    require(s.sigmas.size() == s.means.size(), n.field("sigmas"), "must match the length of means");
    for (double sigma : s.sigmas) require(sigma > 0, n.field("sigmas"), "entries must be positive");
  }
}

void parse_estimate(const Node& n, EstimateSpec& e) {
  n.allow({"source", "t"});
  e.source = n.choice("source", e.source, {"dirac_path", "trajectory"});
  if (n.has("t")) e.t = n.numbers("t");
  for (double t : e.t) require(t > 0 && t < 1, n.field("t"), "entries must lie in (0, 1)");
}

}  // namespace

std::vector<json> expand_sweep(const json& j, const std::string& source) {
  (void)source;
  const Node n(j, "");
  std::vector<json> children;
  if (n.has("configs")) {
    const auto& list = j.at("configs");
    require(list.is_array(), "configs", "expected an array of configs");
    for (const auto& c : list) children.push_back(c);
  } else {
    require(n.has("base"), "base", "a sweep needs 'configs' or 'base' with 'vary'");
    require(n.has("vary"), "vary", "required with 'base'");
    const Node vary = n.child("vary");
    vary.allow({"path", "values"});
    const std::string path = vary.string("path", "");
    require(!path.empty(), "vary.path", "required");
    const auto& values = j.at("vary").contains("values") ? j.at("vary").at("values") : json::array();
    require(values.is_array(), "vary.values", "expected an array");
    std::string pointer = "/" + path;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    for (std::size_t i = 0; i < values.size(); ++i) {
      json child = j.at("base");
      require(child.is_object(), "base", "expected an object");
      try {
        child[json::json_pointer(pointer)] = values[i];
      } catch (const json::exception& e) {
        throw ConfigError("vary.path", e.what());
      }
      const std::string base_name = child.value("name", std::string("experiment"));
      child["name"] = base_name + "-" + path + "=" + values[i].dump();
      children.push_back(std::move(child));
    }
  }
  require(!children.empty(), "configs", "empty sweep");
  return children;
}

ExperimentConfig parse_config(const json& j, const std::string& source) {
  const Node n(j, "");
  n.allow({"kind", "name", "description", "grid", "potential", "functional", "initial", "solver", "inequality_checks",
           "loja", "inequality", "estimate", "seed", "output", "plot", "snapshots", "configs", "base", "vary"});
  ExperimentConfig c;
  c.source = source;
  c.kind = n.choice("kind", c.kind, {"flow", "inequality", "estimate", "sweep"});
  c.name = n.string("name", c.name);
  c.output = n.string("output", c.output);
  if (c.kind == "sweep") {
    c.sweep = expand_sweep(j, source);
    return c;
  }
  for (const char* key : {"configs", "base", "vary"}) {
    require(!n.has(key), key, std::string("only valid for kind 'sweep'"));
  }
  if (n.has("grid")) parse_grid(n.child("grid"), c.grid);
  if (n.has("potential")) parse_potential(n.child("potential"), c.potential);
  if (n.has("functional")) parse_functional(n.child("functional"), c.functional);
  if (n.has("initial")) parse_initial(n.child("initial"), c.initial);
  if (n.has("solver")) parse_solver(n.child("solver"), c.solver);
  if (n.has("loja")) parse_loja(n.child("loja"), c.loja);
  if (n.has("inequality")) parse_inequality(n.child("inequality"), c.inequality);
  if (n.has("estimate")) parse_estimate(n.child("estimate"), c.estimate);
  c.inequality_checks = n.boolean("inequality_checks", c.inequality_checks);
  c.plot = n.boolean("plot", c.plot);
  c.write_snapshots = n.boolean("snapshots", c.write_snapshots);
  const long seed = n.integer("seed", 0);
  require(seed >= 0, "seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);

  // The potential window follows the grid unless given explicitly.
  auto& params = c.potential.params;
  if (!params.count("x_min")) params["x_min"] = c.grid.x_min;
  if (!params.count("x_max")) params["x_max"] = c.grid.x_max;
  try {
    (void)builtin::by_name<double>(c.potential.name, params);
  } catch (const ConstructionError& e) {
    throw ConfigError("potential", e.what());
  }
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    long line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(column), what);
  }
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path), path); }

}  // namespace wloja
