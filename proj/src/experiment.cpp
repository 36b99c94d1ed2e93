#include "wloja/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "wloja/functionals.hpp"
#include "wloja/io.hpp"
#include "wloja/loja.hpp"
#include "wloja/samples.hpp"
#include "wloja/svg.hpp"

namespace wloja {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string padded(std::size_t i, int width) {
  std::ostringstream os;
  os << std::setw(width) << std::setfill('0') << i;
  return os.str();
}

/// Output directory, summary and check bookkeeping for one experiment.
class RunContext {
 public:
  RunContext(const ExperimentConfig& config, fs::path dir) : config_(config), dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& relative) {
    const fs::path path = dir_ / relative;
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    files_.push_back(relative);
    return out;
  }

  void check(const std::string& name, bool pass, double value, double threshold) {
    checks_.push_back({{"name", name}, {"pass", pass}, {"value", number_or_null(value)},
                       {"threshold", number_or_null(threshold)}});
    all_pass_ = all_pass_ && pass;
  }

  void estimate(const std::string& key, double value) { estimates_[key] = number_or_null(value); }
  void estimate(const std::string& key, const std::string& value) { estimates_[key] = value; }
  void note(const std::string& text) { notes_.push_back(text); }

  const fs::path& dir() const { return dir_; }
  bool all_pass() const { return all_pass_; }

  json summary(const std::string& status, int exit_code, const std::string& error) const {
    json s;
    s["name"] = config_.name;
    s["kind"] = config_.kind;
    s["status"] = status;
    s["exit_code"] = exit_code;
    if (!error.empty()) s["error"] = error;
    s["seed"] = config_.seed;
    s["checks"] = checks_;
    s["estimates"] = estimates_;
    s["notes"] = notes_;
    s["files"] = files_;
    return s;
  }

 private:
  const ExperimentConfig& config_;
  fs::path dir_;
  json checks_ = json::array();
  json estimates_ = json::object();
  json notes_ = json::array();
  std::vector<std::string> files_;
  bool all_pass_ = true;
};

Grid1D<double> make_grid(const ExperimentConfig& c) { return Grid1D<double>(c.grid.x_min, c.grid.x_max, c.grid.n); }

Potential<double> make_potential(const ExperimentConfig& c) {
  return builtin::by_name<double>(c.potential.name, c.potential.params);
}

EntropyKernel<double> make_kernel(const FunctionalSpec& f) {
  return f.kernel == "power" ? EntropyKernel<double>::power(f.m) : EntropyKernel<double>::boltzmann();
}

EnergyFunctional<double> make_functional(const ExperimentConfig& c, const Potential<double>& V,
                                         const Grid1D<double>& grid) {
  const auto& f = c.functional;
  if (f.family == "relative_entropy") return EnergyFunctional<double>::relative_entropy(V, grid);
  if (f.family == "relative_internal") {
    return EnergyFunctional<double>::relative_internal(make_kernel(f), gibbs_profile(V, grid).profile, V.modulus());
  }
  if (f.family == "internal_plus_potential") {
    return EnergyFunctional<double>::internal_plus_potential(make_kernel(f), V, grid);
  }
  return EnergyFunctional<double>::potential_only(V);
}

double flow_exponent(const ExperimentConfig& c) {
  const auto& f = c.functional;
  if (f.family == "potential_only") throw ConfigError("functional.family", "grid flows need an entropy term");
  if (f.kernel == "boltzmann") return 1;
  if (f.family == "relative_internal") {
    throw ConfigError("functional.kernel", "grid flows of relative power energies are not supported");
  }
  return f.m;
}

bool atomic_initial(const ExperimentConfig& c) {
  if (c.initial.type == "atoms") return true;
  if (c.initial.type == "file") return std::holds_alternative<AtomicMeasure<double>>(read_measure_csv(c.initial.path));
  return false;
}

GridMeasure<double> make_initial_grid(const ExperimentConfig& c, const Grid1D<double>& grid,
                                      const EnergyFunctional<double>& J) {
  const auto& s = c.initial;
  if (s.type == "gaussian") return gaussian(grid, s.mean, s.sigma);
  if (s.type == "uniform") return uniform(grid, s.a, s.b);
  if (s.type == "equilibrium") {
    if (!J.equilibrium()) throw ConfigError("initial.type", "the functional has no grid equilibrium");
    return *J.equilibrium();
  }
  if (s.type == "file") {
    auto m = read_measure_csv(s.path);
    auto* g = std::get_if<GridMeasure<double>>(&m);
    if (!g) throw ConfigError("initial.path", "expected a grid measure (x,density)");
    if (g->grid().n() != grid.n() || std::abs(g->grid().x_min() - grid.x_min()) > 1e-9 * (1 + std::abs(grid.x_min())) ||
        std::abs(g->grid().x_max() - grid.x_max()) > 1e-9 * (1 + std::abs(grid.x_max()))) {
      throw ConfigError("initial.path", "measure grid does not match the configured grid");
    }
    return GridMeasure<double>(grid, g->density());
  }
  throw ConfigError("initial.type", "'" + s.type + "' is not a grid initial condition");
}

AtomicMeasure<double> make_initial_atoms(const ExperimentConfig& c) {
  if (c.initial.type == "file") return std::get<AtomicMeasure<double>>(read_measure_csv(c.initial.path));
  std::vector<AtomicMeasure<double>::Atom> atoms;
  for (const auto& [x, w] : c.initial.atoms) atoms.push_back({x, w});
  return AtomicMeasure<double>::normalized(std::move(atoms));
}

/// Exponent and c_g for bound checks; c_g comes from the config, from c_f by
/// conversion, or from the Holley-Stroock rate of the potential.
std::optional<LojaEstimate> configured_estimate(const ExperimentConfig& c, const Potential<double>& V, double J_hat,
                                                RunContext& ctx) {
  const auto& l = c.loja;
  if (!l.theta) return std::nullopt;
  LojaEstimate est;
  est.theta = *l.theta;
  est.J_hat = J_hat;
  if (l.r0) est.r0 = *l.r0;
  if (l.holley_stroock) {
    if (!V.decomposition()) throw ConfigError("loja.holley_stroock", "potential has no decomposition");
    const double o = osc(V);
    const double rate = holley_stroock_rate(V.decomposition()->K, o);
    ctx.estimate("osc", o);
    ctx.estimate("holley_stroock_c_g_squared", rate);
    est.c_g = std::sqrt(rate);
  } else if (l.c_g) {
    est.c_g = *l.c_g;
  } else if (l.c_f) {
    est.c_g = convert_constants(Conversion::functional_to_gradient, est.theta, *l.c_f);
  } else {
    throw ConfigError("loja", "theta needs c_g, c_f or holley_stroock");
  }
  est.c_f = l.c_f ? *l.c_f : convert_constants(Conversion::gradient_to_functional, est.theta, est.c_g);
  return est;
}

template <typename State>
void write_trajectory(RunContext& ctx, const ExperimentConfig& c, const Trajectory<State>& traj) {
  {
    auto out = ctx.open("trajectory.csv");
    write_csv(out, traj);
  }
  if (c.write_snapshots) {
    const int width = std::max<int>(4, static_cast<int>(std::to_string(traj.states.size()).size()));
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      auto out = ctx.open("snapshots/" + padded(k, width) + ".csv");
      write_csv(out, traj.states[k]);
    }
  }
  ctx.estimate("J0", traj.energies.front());
  ctx.estimate("J_final", traj.energies.back());
  ctx.estimate("J_hat", traj.J_hat);
  ctx.estimate("t_final", traj.times.back());
  ctx.estimate("w2_final", traj.distances.back());
  ctx.estimate("steps", static_cast<double>(traj.steps));
  if (traj.stop_time) ctx.estimate("stop_time", *traj.stop_time);
  ctx.check("completed", !traj.truncated, static_cast<double>(traj.steps), static_cast<double>(c.solver.max_steps));
}

template <typename State>
void fit_trajectory(RunContext& ctx, const Trajectory<State>& traj) {
  try {
    const auto g = fit_exponent(slope_samples(traj), traj.J_hat);
    ctx.estimate("theta_gradient_fit", g.theta);
    ctx.estimate("c_g_fit", g.c_g);
    ctx.estimate("gradient_fit_residual", g.residual);
  } catch (const PreconditionError& e) {
    ctx.note(std::string("gradient exponent not fitted: ") + e.what());
  }
  try {
    const auto f = fit_exponent(distance_samples(traj), traj.J_hat);
    ctx.estimate("theta_functional_fit", f.theta);
    ctx.estimate("c_f_fit", f.c_f);
    ctx.estimate("functional_fit_residual", f.residual);
  } catch (const PreconditionError& e) {
    ctx.note(std::string("functional exponent not fitted: ") + e.what());
  }
}

template <typename State>
void check_bounds(RunContext& ctx, const ExperimentConfig& c, const Trajectory<State>& traj, const LojaEstimate& est) {
  const auto report = verify_bounds(traj, est, c.loja.tolerance);
  auto out = ctx.open("bounds.csv");
  write_csv(out, report);
  ctx.estimate("regime", to_string(report.regime));
  ctx.estimate("theta", est.theta);
  ctx.estimate("c_g", est.c_g);
  ctx.estimate("c_f", est.c_f);
  if (report.stop_time) ctx.estimate("bound_stop_time", *report.stop_time);
  ctx.check("rate_bounds", report.pass(), static_cast<double>(report.violations.size()), 0);
}

void write_pair(RunContext& ctx, const InequalityPair& pair, const std::string& prefix) {
  {
    auto out = ctx.open(prefix + "gradient.csv");
    write_csv(out, pair.gradient);
  }
  {
    auto out = ctx.open(prefix + "functional.csv");
    write_csv(out, pair.functional);
  }
  for (const auto& note : pair.gradient.notes) ctx.note(note);
  ctx.estimate(pair.gradient.name + "_min_margin", pair.gradient.min_margin);
  ctx.estimate(pair.functional.name + "_min_margin", pair.functional.min_margin);
  ctx.check(pair.gradient.name, pair.gradient.pass, pair.gradient.min_margin, -pair.gradient.tolerance);
  ctx.check(pair.functional.name, pair.functional.pass, pair.functional.min_margin, -pair.functional.tolerance);
}

void run_grid_flow(RunContext& ctx, const ExperimentConfig& c) {
  const auto grid = make_grid(c);
  const auto V = make_potential(c);
  const double m = flow_exponent(c);
  const auto J = make_functional(c, V, grid);
  const auto rho0 = make_initial_grid(c, grid, J);
  if (J.equilibrium()) {
    auto out = ctx.open("equilibrium.csv");
    write_csv(out, *J.equilibrium());
  }
  const auto traj = solve(rho0, J, V, m, c.solver);
  write_trajectory(ctx, c, traj);
  ctx.check("mass_conservation", traj.max_mass_error <= 1e-10, traj.max_mass_error, 1e-10);
  ctx.check("positivity", traj.min_density >= 0, traj.min_density, 0);
  ctx.check("energy_monotone", traj.energy_monotone(), traj.max_energy_increase, traj.energy_slack());
  fit_trajectory(ctx, traj);
  try {
    ctx.estimate("decay_rate_fit", fit_exponential_rate(std::vector<double>(traj.times.begin(), traj.times.end()),
                                                        std::vector<double>(traj.energies.begin(), traj.energies.end()),
                                                        traj.J_hat));
  } catch (const PreconditionError&) {
  }
  if (auto est = configured_estimate(c, V, traj.J_hat, ctx)) check_bounds(ctx, c, traj, *est);

  if (c.inequality_checks) {
    const double tol = c.inequality.tolerance;
    if (c.functional.family == "internal_plus_potential" && c.functional.kernel == "power") {
      write_pair(ctx, gn_ohta_report(traj.states, V, m, tol), "inequality_");
    } else if (c.functional.kernel == "boltzmann" && c.functional.family != "potential_only") {
      write_pair(ctx, lsi_talagrand_report(traj.states, V, tol), "inequality_");
    } else {
      ctx.note("inequality checks are not defined for this functional");
    }
  }
}

void run_atomic_flow(RunContext& ctx, const ExperimentConfig& c) {
  if (c.functional.family != "potential_only") {
    throw ConfigError("functional.family", "atomic initial conditions need the potential_only family");
  }
  const auto V = make_potential(c);
  const auto mu0 = make_initial_atoms(c);
  const auto traj = atomic_flow(mu0, V, c.solver);
  write_trajectory(ctx, c, traj);
  ctx.check("energy_monotone", traj.energy_monotone(), traj.max_energy_increase, traj.energy_slack());
  fit_trajectory(ctx, traj);
  if (auto est = configured_estimate(c, V, traj.J_hat, ctx)) check_bounds(ctx, c, traj, *est);
}

void run_flow(RunContext& ctx, const ExperimentConfig& c) {
  if (atomic_initial(c)) {
    run_atomic_flow(ctx, c);
  } else {
    run_grid_flow(ctx, c);
  }
}

std::vector<GridMeasure<double>> inequality_samples(const ExperimentConfig& c, const Grid1D<double>& grid,
                                                    const EnergyFunctional<double>& J) {
  const auto& s = c.inequality;
  if (s.samples == "perturbed_gaussian") return perturbed_gaussians(grid, static_cast<std::size_t>(s.count), c.seed);
  std::vector<GridMeasure<double>> out;
  if (s.samples == "gaussian") {
    for (std::size_t i = 0; i < s.means.size(); ++i) out.push_back(gaussian(grid, s.means[i], s.sigmas[i]));
    return out;
  }
  out.push_back(make_initial_grid(c, grid, J));
  return out;
}

void run_holley_stroock(RunContext& ctx, const ExperimentConfig& c) {
  const auto grid = make_grid(c);
  const auto V = make_potential(c);
  if (!V.decomposition()) throw ConfigError("potential", "'" + V.name() + "' has no bounded decomposition");
  const double o = osc(V);
  const double rate = holley_stroock_rate(V.decomposition()->K, o);
  ctx.estimate("osc", o);
  ctx.estimate("c_g_squared", rate);
  const auto J = EnergyFunctional<double>::relative_entropy(V, grid);
  const auto rho0 = make_initial_grid(c, grid, J);
  const auto traj = solve(rho0, J, V, 1.0, c.solver);
  write_trajectory(ctx, c, traj);
  ctx.check("mass_conservation", traj.max_mass_error <= 1e-10, traj.max_mass_error, 1e-10);
  ctx.check("positivity", traj.min_density >= 0, traj.min_density, 0);
  ctx.check("energy_monotone", traj.energy_monotone(), traj.max_energy_increase, traj.energy_slack());

  const double tol = c.loja.tolerance;
  const double gap0 = traj.energies.front() - traj.J_hat;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double bound = gap0 * std::exp(-rate * traj.times[k]) * (1 + tol);
    worst = std::max(worst, (traj.energies[k] - traj.J_hat) - bound);
  }
  ctx.check("holley_stroock_decay", worst <= 0, worst, 0);

  LojaEstimate est;
  est.theta = 0.5;
  est.c_g = std::sqrt(rate);
  est.c_f = convert_constants(Conversion::gradient_to_functional, 0.5, est.c_g);
  est.J_hat = traj.J_hat;
  const auto report = verify_bounds(traj, est, tol);
  auto out = ctx.open("bounds.csv");
  write_csv(out, report);
  try {
    ctx.estimate("decay_rate_fit", fit_exponential_rate(std::vector<double>(traj.times.begin(), traj.times.end()),
                                                        std::vector<double>(traj.energies.begin(), traj.energies.end()),
                                                        traj.J_hat));
  } catch (const PreconditionError&) {
  }
}

void run_inequality(RunContext& ctx, const ExperimentConfig& c) {
  const auto& s = c.inequality;
  if (s.type == "holley_stroock") return run_holley_stroock(ctx, c);
  const auto grid = make_grid(c);
  const auto V = make_potential(c);
  InequalityPair pair;
  if (s.type == "lsi_talagrand") {
    const auto J = EnergyFunctional<double>::relative_entropy(V, grid);
    pair = lsi_talagrand_report(inequality_samples(c, grid, J), V, s.tolerance);
  } else {
    const double m = s.m ? *s.m : c.functional.m;
    if (!(m > 1)) throw ConfigError("inequality.m", "gn_ohta needs m > 1");
    const auto J = EnergyFunctional<double>::internal_plus_potential(EntropyKernel<double>::power(m), V, grid);
    pair = gn_ohta_report(inequality_samples(c, grid, J), V, m, s.tolerance);
  }
  write_pair(ctx, pair, "");
  {
    auto out = ctx.open("samples.csv");
    out << "sample,fisher,gap,w2_squared\n";
    std::size_t k = 0;
    for (const auto& row : pair.gradient.rows) {
      out << row.sample << ',' << format_real(pair.fisher[k]) << ',' << format_real(pair.gap[k]) << ','
          << format_real(pair.w2_squared[k]) << '\n';
      ++k;
    }
  }

  // Gradient form with (theta, c_g) and functional form with the converted c_f.
  if (auto est = configured_estimate(c, V, 0, ctx)) {
    std::vector<SlopeSample> grad;
    std::vector<DistanceSample> func;
    for (std::size_t k = 0; k < pair.gap.size(); ++k) {
      grad.push_back({pair.gap[k], std::sqrt(pair.fisher[k])});
      func.push_back({pair.gap[k], std::sqrt(pair.w2_squared[k])});
    }
    try {
      const auto g = gradient_margin(grad, *est, s.tolerance);
      const auto f = functional_margin(func, *est, s.tolerance);
      {
        auto out = ctx.open("loja_gradient.csv");
        write_csv(out, g);
      }
      {
        auto out = ctx.open("loja_functional.csv");
        write_csv(out, f);
      }
      ctx.estimate("theta", est->theta);
      ctx.estimate("c_g", est->c_g);
      ctx.estimate("c_f", est->c_f);
      ctx.estimate("gradient_min_margin", g.min_margin);
      ctx.estimate("functional_min_margin", f.min_margin);
      ctx.check("loja_gradient", g.pass, g.min_margin, -s.tolerance);
      ctx.check("loja_functional", f.pass, f.min_margin, -s.tolerance);
      ctx.check("equivalence", !g.pass || f.pass, f.min_margin, -s.tolerance);
    } catch (const PreconditionError& e) {
      ctx.note(std::string("Lojasiewicz margins skipped: ") + e.what());
    }
  }
}

void run_estimate(RunContext& ctx, const ExperimentConfig& c) {
  const auto& e = c.estimate;
  const auto V = make_potential(c);
  std::optional<LojaEstimate> fitted;
  if (e.source == "dirac_path") {
    // rho_t = (1 - t) delta_z + t delta_{z + 1} for a minimizer z.
    const auto J = EnergyFunctional<double>::potential_only(V);
    const double z = V.argmin().project(0.0);
    std::vector<DistanceSample> func;
    std::vector<SlopeSample> grad;
    auto out = ctx.open("samples.csv");
    out << "t,J,w2,slope\n";
    for (double t : e.t) {
      const auto rho = AtomicMeasure<double>({{z, 1 - t}, {z + 1, t}});
      const double gap = energy(J, rho).value - J.minimum();
      const double d = w2_to_argmin(rho, V.argmin());
      const double s = slope(J, rho);
      out << format_real(t) << ',' << format_real(gap) << ',' << format_real(d) << ',' << format_real(s) << '\n';
      func.push_back({gap, d});
      grad.push_back({gap, s});
    }
    const auto f = fit_exponent(func, 0);
    ctx.estimate("theta_functional_fit", f.theta);
    ctx.estimate("c_f_fit", f.c_f);
    ctx.estimate("functional_fit_residual", f.residual);
    try {
      const auto g = fit_exponent(grad, 0);
      ctx.estimate("theta_gradient_fit", g.theta);
      ctx.estimate("c_g_fit", g.c_g);
    } catch (const PreconditionError& err) {
      ctx.note(std::string("gradient exponent not fitted: ") + err.what());
    }
    ctx.estimate("lifted_exponent_formula", lifted_exponent(1.0, 1));
    ctx.note("lifted_exponent_formula is the pointwise-to-measure formula at theta = 1, d = 1; "
             "theta_functional_fit is the exponent realised along the path");
    fitted = f;
  } else {
    if (atomic_initial(c)) {
      run_atomic_flow(ctx, c);
    } else {
      run_grid_flow(ctx, c);
    }
    return;
  }
  if (c.loja.theta && fitted) {
    const double err = std::abs(fitted->theta - *c.loja.theta);
    ctx.check("theta", err <= c.loja.tolerance, err, c.loja.tolerance);
  }
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig c = config;
  if (options.seed) c.seed = *options.seed;
  RunResult result;
  std::string status = "passed", error;
  std::optional<RunContext> ctx;
  try {
    ctx.emplace(c, options.output_dir);
    if (c.kind == "flow") {
      run_flow(*ctx, c);
    } else if (c.kind == "inequality") {
      run_inequality(*ctx, c);
    } else if (c.kind == "estimate") {
      run_estimate(*ctx, c);
    } else {
      throw ConfigError("kind", "sweeps run through run_sweep");
    }
    if (!ctx->all_pass()) {
      status = "check_failed";
      result.exit_code = exit_check_failed;
    }
  } catch (const NumericalError& e) {
    status = "numerical_failure";
    error = e.what();
    result.exit_code = exit_numerical_failure;
  } catch (const Error& e) {
    status = "config_error";
    error = e.what();
    result.exit_code = exit_config_error;
  } catch (const std::exception& e) {
    status = "numerical_failure";
    error = e.what();
    result.exit_code = exit_numerical_failure;
  }
  if (ctx) {
    result.summary = ctx->summary(status, result.exit_code, error);
    try {
      std::ofstream out(ctx->dir() / "summary.json");
      out << result.summary.dump(2) << '\n';
      out.close();
      if (c.plot && fs::exists(ctx->dir() / "trajectory.csv")) plot_run(ctx->dir());
    } catch (const std::exception& e) {
      result.summary["error"] = e.what();
    }
  } else {
    result.summary = {{"name", c.name}, {"kind", c.kind}, {"status", status}, {"exit_code", result.exit_code},
                      {"error", error}};
  }
  return result;
}

namespace {

std::string sanitize(const std::string& label) {
  std::string out;
  for (char ch : label) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' || ch == '=';
    out += ok ? ch : '_';
  }
  return out.empty() ? "entry" : out;
}

void write_sweep_csv(std::ostream& os, const json& entries) {
  std::vector<std::string> keys;
  for (const auto& e : entries) {
    if (!e.contains("estimates")) continue;
    for (const auto& [key, value] : e["estimates"].items()) {
      if (value.is_number() && std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
  }
  os << "index,name,status,exit_code,checks_passed,checks_total";
  for (const auto& k : keys) os << ',' << k;
  os << '\n';
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    long passed = 0, total = 0;
    if (e.contains("checks")) {
      for (const auto& ch : e["checks"]) {
        ++total;
        if (ch["pass"].get<bool>()) ++passed;
      }
    }
    std::string name = e.value("name", std::string());
    std::replace(name.begin(), name.end(), ',', ';');
    os << i << ',' << name << ',' << e.value("status", std::string()) << ',' << e.value("exit_code", 0) << ','
       << passed << ',' << total;
    for (const auto& k : keys) {
      os << ',';
      if (e.contains("estimates") && e["estimates"].contains(k) && e["estimates"][k].is_number()) {
        os << format_real(e["estimates"][k].get<double>());
      }
    }
    os << '\n';
  }
}

}  // namespace

RunResult run_sweep(const std::vector<SweepChild>& children, const RunOptions& options) {
  RunResult merged;
  if (children.empty()) {
    merged.exit_code = exit_config_error;
    merged.summary = {{"kind", "sweep"}, {"status", "config_error"}, {"error", "empty sweep"}};
    return merged;
  }
  fs::create_directories(options.output_dir);
  const int width = std::max<int>(3, static_cast<int>(std::to_string(children.size()).size()));
  std::vector<RunResult> results(children.size());

  auto job = [&](std::size_t i) {
    const auto& child = children[i];
    RunOptions opts = options;
    std::string label = child.label;
    auto fail = [&](const std::string& what) {
      results[i].exit_code = exit_config_error;
      results[i].summary = {{"name", label}, {"status", "config_error"}, {"exit_code", exit_config_error},
                            {"error", what}};
    };
    if (!child.config) return fail(child.load_error);
    try {
      auto config = parse_config(*child.config, child.label);
      if (config.kind == "sweep") return fail("nested sweeps are not supported");
      if (label.empty()) label = config.name;
      opts.output_dir = options.output_dir / (padded(i, width) + "-" + sanitize(label));
      results[i] = run(config, opts);
    } catch (const std::exception& e) {
      fail(e.what());
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(children.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < children.size(); i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();

  json entries = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    json e = results[i].summary;
    e["index"] = i;
    entries.push_back(e);
    merged.exit_code = std::max(merged.exit_code, results[i].exit_code);
  }
  merged.summary = {{"kind", "sweep"},
                    {"status", merged.exit_code == exit_ok ? "passed" : "failed"},
                    {"exit_code", merged.exit_code},
                    {"entries", entries}};
  std::ofstream(options.output_dir / "summary.json") << merged.summary.dump(2) << '\n';
  std::ofstream csv(options.output_dir / "summary.csv");
  write_sweep_csv(csv, entries);
  return merged;
}

std::vector<SweepChild> sweep_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError(dir.string(), "not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SweepChild> children;
  for (const auto& path : files) {
    SweepChild child;
    child.label = path.stem().string();
    try {
      child.config = read_json_file(path.string());
    } catch (const Error& e) {
      child.load_error = e.what();
    }
    children.push_back(std::move(child));
  }
  return children;
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open");
  std::string line;
  std::getline(in, line);
  header.clear();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::vector<double>> columns(header.size());
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t k = 0; k < header.size() && std::getline(ss, cell, ','); ++k) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
      }
      columns[k].push_back(v);
    }
  }
  return columns;
}

std::vector<double> column(const std::vector<std::vector<double>>& cols, const std::vector<std::string>& header,
                           const std::string& name) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return cols[k];
  }
  throw ConfigError(name, "column missing");
}

}  // namespace

void plot_run(const fs::path& run_dir) {
  std::vector<std::string> header;
  const auto traj = read_numeric_csv(run_dir / "trajectory.csv", header);
  const auto t = column(traj, header, "t");
  const auto J = column(traj, header, "J");
  const auto d = column(traj, header, "w2");

  double J_hat = *std::min_element(J.begin(), J.end());
  if (fs::exists(run_dir / "summary.json")) {
    std::ifstream in(run_dir / "summary.json");
    try {
      const auto s = json::parse(in);
      if (s.contains("estimates") && s["estimates"].contains("J_hat") && s["estimates"]["J_hat"].is_number()) {
        J_hat = s["estimates"]["J_hat"].get<double>();
      }
    } catch (const json::exception&) {
    }
  }
  svg::Series gap{"J - J_hat", t, {}, "#1f77b4", false};
  for (double v : J) gap.y.push_back(v - J_hat);
  svg::Series dist{"W2 to limit", t, d, "#2ca02c", false};
  std::vector<svg::Series> series{gap, dist};
  if (fs::exists(run_dir / "bounds.csv")) {
    std::vector<std::string> bh;
    const auto b = read_numeric_csv(run_dir / "bounds.csv", bh);
    svg::Series jb{"J bound", column(b, bh, "t"), {}, "#d62728", true};
    for (double v : column(b, bh, "J_bound")) jb.y.push_back(v - J_hat);
    series.push_back(jb);
    series.push_back({"W2 bound", column(b, bh, "t"), column(b, bh, "w2_bound"), "#ff7f0e", true});
  }
  svg::PlotOptions opts;
  opts.title = run_dir.filename().string();
  opts.y_label = "value";
  opts.log_y = true;
  std::ofstream out(run_dir / "plot.svg");
  svg::line_plot(out, series, opts);
}

}  // namespace wloja
