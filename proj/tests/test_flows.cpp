#include <doctest.h>

#include "oracles.hpp"
#include "wloja/flows.hpp"

using namespace wloja;

namespace {

const Grid1D<double> wide(-8, 8, 800);

/// Ornstein-Uhlenbeck run from N(1, 1); shared by several cases.
const Trajectory<GridMeasure<double>>& ou_run() {
  static const auto traj = [] {
    auto V = builtin::quadratic<double>(1.0);
    auto J = EnergyFunctional<double>::relative_entropy(V, wide);
    SolverControls<double> c;
    c.t_end = 2;
    c.snapshot_stride = 125;
    return solve(gaussian(wide, 1.0, 1.0), J, c);
  }();
  return traj;
}

/// Advances rho to time t with the operator's own stable steps.
ArrayX<double> advance(const FvOperator<double>& op, ArrayX<double> rho, double t) {
  double now = 0;
  while (now < t) {
    const double dt = std::min(op.stable_dt(rho), t - now);
    rho = op.step(rho, dt);
    now += dt;
  }
  return rho;
}

}  // namespace

TEST_CASE("controls validation") {
  SolverControls<double> c;
  CHECK_NOTHROW(c.validate());
  c.cfl = 1.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.cfl = 0.4;
  c.t_end = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.t_end = 1;
  c.snapshot_stride = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.snapshot_stride = 1;
  c.dt_max = -1.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("fv_step keeps the gibbs profile") {
  auto V = builtin::quadratic_plus_cosine<double>(1.0, 1.0);
  auto gibbs = gibbs_profile(V, wide).profile;
  FvOperator<double> op(wide, V, 1.0);
  for (double dt : {op.stable_dt(gibbs.density()), 1e-7}) {
    auto next = fv_step(gibbs, V, 1.0, dt);
    CHECK((next.density() - gibbs.density()).abs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("fv_step ornstein-uhlenbeck mean") {
  auto V = builtin::quadratic<double>(1.0);
  FvOperator<double> op(wide, V, 1.0);
  auto rho = advance(op, gaussian(wide, 1.0, 1.0).density(), 1.0);
  CHECK(std::abs(moment(GridMeasure<double>(wide, rho), 1) - std::exp(-1.0)) <= 2e-2);
}

TEST_CASE("fv_step porous medium conserves mass") {
  auto V = builtin::quadratic<double>(1.0);
  FvOperator<double> op(wide, V, 2.0);
  ArrayX<double> rho = uniform(wide, -1.0, 1.0).density();
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const double before = rho.sum() * wide.dx();
    rho = op.step(rho, op.stable_dt(rho));
    worst = std::max(worst, std::abs(rho.sum() * wide.dx() - before));
    CHECK((rho >= 0).all());
  }
  CHECK(std::abs(rho.sum() * wide.dx() - 1) <= 1e-10);
  CHECK(worst <= 1e-12);
}

TEST_CASE("fv_step rejects steps beyond the stability bound") {
  auto V = builtin::quadratic<double>(1.0);
  FvOperator<double> op(wide, V, 1.0);
  auto rho = gaussian(wide, 1.0, 0.5).density();
  try {
    op.step(rho, 1.0, 17);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 17);
    CHECK(std::string(e.what()).find("step 17") != std::string::npos);
  }
  CHECK_THROWS_AS(FvOperator<double>(wide, V, 0.5), PreconditionError);
}

TEST_CASE("solve on ornstein-uhlenbeck matches the closed form") {
  const auto& traj = ou_run();
  REQUIRE(traj.size() > 10);
  CHECK(traj.times.back() == 2.0);
  CHECK_FALSE(traj.truncated);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    CHECK(std::abs(traj.energies[k] / (0.5 * std::exp(-2 * t)) - 1) <= 0.03);
    CHECK(std::abs(traj.distances[k] / std::exp(-t) - 1) <= 0.03);
  }
}

TEST_CASE("flow invariants") {
  const auto& traj = ou_run();
  CHECK(traj.max_step_mass_change <= 1e-12);
  CHECK(traj.max_mass_error <= 1e-10);
  CHECK(traj.min_density >= 0);
  CHECK(traj.energy_monotone());
  for (const auto& s : traj.states) CHECK(std::abs(s.mass() - 1) <= 1e-10);
  // Energy dissipation identity at snapshot resolution.
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double s2 = traj.slopes[k] * traj.slopes[k];
    const double rate = -traj.dissipation[k];
    CHECK(std::abs(rate + s2) <= 0.05 * s2 + 1e-6);
  }
}

TEST_CASE("solve from the equilibrium stays put") {
  auto V = builtin::quadratic<double>(1.0);
  auto J = EnergyFunctional<double>::relative_entropy(V, wide);
  SolverControls<double> c;
  c.t_end = 1;
  auto traj = solve(*J.equilibrium(), J, c);
  for (double e : traj.energies) CHECK(e <= 1e-10);
  REQUIRE(traj.stop_time);
  CHECK(*traj.stop_time == 0.0);
}

TEST_CASE("equilibria are stationary over unit time") {
  auto V = builtin::quadratic<double>(1.0);
  auto gibbs = gibbs_profile(V, wide).profile;
  FvOperator<double> linear(wide, V, 1.0);
  CHECK(w2(gibbs, GridMeasure<double>(wide, advance(linear, gibbs.density(), 1.0))) < 1e-6);

  auto bar = barenblatt_profile(V, 2.0, wide).profile;
  FvOperator<double> porous(wide, V, 2.0);
  CHECK(w2(bar, GridMeasure<double>(wide, advance(porous, bar.density(), 1.0))) < 1e-6);
}

TEST_CASE("porous medium flow") {
  auto V = builtin::quadratic<double>(1.0);
  auto J = EnergyFunctional<double>::internal_plus_potential(EntropyKernel<double>::power(2), V, wide);
  SolverControls<double> c;
  c.t_end = 1;
  c.snapshot_stride = 500;
  auto traj = solve(uniform(wide, -1.0, 1.0), J, c);
  CHECK(traj.energy_monotone());
  CHECK(traj.max_mass_error <= 1e-10);
  CHECK(traj.min_density >= 0);
  CHECK(traj.energies.back() < traj.energies.front());
  CHECK(traj.distances.back() < traj.distances.front());
}

TEST_CASE("kirchhoff upwind scheme") {
  auto V = builtin::quadratic<double>(1.0);
  auto J = EnergyFunctional<double>::relative_entropy(V, wide);
  SolverControls<double> c;
  c.t_end = 0.5;
  c.snapshot_stride = 200;
  c.scheme = FluxScheme::kirchhoff_upwind;
  auto traj = solve(gaussian(wide, 1.0, 1.0), J, V, 1.0, c);
  CHECK(traj.max_mass_error <= 1e-10);
  CHECK(traj.min_density >= 0);
  CHECK(std::abs(traj.energies.back() / (0.5 * std::exp(-1.0)) - 1) <= 0.03);
}

TEST_CASE("truncated runs are flagged") {
  auto V = builtin::quadratic<double>(1.0);
  auto J = EnergyFunctional<double>::relative_entropy(V, wide);
  SolverControls<double> c;
  c.max_steps = 10;
  auto traj = solve(gaussian(wide, 1.0, 1.0), J, c);
  CHECK(traj.truncated);
  CHECK(traj.steps == 10);

  auto bar = barenblatt_profile(V, 2.0, wide);
  auto compact = EnergyFunctional<double>::relative_internal(EntropyKernel<double>::power(2), bar.profile);
  CHECK_THROWS_AS(solve(gaussian(wide, 0.0, 1.0), compact, V, 2.0, c), PreconditionError);
}

TEST_CASE("atomic flow examples") {
  SolverControls<double> c;
  c.t_end = 1.5;
  c.dt_max = 1e-4;
  c.snapshot_stride = 100;
  auto abs = atomic_flow(AtomicMeasure<double>::dirac(0.7), builtin::absolute<double>(), c);
  REQUIRE(abs.stop_time);
  CHECK(std::abs(*abs.stop_time - 0.7) <= 1e-6);
  for (std::size_t k = 0; k < abs.size(); ++k) {
    CHECK(std::abs(abs.energies[k] - std::max(0.0, 0.7 - abs.times[k])) <= 1e-8);
    if (abs.times[k] > 0.7) CHECK(abs.states[k].position(0) == 0.0);
  }

  c.t_end = 1;
  auto quad = atomic_flow(AtomicMeasure<double>::dirac(1.0), builtin::quadratic<double>(1.0), c);
  CHECK(quad.times.back() == doctest::Approx(1.0));
  CHECK(std::abs(quad.states.back().position(0) - std::exp(-1.0)) <= 1e-6);
  CHECK_FALSE(quad.stop_time);

  auto still = atomic_flow(AtomicMeasure<double>({{-1 / std::sqrt(2.0), 0.5}, {1 / std::sqrt(2.0), 0.5}}),
                           builtin::double_well<double>(1.0, 1.0), c);
  for (double s : still.slopes) CHECK(s == 0.0);
  for (double e : still.energies) CHECK(e == doctest::Approx(-0.25));
}

TEST_CASE("atomic flow approaches the nearest well") {
  SolverControls<double> c;
  c.t_end = 5;
  c.dt_max = 1e-3;
  AtomicMeasure<double> mu({{-2.0, 0.25}, {-0.2, 0.25}, {0.3, 0.25}, {1.5, 0.25}});
  auto traj = atomic_flow(mu, builtin::double_well<double>(1.0, 1.0), c);
  const double z = 1 / std::sqrt(2.0);
  const auto& last = traj.states.back();
  REQUIRE(last.size() == 4);
  CHECK(std::abs(last.position(0) + z) <= 1e-6);
  CHECK(std::abs(last.position(1) + z) <= 1e-6);
  CHECK(std::abs(last.position(2) - z) <= 1e-6);
  CHECK(std::abs(last.position(3) - z) <= 1e-6);
  // Smooth wells are approached exponentially, never reached.
  CHECK_FALSE(traj.stop_time);
  CHECK(traj.energy_monotone());
  CHECK(traj.energies.back() == doctest::Approx(-0.25));
}

TEST_CASE("atomic flow on a flat potential") {
  SolverControls<double> c;
  c.t_end = 1;
  AtomicMeasure<double> mu({{-1.0, 0.5}, {2.0, 0.5}});
  auto traj = atomic_flow(mu, builtin::constant<double>(0.0), c);
  for (double s : traj.slopes) CHECK(s == 0.0);
  CHECK(traj.states.back().position(1) == 2.0);
}

TEST_CASE("trajectory csv") {
  SolverControls<double> c;
  c.t_end = 0.5;
  c.dt_max = 0.25;
  c.snapshot_stride = 1;
  auto traj = atomic_flow(AtomicMeasure<double>::dirac(1.0), builtin::absolute<double>(), c);
  REQUIRE(traj.size() == 3);
  CHECK(traj.dissipation[0] == doctest::Approx(1.0));
  CHECK(std::isnan(traj.dissipation.back()));
}
