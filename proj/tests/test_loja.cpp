#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "wloja/flows.hpp"
#include "wloja/io.hpp"
#include "wloja/loja.hpp"
#include "wloja/samples.hpp"

using namespace wloja;

namespace {

const Grid1D<double> wide(-8, 8, 800);

std::vector<double> dirac_times() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

LojaEstimate estimate(double theta, double c_g, double c_f = 0) {
  LojaEstimate est;
  est.theta = theta;
  est.c_g = c_g;
  est.c_f = c_f;
  return est;
}

}  // namespace

TEST_CASE("gradient margins") {
  auto J = EnergyFunctional<double>::relative_entropy(builtin::quadratic<double>(1.0), wide);
  std::vector<SlopeSample> shifts;
  for (double mu : {-1.0, -0.5, 0.25, 0.5, 1.0}) {
    auto rho = gaussian(wide, mu, 1.0);
    shifts.push_back({energy(J, rho).value, slope(J, rho)});
  }
  auto report = gradient_margin(shifts, estimate(0.5, std::sqrt(2.0)));
  CHECK(report.pass);
  CHECK(std::abs(report.min_margin) <= 1e-3);
  CHECK(report.rows.size() == 5);

  auto exact = gradient_margin({{0.5, std::sqrt(2.0) * std::sqrt(0.5)}}, estimate(0.5, std::sqrt(2.0)));
  CHECK(std::abs(exact.min_margin) <= 1e-15);

  auto zero = gradient_margin(shifts, estimate(0.5, 0.0));
  CHECK(zero.pass);
  for (const auto& row : zero.rows) CHECK(row.margin == shifts[static_cast<std::size_t>(row.sample)].slope);

  auto capped = estimate(0.5, 1.0);
  capped.r0 = 0.2;
  auto filtered = gradient_margin(shifts, capped);
  CHECK(filtered.skipped == 2);
  CHECK(filtered.rows.size() == 3);
  CHECK_FALSE(filtered.notes.empty());

  CHECK_THROWS_AS(gradient_margin({{0.0, 1.0}}, estimate(0.5, 1.0)), PreconditionError);
  CHECK_THROWS_AS(gradient_margin({{1.0, 1.0}}, estimate(1.5, 1.0)), PreconditionError);
}

TEST_CASE("functional margins") {
  auto J = EnergyFunctional<double>::relative_entropy(builtin::quadratic<double>(1.0), wide);
  std::vector<DistanceSample> shifts;
  for (double mu : {-1.0, -0.5, 0.25, 0.5, 1.0}) {
    auto rho = gaussian(wide, mu, 1.0);
    shifts.push_back({energy(J, rho).value, w2(rho, *J.equilibrium())});
  }
  auto report = functional_margin(shifts, estimate(0.5, 0.0, 0.5));
  CHECK(report.pass);
  CHECK(std::abs(report.min_margin) <= 1e-3);

  auto at_zero = functional_margin({{0.3, 0.0}, {0.7, 0.0}}, estimate(0.5, 0.0, 2.0));
  CHECK(at_zero.rows[0].margin == 0.3);
  CHECK(at_zero.rows[1].margin == 0.7);

  std::vector<DistanceSample> path;
  for (double t : dirac_times()) path.push_back({t, std::sqrt(t)});
  auto dirac = functional_margin(path, estimate(0.5, 0.0, 1.0));
  for (const auto& row : dirac.rows) CHECK(std::abs(row.margin) <= 1e-15);
}

TEST_CASE("constant conversion") {
  CHECK(convert_constants(Conversion::gradient_to_functional, 0.5, std::sqrt(2.0)) == doctest::Approx(0.5));
  CHECK(convert_constants(Conversion::functional_to_gradient, 1.0, 5.0) == 5.0);
  CHECK(convert_constants(Conversion::gradient_to_functional, 1.0, 1.0) == 1.0);
  for (double c : {0.0, 0.3, 1.0, 2.7, 1e3}) {
    const double back = convert_constants(Conversion::functional_to_gradient, 1.0,
                                          convert_constants(Conversion::gradient_to_functional, 1.0, c));
    CHECK(back == c);
  }
  // Generic theta: c_f^theta = theta c_g, so the round trip rescales by theta.
  const double cf = convert_constants(Conversion::gradient_to_functional, 0.25, 3.0);
  CHECK(convert_constants(Conversion::functional_to_gradient, 0.25, cf) == doctest::Approx(0.75));
  CHECK_THROWS_AS(convert_constants(Conversion::gradient_to_functional, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(convert_constants(Conversion::gradient_to_functional, 0.5, -1.0), PreconditionError);
}

TEST_CASE("exponent fits") {
  std::vector<DistanceSample> path;
  for (double t : dirac_times()) path.push_back({t, std::sqrt(t)});
  auto dirac = fit_exponent(path);
  CHECK(std::abs(dirac.theta - 0.5) <= 1e-10);
  CHECK(std::abs(dirac.c_f - 1) <= 1e-10);
  CHECK(dirac.samples == 9);

  std::vector<SlopeSample> ou;
  for (int k = 0; k <= 20; ++k) {
    const double t = 0.1 * k;
    ou.push_back({0.5 * std::exp(-2 * t), std::exp(-t)});
  }
  auto fitted = fit_exponent(ou);
  CHECK(std::abs(fitted.theta - 0.5) <= 1e-6);
  CHECK(std::abs(fitted.c_g - std::sqrt(2.0)) <= 1e-6);
  CHECK(std::abs(fitted.c_f - 0.5) <= 1e-6);

  std::vector<SlopeSample> atom;
  for (int k = 0; k < 7; ++k) atom.push_back({0.7 - 0.1 * k, 1.0});
  auto sharp = fit_exponent(atom);
  CHECK(std::abs(sharp.theta - 1) <= 1e-10);

  CHECK_THROWS_AS(fit_exponent(std::vector<SlopeSample>{{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}}), PreconditionError);
  CHECK_THROWS_AS(fit_exponent(std::vector<SlopeSample>{{1, 1}, {2, 2}, {3, 3}, {4, 4}}), PreconditionError);
  CHECK_THROWS_AS(fit_exponent(std::vector<DistanceSample>{{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}}),
                  PreconditionError);
}

TEST_CASE("exponent fits recover synthetic power laws") {
  for (double theta : {0.2, 0.5, 0.75, 1.0}) {
    for (double c : {0.3, 1.0, 4.0}) {
      std::vector<SlopeSample> grad;
      std::vector<DistanceSample> func;
      for (int k = 0; k < 12; ++k) {
        const double gap = std::pow(10.0, -4 + 0.4 * k);
        grad.push_back({gap, c * std::pow(gap, 1 - theta)});
        func.push_back({gap, std::pow(gap / c, theta)});
      }
      auto g = fit_exponent(grad);
      CHECK(std::abs(g.theta - theta) <= 1e-10);
      CHECK(std::abs(g.c_g - c) <= 1e-10 * c);
      auto f = fit_exponent(func);
      CHECK(std::abs(f.theta - theta) <= 1e-10);
      CHECK(std::abs(f.c_f - c) <= 1e-10 * c);
    }
  }
}

TEST_CASE("exponential rate fit") {
  std::vector<double> t, e;
  for (int k = 0; k < 30; ++k) {
    t.push_back(0.1 * k);
    e.push_back(1.0 + 3 * std::exp(-1.7 * t.back()));
  }
  CHECK(fit_exponential_rate(t, e, 1.0) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(fit_exponential_rate(t, e, 1.0, 1.0, 2.0) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("rate bounds") {
  auto ii = rate_bound(0.5, std::sqrt(2.0), 1.0, 0.0, 1.0);
  CHECK(ii.regime == Regime::exponential);
  CHECK(std::abs(ii.gap_bound - std::exp(-2.0)) <= 1e-12);
  CHECK(std::abs(ii.w2_bound - std::sqrt(2.0) * std::exp(-1.0)) <= 1e-12);
  CHECK(std::abs(ii.w2_bound - 0.520260) <= 1e-6);
  CHECK_FALSE(ii.stop_time);

  auto iii = rate_bound(1.0, 1.0, 0.7, 0.0, 0.2);
  REQUIRE(iii.stop_time);
  CHECK(*iii.stop_time == doctest::Approx(0.7));
  CHECK(iii.gap_bound == doctest::Approx(0.5));
  auto after = rate_bound(1.0, 1.0, 0.7, 0.0, 0.9);
  CHECK(after.gap_bound == 0.0);
  CHECK(after.w2_bound == 0.0);

  auto i = rate_bound(0.25, 1.0, 1.0, 0.0, 0.0);
  CHECK(i.regime == Regime::polynomial);
  CHECK(i.gap_bound == doctest::Approx(1.0));
  // (1 + c^2 (1 - 2 theta) t J0^{1-2theta})^{-1/(1-2theta)} at theta = 1/4.
  CHECK(rate_bound(0.25, 1.0, 1.0, 0.0, 2.0).gap_bound == doctest::Approx(0.25));

  auto shifted = rate_bound(0.5, 1.0, 3.0, 2.0, 0.0);
  CHECK(shifted.gap_bound == doctest::Approx(1.0));

  CHECK(to_string(Regime::polynomial) == "i");
  CHECK(to_string(Regime::exponential) == "ii");
  CHECK(to_string(Regime::finite_time) == "iii");
  CHECK_THROWS_AS(rate_bound(0.5, 0.0, 1.0, 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(rate_bound(0.0, 1.0, 1.0, 0.0, 1.0), PreconditionError);
}

TEST_CASE("rate bounds are continuous across regimes") {
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    for (double c : {0.5, 1.0, std::sqrt(2.0)}) {
      for (double J0 : {0.1, 1.0, 3.0}) {
        const auto ii = rate_bound(0.5, c, J0, 0.0, t);
        const auto below = rate_bound(0.5 - 1e-8, c, J0, 0.0, t);
        const auto above = rate_bound(0.5 + 1e-8, c, J0, 0.0, t);
        CHECK(std::abs(below.gap_bound - ii.gap_bound) <= 1e-6);
        CHECK(std::abs(below.w2_bound - ii.w2_bound) <= 1e-6);
        CHECK(std::abs(above.gap_bound - ii.gap_bound) <= 1e-6);
      }
    }
  }
}

TEST_CASE("verify bounds on closed-form and simulated decay") {
  std::vector<double> t, J, d;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.05 * k);
    J.push_back(0.5 * std::exp(-2 * t.back()));
    d.push_back(std::exp(-t.back()));
  }
  auto exact = verify_bounds(t, J, d, estimate(0.5, std::sqrt(2.0)), 1e-12);
  CHECK(exact.pass());
  CHECK(exact.regime == Regime::exponential);
  for (const auto& row : exact.rows) {
    CHECK(std::abs(row.J_bound - row.J) <= 1e-15);
    CHECK(std::abs(row.w2_bound - row.w2) <= 1e-14);
  }
  auto tight = verify_bounds(t, J, d, estimate(0.5, 2.0), 1e-3);
  CHECK_FALSE(tight.pass());

  auto V = builtin::quadratic<double>(1.0);
  SolverControls<double> c;
  c.t_end = 2;
  c.snapshot_stride = 125;
  auto traj = solve(gaussian(wide, 1.0, 1.0), EnergyFunctional<double>::relative_entropy(V, wide), c);
  auto ou = verify_bounds(traj, estimate(0.5, std::sqrt(2.0)), 0.05);
  CHECK(ou.violations.empty());

  SolverControls<double> ca;
  ca.t_end = 1.5;
  ca.dt_max = 1e-4;
  auto atom = atomic_flow(AtomicMeasure<double>::dirac(0.7), builtin::absolute<double>(), ca);
  auto sharp = verify_bounds(atom, estimate(1.0, 1.0), 1e-8);
  CHECK(sharp.pass());
  REQUIRE(sharp.stop_time);
  CHECK(*sharp.stop_time == doctest::Approx(0.7));
  for (const auto& row : sharp.rows) CHECK(std::abs(row.J - std::max(0.0, 0.7 - row.t)) <= 1e-8);

  CHECK_THROWS_AS(verify_bounds(t, J, d, estimate(0.5, 0.0), 0.05), PreconditionError);
}

TEST_CASE("log-sobolev and talagrand") {
  auto V = builtin::quadratic<double>(1.0);
  auto shift = lsi_talagrand_report(gaussian(wide, 0.5, 1.0), V);
  REQUIRE(shift.fisher.size() == 1);
  CHECK(std::abs(shift.fisher[0] - 0.25) <= 1e-3);
  CHECK(std::abs(shift.gap[0] - 0.125) <= 1e-3);
  CHECK(std::abs(shift.w2_squared[0] - 0.25) <= 1e-3);
  CHECK(std::abs(shift.gradient.min_margin) <= 1e-3);
  CHECK(std::abs(shift.functional.min_margin) <= 1e-3);
  CHECK(shift.gradient.name == "lsi");
  CHECK(shift.functional.name == "talagrand");

  auto eq = lsi_talagrand_report(gibbs_profile(V, wide).profile, V);
  CHECK(eq.fisher[0] <= 1e-12);
  CHECK(std::abs(eq.gap[0]) <= 1e-10);
  CHECK(eq.w2_squared[0] <= 1e-12);

  // Variance 4 needs a wider window than [-8, 8] to keep truncation below 1e-3.
  Grid1D<double> wider(-16, 16, 1600);
  auto wide_sample = lsi_talagrand_report(gaussian(wider, 0.0, 2.0), V);
  CHECK(std::abs(wide_sample.fisher[0] - 2.25) <= 1e-3);
  CHECK(std::abs(wide_sample.gap[0] - 0.806853) <= 1e-3);
  CHECK(wide_sample.gradient.min_margin > 0.5);

  CHECK_THROWS_AS(lsi_talagrand_report(gaussian(wide, 0.0, 1.0), builtin::absolute<double>()), PreconditionError);
}

TEST_CASE("gagliardo-nirenberg and ohta-takatsu") {
  auto V = builtin::quadratic<double>(1.0);
  auto bar = barenblatt_profile(V, 2.0, wide).profile;
  auto eq = gn_ohta_report(bar, V, 2.0);
  CHECK(std::abs(eq.gap[0]) <= 1e-12);
  CHECK(eq.fisher[0] <= 1e-6);
  CHECK(eq.w2_squared[0] <= 1e-12);

  auto moved = gn_ohta_report(shift_cells(bar, 15), V, 2.0);
  CHECK(std::abs(std::sqrt(moved.w2_squared[0]) - 0.3) <= 1e-3);
  CHECK(moved.gradient.min_margin >= -1e-3);
  CHECK(moved.functional.min_margin >= -1e-3);

  auto normal = gn_ohta_report(gaussian(wide, 0.0, 1.0), V, 2.0);
  CHECK(normal.gradient.pass);
  CHECK(normal.functional.pass);
  CHECK(normal.gradient.name == "gagliardo_nirenberg");

  for (double m : {1.5, 3.0}) {
    auto r = gn_ohta_report(gaussian(wide, 0.4, 0.8), V, m);
    CHECK(r.gradient.min_margin >= -1e-3);
    CHECK(r.functional.min_margin >= -1e-3);
  }
  CHECK_THROWS_AS(gn_ohta_report(bar, V, 1.0), PreconditionError);
}

TEST_CASE("gradient inequality implies the functional one on perturbed gaussians") {
  auto V = builtin::quadratic<double>(1.0);
  auto samples = perturbed_gaussians(wide, 100, 7);
  auto pair = lsi_talagrand_report(samples, V);
  CHECK(pair.gradient.pass);
  CHECK(pair.functional.pass);

  std::vector<SlopeSample> grad;
  std::vector<DistanceSample> func;
  for (std::size_t i = 0; i < pair.gap.size(); ++i) {
    grad.push_back({pair.gap[i], std::sqrt(pair.fisher[i])});
    func.push_back({pair.gap[i], std::sqrt(pair.w2_squared[i])});
  }
  auto g = gradient_margin(grad, estimate(0.5, std::sqrt(2.0)));
  const double c_f = convert_constants(Conversion::gradient_to_functional, 0.5, std::sqrt(2.0));
  auto f = functional_margin(func, estimate(0.5, 0.0, c_f));
  CHECK(g.pass);
  if (g.pass) CHECK(f.pass);
}

TEST_CASE("perturbed gaussian samples are reproducible") {
  auto a = perturbed_gaussians(wide, 5, 7);
  auto b = perturbed_gaussians(wide, 5, 7);
  auto c = perturbed_gaussians(wide, 5, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].density() == b[i].density()).all());
    CHECK(std::abs(a[i].mass() - 1) <= 1e-12);
  }
  CHECK((a[0].density() != c[0].density()).any());
  std::mt19937_64 rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double u = unit_uniform(rng);
    CHECK(u >= 0);
    CHECK(u < 1);
  }
}

TEST_CASE("lifted exponent") {
  CHECK(lifted_exponent(1.0, 1) == 0.75);
  CHECK(lifted_exponent(0.4, 3) == 0.4);
  for (int d = 1; d <= 6; ++d) CHECK(lifted_exponent(0.5, d) == 0.5);
  for (int d = 1; d <= 6; ++d) {
    for (int k = 1; k <= 50; ++k) {
      const double theta = 0.5 + 0.01 * k;
      CHECK(lifted_exponent(theta, d) < theta);
    }
  }
  CHECK_THROWS_AS(lifted_exponent(1.2, 1), PreconditionError);
  CHECK_THROWS_AS(lifted_exponent(0.7, 0), PreconditionError);
}

TEST_CASE("lifting the gradient inequality") {
  auto abs = builtin::absolute<double>();
  auto right = lift_gradient_check(AtomicMeasure<double>({{0.5, 0.3}, {1.0, 0.3}, {2.5, 0.4}}), abs, 0.0, 1.0, 1.0);
  CHECK(right.premise_holds);
  REQUIRE(right.conclusion);
  CHECK(right.conclusion->pass);
  CHECK(std::abs(right.conclusion->min_margin) <= 1e-15);

  auto rest = lift_gradient_check(AtomicMeasure<double>::dirac(0.0), abs, 0.0, 1.0, 1.0);
  CHECK(rest.premise_holds);
  REQUIRE(rest.conclusion);
  CHECK(rest.conclusion->rows[0].lhs == 0.0);
  CHECK(rest.conclusion->rows[0].rhs == 0.0);

  auto q = builtin::quadratic<double>(1.0);
  Grid1D<double> half(0.0, 2.0, 800);
  auto rho = gaussian(half, 1.0, 0.1);
  auto smooth = lift_gradient_check(rho, q, 0.0, 0.5, 1 / std::sqrt(2.0));
  CHECK(smooth.premise_holds);
  REQUIRE(smooth.conclusion);
  CHECK(smooth.conclusion->min_margin >= -1e-10);

  auto fails = lift_gradient_check(AtomicMeasure<double>::dirac(0.5), q, 0.0, 1.0, 1.0);
  CHECK_FALSE(fails.premise_holds);
  CHECK_FALSE(fails.conclusion);
  CHECK_FALSE(fails.premise.notes.empty());
}

TEST_CASE("report csv") {
  InequalityReport r;
  r.name = "demo";
  r.add(0, 1.0, 1.5);
  r.add(3, 2.0, 1.0);
  r.close(1e-3);
  CHECK_FALSE(r.pass);
  CHECK(r.worst == 3);
  std::ostringstream os;
  write_csv(os, r);
  CHECK(os.str().rfind("sample,lhs,rhs,margin\n0,1,1.5,0.5\n3,2,1,-1\n# demo", 0) == 0);

  RateBoundReport b;
  b.rows.push_back({0.0, 1.0, 1.0, 0.5, 0.75});
  std::ostringstream ob;
  write_csv(ob, b);
  CHECK(ob.str() == "t,J,J_bound,w2,w2_bound\n0,1,1,0.5,0.75\n");
}
