#include "wloja/loja.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wloja/transport.hpp"

namespace wloja {

namespace {

constexpr double gap_floor = 1e-12;

struct LineFit {
  double slope;
  double intercept;
  double residual;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-300) || !std::isfinite(sxx)) {
    throw PreconditionError(std::string(what) + ": degenerate samples (no spread in the regressor)");
  }
  LineFit fit{sxy / sxx, 0, 0};
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

void require_theta(double theta, const char* what) {
  if (!(theta > 0 && theta <= 1)) throw PreconditionError(std::string(what) + ": theta must lie in (0, 1]");
}

/// x^p with the convention 0^0 = 0 used for pointwise premises at minimizers.
double gap_power(double gap, double p) { return gap > 0 ? std::pow(gap, p) : 0.0; }

template <typename Sample, typename Second>
InequalityReport margin_report(const std::string& name, const std::vector<Sample>& samples, const LojaEstimate& est,
                               double tolerance, Second second, bool gradient) {
  est.validate();
  InequalityReport report;
  report.name = name;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double J = samples[i].J;
    if (!(J > est.J_hat && J < est.r0)) {
      ++report.skipped;
      continue;
    }
    const double gap = J - est.J_hat;
    const double y = second(samples[i]);
    if (gradient) {
      report.add(static_cast<long>(i), est.c_g * std::pow(gap, 1 - est.theta), y);
    } else {
      report.add(static_cast<long>(i), est.c_f * std::pow(y, 1 / est.theta), gap);
    }
  }
  if (report.rows.empty()) throw PreconditionError(name + ": no sample with J_hat < J < r0");
  if (report.skipped > 0) report.notes.push_back(std::to_string(report.skipped) + " samples outside J_hat < J < r0");
  report.close(tolerance);
  return report;
}

}  // namespace

void LojaEstimate::validate() const {
  require_theta(theta, "LojaEstimate");
  if (!(c_g >= 0) || !(c_f >= 0)) throw PreconditionError("LojaEstimate: constants must be nonnegative");
  if (!(r0 > J_hat)) throw PreconditionError("LojaEstimate: need r0 > J_hat");
}

void InequalityReport::add(long sample, double lhs, double rhs) { rows.push_back({sample, lhs, rhs, rhs - lhs}); }

void InequalityReport::close(double tol) {
  tolerance = tol;
  min_margin = std::numeric_limits<double>::infinity();
  worst = -1;
  for (const auto& row : rows) {
    if (row.margin < min_margin || worst < 0) {
      min_margin = row.margin;
      worst = row.sample;
    }
  }
  pass = rows.empty() || min_margin >= -tol;
}

InequalityReport gradient_margin(const std::vector<SlopeSample>& samples, const LojaEstimate& est, double tolerance) {
  return margin_report("gradient", samples, est, tolerance, [](const SlopeSample& s) { return s.slope; }, true);
}

InequalityReport functional_margin(const std::vector<DistanceSample>& samples, const LojaEstimate& est,
                                   double tolerance) {
  return margin_report("functional", samples, est, tolerance, [](const DistanceSample& s) { return s.w2; }, false);
}

double convert_constants(Conversion direction, double theta, double c) {
  require_theta(theta, "convert_constants");
  if (!(c >= 0)) throw PreconditionError("convert_constants: constant must be nonnegative");
  if (theta == 1) return c;
  if (direction == Conversion::gradient_to_functional) return std::pow(theta * c, 1 / theta);
  return std::pow(c, theta);
}

LojaEstimate fit_exponent(const std::vector<SlopeSample>& samples, double J_hat) {
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (s.J - J_hat > gap_floor && s.slope > 0) {
      x.push_back(std::log(s.J - J_hat));
      y.push_back(std::log(s.slope));
    }
  }
  if (x.size() < 5) throw PreconditionError("fit_exponent: need at least 5 usable samples");
  const auto fit = least_squares(x, y, "fit_exponent");
  LojaEstimate est;
  est.theta = 1 - fit.slope;
  est.c_g = std::exp(fit.intercept);
  est.J_hat = J_hat;
  est.residual = fit.residual;
  est.samples = static_cast<int>(x.size());
  if (est.theta > 0 && est.theta <= 1) est.c_f = convert_constants(Conversion::gradient_to_functional, est.theta, est.c_g);
  return est;
}

LojaEstimate fit_exponent(const std::vector<DistanceSample>& samples, double J_hat) {
  std::vector<double> x, y;
  for (const auto& s : samples) {
    if (s.J - J_hat > gap_floor && s.w2 > 0) {
      x.push_back(std::log(s.w2));
      y.push_back(std::log(s.J - J_hat));
    }
  }
  if (x.size() < 5) throw PreconditionError("fit_exponent: need at least 5 usable samples");
  const auto fit = least_squares(x, y, "fit_exponent");
  LojaEstimate est;
  est.theta = 1 / fit.slope;
  est.c_f = std::exp(fit.intercept);
  est.J_hat = J_hat;
  est.residual = fit.residual;
  est.samples = static_cast<int>(x.size());
  if (est.theta > 0 && est.theta <= 1) est.c_g = convert_constants(Conversion::functional_to_gradient, est.theta, est.c_f);
  return est;
}

double fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& energies, double J_hat,
                            double t_min, double t_max) {
  if (times.size() != energies.size()) throw PreconditionError("fit_exponential_rate: size mismatch");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_min || times[k] > t_max || !(energies[k] - J_hat > gap_floor)) continue;
    x.push_back(times[k]);
    y.push_back(std::log(energies[k] - J_hat));
  }
  if (x.size() < 2) throw PreconditionError("fit_exponential_rate: need at least 2 usable samples");
  return -least_squares(x, y, "fit_exponential_rate").slope;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::polynomial:
      return "i";
    case Regime::exponential:
      return "ii";
    case Regime::finite_time:
      return "iii";
  }
  return "?";
}

Regime regime_for(double theta) {
  if (theta < 0.5) return Regime::polynomial;
  if (theta == 0.5) return Regime::exponential;
  return Regime::finite_time;
}

RateBound rate_bound(double theta, double c_g, double J0, double J_hat, double t) {
  require_theta(theta, "rate_bound");
  if (!(c_g > 0)) throw PreconditionError("rate_bound: c_g must be positive");
  if (!(t >= 0)) throw PreconditionError("rate_bound: t must be nonnegative");
  RateBound out{regime_for(theta), 0, 0, std::nullopt};
  const double gap = J0 - J_hat;
  const double c2 = c_g * c_g;
  if (out.regime == Regime::finite_time) {
    const double delta = 2 * theta - 1;
    out.stop_time = gap > 0 ? std::pow(gap, delta) / (c2 * delta) : 0.0;
  }
  if (!(gap > 0)) return out;

  // log of the gap bound; log1p keeps the three regimes continuous at theta = 1/2.
  double log_bound;
  switch (out.regime) {
    case Regime::polynomial: {
      const double eps = 1 - 2 * theta;
      log_bound = std::log(gap) - std::log1p(c2 * eps * t * std::pow(gap, eps)) / eps;
      break;
    }
    case Regime::exponential:
      log_bound = std::log(gap) - c2 * t;
      break;
    case Regime::finite_time: {
      if (t >= *out.stop_time) return out;
      const double delta = 2 * theta - 1;
      log_bound = std::log(gap) + std::log1p(-c2 * delta * t * std::pow(gap, -delta)) / delta;
      break;
    }
  }
  out.gap_bound = std::exp(log_bound);
  out.w2_bound = std::exp(theta * log_bound) / (c_g * theta);
  return out;
}

RateBoundReport verify_bounds(const std::vector<double>& times, const std::vector<double>& energies,
                              const std::vector<double>& distances, const LojaEstimate& est, double tolerance) {
  require_theta(est.theta, "verify_bounds");
  if (!(est.c_g > 0)) throw PreconditionError("verify_bounds: c_g must be positive");
  if (times.empty() || times.size() != energies.size() || times.size() != distances.size()) {
    throw PreconditionError("verify_bounds: incomplete trajectory diagnostics");
  }
  RateBoundReport report;
  report.regime = regime_for(est.theta);
  report.tolerance = tolerance;
  const double J0 = energies.front();
  const double t0 = times.front();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto b = rate_bound(est.theta, est.c_g, J0, est.J_hat, times[k] - t0);
    report.stop_time = b.stop_time;
    report.rows.push_back({times[k], energies[k], est.J_hat + b.gap_bound, distances[k], b.w2_bound});
    const double gap = energies[k] - est.J_hat;
    if (gap - b.gap_bound > tolerance * (1 + b.gap_bound)) report.violations.push_back({k, "J", energies[k], est.J_hat + b.gap_bound});
    if (distances[k] - b.w2_bound > tolerance * (1 + b.w2_bound)) report.violations.push_back({k, "w2", distances[k], b.w2_bound});
  }
  return report;
}

namespace {

double convexity_constant(const Potential<double>& V, const char* what) {
  const double K = V.modulus();
  if (!(K > 0)) throw PreconditionError(std::string(what) + ": potential '" + V.name() + "' needs modulus K > 0");
  return K;
}

template <typename MakeFunctional>
InequalityPair inequality_pair(const std::vector<GridMeasure<double>>& samples, double K, const std::string& grad_name,
                               const std::string& func_name, double tolerance, MakeFunctional make) {
  InequalityPair out;
  out.gradient.name = grad_name;
  out.functional.name = func_name;
  std::optional<EnergyFunctional<double>> J;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& rho = samples[i];
    if (!J || !(J->equilibrium()->grid() == rho.grid())) J = make(rho.grid());
    const auto e = energy(*J, rho);
    if (e.infinite) {
      ++out.gradient.skipped;
      ++out.functional.skipped;
      std::ostringstream os;
      os << "sample " << i << ": infinite energy (mass " << format_real(e.outside_mass) << " outside the reference support)";
      out.gradient.notes.push_back(os.str());
      out.functional.notes.push_back(os.str());
      continue;
    }
    const double gap = e.value - J->minimum();
    const double s = slope(*J, rho);
    const double d = w2(rho, *J->equilibrium());
    out.fisher.push_back(s * s);
    out.gap.push_back(gap);
    out.w2_squared.push_back(d * d);
    out.gradient.add(static_cast<long>(i), 2 * K * gap, s * s);
    out.functional.add(static_cast<long>(i), K / 2 * d * d, gap);
  }
  out.gradient.close(tolerance);
  out.functional.close(tolerance);
  return out;
}

}  // namespace

InequalityPair lsi_talagrand_report(const std::vector<GridMeasure<double>>& samples, const Potential<double>& V,
                                    double tolerance) {
  const double K = convexity_constant(V, "lsi_talagrand_report");
  return inequality_pair(samples, K, "lsi", "talagrand", tolerance, [&](const Grid1D<double>& grid) {
    return EnergyFunctional<double>::relative_entropy(V, grid);
  });
}

InequalityPair lsi_talagrand_report(const GridMeasure<double>& rho, const Potential<double>& V, double tolerance) {
  return lsi_talagrand_report(std::vector<GridMeasure<double>>{rho}, V, tolerance);
}

InequalityPair gn_ohta_report(const std::vector<GridMeasure<double>>& samples, const Potential<double>& V, double m,
                              double tolerance) {
  const double K = convexity_constant(V, "gn_ohta_report");
  if (!(m > 1)) throw PreconditionError("gn_ohta_report: need m > 1");
  return inequality_pair(samples, K, "gagliardo_nirenberg", "ohta_takatsu", tolerance,
                         [&](const Grid1D<double>& grid) {
                           return EnergyFunctional<double>::internal_plus_potential(
                               EntropyKernel<double>::power(m), V, grid);
                         });
}

InequalityPair gn_ohta_report(const GridMeasure<double>& rho, const Potential<double>& V, double m,
                              double tolerance) {
  return gn_ohta_report(std::vector<GridMeasure<double>>{rho}, V, m, tolerance);
}

double lifted_exponent(double theta, int d) {
  require_theta(theta, "lifted_exponent");
  if (d < 1) throw PreconditionError("lifted_exponent: d must be >= 1");
  if (theta <= 0.5) return theta;
  const double inv = 1.0 / d;
  return theta * (0.5 + inv) / (theta + inv);
}

namespace {

LiftReport lift_check(const std::vector<double>& x, const std::vector<double>& w, const Potential<double>& V,
                      double V_bar, double theta, double c, double tolerance) {
  require_theta(theta, "lift_gradient_check");
  LiftReport out;
  out.premise.name = "lift_premise";
  double J = 0, slope2 = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = V(x[j]);
    const double dv = V.derivative(x[j]);
    out.premise.add(static_cast<long>(j), gap_power(std::abs(v - V_bar), 1 - theta), c * std::abs(dv));
    J += w[j] * v;
    slope2 += w[j] * dv * dv;
  }
  out.premise.close(tolerance);
  out.premise_holds = out.premise.pass;
  if (!out.premise_holds) {
    out.premise.notes.push_back("premise fails on the support; conclusion not asserted");
    return out;
  }
  InequalityReport conclusion;
  conclusion.name = "lift_conclusion";
  conclusion.add(0, gap_power(std::abs(J - V_bar), 1 - theta), c * std::sqrt(slope2));
  conclusion.close(tolerance);
  out.conclusion = std::move(conclusion);
  return out;
}

}  // namespace

LiftReport lift_gradient_check(const AtomicMeasure<double>& rho, const Potential<double>& V, double V_bar,
                               double theta, double c, double tolerance) {
  std::vector<double> x(rho.positions().begin(), rho.positions().end());
  std::vector<double> w(rho.weights().begin(), rho.weights().end());
  return lift_check(x, w, V, V_bar, theta, c, tolerance);
}

LiftReport lift_gradient_check(const GridMeasure<double>& rho, const Potential<double>& V, double V_bar,
                               double theta, double c, double tolerance) {
  const double floor = 1e-12 * rho.max_density();
  std::vector<double> x, w;
  for (Index i = 0; i < rho.size(); ++i) {
    if (rho.density()(i) >= floor && rho.density()(i) > 0) {
      x.push_back(rho.grid().center(i));
      w.push_back(rho.density()(i) * rho.grid().dx());
    }
  }
  return lift_check(x, w, V, V_bar, theta, c, tolerance);
}

}  // namespace wloja
