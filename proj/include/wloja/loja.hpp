#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wloja/flows.hpp"
#include "wloja/functionals.hpp"
#include "wloja/measures.hpp"
#include "wloja/potentials.hpp"

namespace wloja {

/// Exponent theta and constants of the two inequalities
///   gradient:   c_g (J - J_hat)^{1 - theta} <= slope,
///   functional: c_f W2(rho, Argmin J)^{1/theta} <= J - J_hat,
/// valid on J_hat < J < r0. Constants are per sample set, never global.
struct LojaEstimate {
  double theta = 0.5;
  double c_g = 0;
  double c_f = 0;
  double r0 = std::numeric_limits<double>::infinity();
  double J_hat = 0;
  /// RMS residual of the log-log regression and the number of samples used.
  double residual = std::numeric_limits<double>::quiet_NaN();
  int samples = 0;

  void validate() const;
};

struct SlopeSample {
  double J;
  double slope;
};

struct DistanceSample {
  double J;
  double w2;
};

/// One row per sample, margin = rhs - lhs; pass iff min margin >= -tolerance.
struct InequalityReport {
  struct Row {
    long sample;
    double lhs;
    double rhs;
    double margin;
  };

  std::string name;
  std::vector<Row> rows;
  double min_margin = std::numeric_limits<double>::infinity();
  long worst = -1;
  double tolerance = 0;
  bool pass = true;
  long skipped = 0;
  std::vector<std::string> notes;

  void add(long sample, double lhs, double rhs);
  /// Sets min_margin, worst and pass from the rows.
  void close(double tol);
};

InequalityReport gradient_margin(const std::vector<SlopeSample>& samples, const LojaEstimate& est,
                                 double tolerance = 1e-3);
InequalityReport functional_margin(const std::vector<DistanceSample>& samples, const LojaEstimate& est,
                                   double tolerance = 1e-3);

enum class Conversion { gradient_to_functional, functional_to_gradient };

/// (theta c)^{1/theta} from c_g, or c^theta from c_f.
double convert_constants(Conversion direction, double theta, double c);

/// Least squares in log-log coordinates, samples with J - J_hat <= 1e-12 or a
/// nonpositive second coordinate are dropped; at least 5 must remain. The
/// fitted constant is stored, the other one is filled by convert_constants.
LojaEstimate fit_exponent(const std::vector<SlopeSample>& samples, double J_hat = 0);
LojaEstimate fit_exponent(const std::vector<DistanceSample>& samples, double J_hat = 0);

/// Rate of J - J_hat ~ exp(-rate t) by least squares on log(J - J_hat).
double fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& energies, double J_hat,
                            double t_min = 0, double t_max = std::numeric_limits<double>::infinity());

enum class Regime { polynomial, exponential, finite_time };

std::string to_string(Regime regime);
Regime regime_for(double theta);

struct RateBound {
  Regime regime;
  /// Bound on J - J_hat.
  double gap_bound;
  /// Bound on W2(rho(t), rho_infinity).
  double w2_bound;
  /// Stabilisation time, theta > 1/2 only.
  std::optional<double> stop_time;
};

/// Decay bounds of a trajectory satisfying the gradient inequality, for the
/// initial gap J0 - J_hat. Past the stop time the bounds are 0.
RateBound rate_bound(double theta, double c_g, double J0, double J_hat, double t);

struct RateBoundReport {
  struct Row {
    double t;
    double J;
    double J_bound;
    double w2;
    double w2_bound;
  };
  struct Violation {
    std::size_t index;
    std::string quantity;
    double value;
    double bound;
  };

  Regime regime = Regime::exponential;
  std::optional<double> stop_time;
  double tolerance = 0;
  std::vector<Row> rows;
  std::vector<Violation> violations;

  bool pass() const { return violations.empty(); }
};

/// Compares energies and distances against rate_bound at every time, flagging
/// excess over tolerance (1 + bound). J_bound is reported as J_hat + gap bound.
RateBoundReport verify_bounds(const std::vector<double>& times, const std::vector<double>& energies,
                              const std::vector<double>& distances, const LojaEstimate& est, double tolerance);

template <typename State>
RateBoundReport verify_bounds(const Trajectory<State>& traj, const LojaEstimate& est, double tolerance) {
  return verify_bounds(std::vector<double>(traj.times.begin(), traj.times.end()),
                       std::vector<double>(traj.energies.begin(), traj.energies.end()),
                       std::vector<double>(traj.distances.begin(), traj.distances.end()), est, tolerance);
}

template <typename State>
std::vector<SlopeSample> slope_samples(const Trajectory<State>& traj) {
  std::vector<SlopeSample> out;
  for (std::size_t k = 0; k < traj.size(); ++k) out.push_back({double(traj.energies[k]), double(traj.slopes[k])});
  return out;
}

template <typename State>
std::vector<DistanceSample> distance_samples(const Trajectory<State>& traj) {
  std::vector<DistanceSample> out;
  for (std::size_t k = 0; k < traj.size(); ++k) out.push_back({double(traj.energies[k]), double(traj.distances[k])});
  return out;
}

/// Gradient (log-Sobolev type) and functional (Talagrand type) reports over a
/// sample set, with the measured quantities per sample.
struct InequalityPair {
  InequalityReport gradient;
  InequalityReport functional;
  /// slope^2, J - J_hat and W2(rho, rho*)^2 for each evaluated sample.
  std::vector<double> fisher;
  std::vector<double> gap;
  std::vector<double> w2_squared;
};

/// Fisher >= 2K Entropy and Entropy >= (K/2) W2^2 against the Gibbs measure of V.
InequalityPair lsi_talagrand_report(const std::vector<GridMeasure<double>>& samples, const Potential<double>& V,
                                    double tolerance = 1e-3);
InequalityPair lsi_talagrand_report(const GridMeasure<double>& rho, const Potential<double>& V,
                                    double tolerance = 1e-3);

/// Same two margins for J = int rho^m / (m - 1) + int V d rho, in gap form
/// against the Barenblatt profile.
InequalityPair gn_ohta_report(const std::vector<GridMeasure<double>>& samples, const Potential<double>& V, double m,
                              double tolerance = 1e-3);
InequalityPair gn_ohta_report(const GridMeasure<double>& rho, const Potential<double>& V, double m,
                              double tolerance = 1e-3);

/// Exponent of the potential energy on P_2(R^d) obtained from a pointwise
/// exponent theta of V.
double lifted_exponent(double theta, int d);

struct LiftReport {
  /// |V(x) - V_bar|^{1 - theta} <= c |V'(x)| on the support points.
  InequalityReport premise;
  bool premise_holds = false;
  /// |J - V_bar|^{1 - theta} <= c slope, only when the premise holds.
  std::optional<InequalityReport> conclusion;
};

LiftReport lift_gradient_check(const AtomicMeasure<double>& rho, const Potential<double>& V, double V_bar,
                               double theta, double c, double tolerance = 1e-10);
LiftReport lift_gradient_check(const GridMeasure<double>& rho, const Potential<double>& V, double V_bar,
                               double theta, double c, double tolerance = 1e-10);

}  // namespace wloja
