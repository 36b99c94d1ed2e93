#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "wloja/flows.hpp"
#include "wloja/loja.hpp"
#include "wloja/measures.hpp"

namespace wloja {

template <typename Scalar>
void write_csv(std::ostream& os, const GridMeasure<Scalar>& mu) {
  os << "x,density\n";
  for (Index i = 0; i < mu.size(); ++i) {
    os << format_real(mu.grid().center(i)) << ',' << format_real(mu.density()(i)) << '\n';
  }
}

template <typename Scalar>
void write_csv(std::ostream& os, const AtomicMeasure<Scalar>& mu) {
  os << "x,weight\n";
  for (Index j = 0; j < mu.size(); ++j) os << format_real(mu.position(j)) << ',' << format_real(mu.weight(j)) << '\n';
}

template <typename State>
void write_csv(std::ostream& os, const Trajectory<State>& traj) {
  os << "t,J,slope,w2,dissipation\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << format_real(traj.times[k]) << ',' << format_real(traj.energies[k]) << ',' << format_real(traj.slopes[k])
       << ',' << format_real(traj.distances[k]) << ',' << format_real(traj.dissipation[k]) << '\n';
  }
}

/// `sample,lhs,rhs,margin` rows followed by a `# ...` summary line.
void write_csv(std::ostream& os, const InequalityReport& report);
/// `t,J,J_bound,w2,w2_bound`.
void write_csv(std::ostream& os, const RateBoundReport& report);

/// Reads `x,density` (grid, x at equally spaced cell centres, renormalised) or
/// `x,weight` (atoms, renormalised). Errors name the offending line.
Measure<double> read_measure_csv(std::istream& is, const std::string& source = "<stream>");
Measure<double> read_measure_csv(const std::string& path);

}  // namespace wloja
