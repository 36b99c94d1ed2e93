#pragma once

#include <numeric>
#include <ostream>
#include <vector>

#include "wloja/measures.hpp"
#include "wloja/potentials.hpp"

namespace wloja {

/// Discrete transport plan between two atomic measures, indices refer to the
/// atom order of the source and target measures.
template <typename Scalar>
struct CouplingPlan {
  struct Entry {
    Index source;
    Index target;
    Scalar mass;
  };
  std::vector<Entry> entries;

  Scalar total_mass() const {
    Scalar m = 0;
    for (const auto& e : entries) m += e.mass;
    return m;
  }
};

/// L2 distance between quantile functions at a common resolution.
template <typename Scalar>
Scalar w2(const QuantileTable<Scalar>& a, const QuantileTable<Scalar>& b) {
  if (a.size() != b.size()) throw PreconditionError("w2: quantile tables differ in resolution");
  return std::sqrt((a.positions() - b.positions()).square().mean());
}

template <typename Scalar>
Scalar w2(const GridMeasure<Scalar>& mu, const GridMeasure<Scalar>& nu) {
  const Index levels = 4 * std::max(mu.size(), nu.size());
  return w2(quantile_table(mu, levels), quantile_table(nu, levels));
}

/// Exact distance between atomic measures: the quantile functions are step
/// functions, so the integral is a sum over the merged cumulative breakpoints.
template <typename Scalar>
Scalar w2(const AtomicMeasure<Scalar>& mu, const AtomicMeasure<Scalar>& nu) {
  auto cumulative = [](const AtomicMeasure<Scalar>& m) {
    ArrayX<Scalar> c(m.size());
    std::partial_sum(m.weights().begin(), m.weights().end(), c.begin());
    c /= c(m.size() - 1);
    c(m.size() - 1) = 1;
    return c;
  };
  const ArrayX<Scalar> cu = cumulative(mu);
  const ArrayX<Scalar> cv = cumulative(nu);
  Scalar sum = 0;
  Scalar level = 0;
  Index i = 0, j = 0;
  while (i < mu.size() && j < nu.size()) {
    const Scalar next = std::min(cu(i), cv(j));
    const Scalar gap = mu.position(i) - nu.position(j);
    sum += (next - level) * gap * gap;
    level = next;
    if (cu(i) <= next) ++i;
    if (cv(j) <= next) ++j;
  }
  return std::sqrt(std::max(sum, Scalar(0)));
}

/// Grid and atomic representations are never compared implicitly.
template <typename Scalar>
Scalar w2(const Measure<Scalar>& mu, const Measure<Scalar>& nu) {
  if (mu.index() != nu.index()) {
    throw PreconditionError("w2: mixed grid/atomic measures; convert explicitly or use w2_mixed");
  }
  if (const auto* g = std::get_if<GridMeasure<Scalar>>(&mu)) {
    return w2(*g, std::get<GridMeasure<Scalar>>(nu));
  }
  return w2(std::get<AtomicMeasure<Scalar>>(mu), std::get<AtomicMeasure<Scalar>>(nu));
}

/// Approximate grid-vs-atomic distance: the atomic measure is sampled into a
/// quantile table at the grid measure's default resolution.
template <typename Scalar>
Scalar w2_mixed(const GridMeasure<Scalar>& mu, const AtomicMeasure<Scalar>& nu) {
  const Index levels = default_quantile_resolution(mu);
  return w2(quantile_table(mu, levels), quantile_table(nu, levels));
}

template <typename Scalar>
struct OracleResult {
  Scalar distance;
  CouplingPlan<Scalar> plan;
};

constexpr Index oracle_atom_limit = 200;

/// North-west-corner construction on independently sorted atoms. The monotone
/// plan is optimal for quadratic cost on the line.
template <typename Scalar>
OracleResult<Scalar> w2_oracle(const AtomicMeasure<Scalar>& mu, const AtomicMeasure<Scalar>& nu) {
  if (mu.size() > oracle_atom_limit || nu.size() > oracle_atom_limit) {
    throw PreconditionError("w2_oracle: at most 200 atoms per measure");
  }
  auto order = [](const AtomicMeasure<Scalar>& m) {
    std::vector<Index> idx(static_cast<std::size_t>(m.size()));
    std::iota(idx.begin(), idx.end(), Index(0));
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return m.position(a) < m.position(b); });
    return idx;
  };
  const auto src = order(mu);
  const auto dst = order(nu);

  OracleResult<Scalar> result{0, {}};
  std::size_t a = 0, b = 0;
  Scalar supply = mu.weight(src[0]);
  Scalar demand = nu.weight(dst[0]);
  Scalar cost = 0;
  const Scalar negligible = Scalar(1e-15);
  while (a < src.size() && b < dst.size()) {
    const bool last_row = a + 1 == src.size();
    const bool last_col = b + 1 == dst.size();
    // Round-off leftovers are swept into the final row or column.
    Scalar moved = std::min(supply, demand);
    if (last_row && last_col) moved = std::max(supply, demand);
    else if (last_row) moved = demand;
    else if (last_col) moved = supply;
    if (moved > Scalar(0)) {
      result.plan.entries.push_back({src[a], dst[b], moved});
      const Scalar d = mu.position(src[a]) - nu.position(dst[b]);
      cost += moved * d * d;
    }
    supply -= moved;
    demand -= moved;
    if (last_row && last_col) break;
    if (!last_row && supply <= negligible) {
      ++a;
      supply += mu.weight(src[a]);
    }
    if (!last_col && demand <= negligible) {
      ++b;
      demand += nu.weight(dst[b]);
    }
  }
  result.distance = std::sqrt(std::max(cost, Scalar(0)));
  return result;
}

/// sqrt of the integral of dist(x, S)^2, S = Argmin V.
template <typename Scalar>
Scalar w2_to_argmin(const GridMeasure<Scalar>& rho, const ArgminSet<Scalar>& set) {
  if (set.empty()) throw PreconditionError("w2_to_argmin: empty minimizer set");
  Scalar sum = 0;
  for (Index i = 0; i < rho.size(); ++i) {
    const Scalar d = set.distance(rho.grid().center(i));
    sum += rho.density()(i) * d * d;
  }
  return std::sqrt(sum * rho.grid().dx());
}

template <typename Scalar>
Scalar w2_to_argmin(const AtomicMeasure<Scalar>& rho, const ArgminSet<Scalar>& set) {
  if (set.empty()) throw PreconditionError("w2_to_argmin: empty minimizer set");
  Scalar sum = 0;
  for (Index j = 0; j < rho.size(); ++j) {
    const Scalar d = set.distance(rho.position(j));
    sum += rho.weight(j) * d * d;
  }
  return std::sqrt(sum);
}

template <typename MeasureT>
typename MeasureT::Scalar w2_to_potential_argmin(const MeasureT& rho,
                                                  const Potential<typename MeasureT::Scalar>& V) {
  return w2_to_argmin(rho, V.argmin());
}

template <typename Scalar>
void write_csv(std::ostream& os, const CouplingPlan<Scalar>& plan) {
  os << "i,j,mass\n";
  for (const auto& e : plan.entries) os << e.source << ',' << e.target << ',' << format_real(e.mass) << '\n';
}

}  // namespace wloja
