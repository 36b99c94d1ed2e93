#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>
#include <vector>

#include "wloja/common.hpp"

namespace wloja {

/// Uniform cell-centred grid on [x_min, x_max].
template <typename Scalar_>
class Grid1D {
 public:
  using Scalar = Scalar_;

  Grid1D(Scalar x_min, Scalar x_max, Index n) : x_min_(x_min), x_max_(x_max), n_(n) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
      throw ConstructionError("Grid1D: need finite x_min < x_max");
    }
    if (n < 2) throw ConstructionError("Grid1D: need at least two cells");
    dx_ = (x_max_ - x_min_) / Scalar(n_);
  }

  Scalar x_min() const { return x_min_; }
  Scalar x_max() const { return x_max_; }
  Index n() const { return n_; }
  Scalar dx() const { return dx_; }

  Scalar center(Index i) const { return x_min_ + (Scalar(i) + Scalar(0.5)) * dx_; }
  /// Left edge of cell i; edge(n) == x_max up to rounding.
  Scalar edge(Index i) const { return x_min_ + Scalar(i) * dx_; }

  ArrayX<Scalar> centers() const {
    return ArrayX<Scalar>::NullaryExpr(n_, [this](Index i) { return center(i); });
  }

  bool operator==(const Grid1D&) const = default;

 private:
  Scalar x_min_;
  Scalar x_max_;
  Index n_;
  Scalar dx_;
};

template <typename Scalar>
constexpr Scalar mass_tolerance() {
  return Scalar(1e-9);
}

/// Probability density, piecewise constant on the cells of a Grid1D.
template <typename Scalar_>
class GridMeasure {
 public:
  using Scalar = Scalar_;
  using Array = ArrayX<Scalar>;

  /// Takes an already normalised density. Use normalize() for raw values.
  GridMeasure(Grid1D<Scalar> grid, Array density)
      : grid_(std::move(grid)), density_(std::move(density)) {
    if (density_.size() != grid_.n()) {
      throw ConstructionError("GridMeasure: density size does not match grid");
    }
    if (!density_.allFinite() || (density_ < Scalar(0)).any()) {
      throw ConstructionError("GridMeasure: density must be finite and nonnegative");
    }
    if (std::abs(mass() - Scalar(1)) > mass_tolerance<Scalar>()) {
      std::ostringstream os;
      os << "GridMeasure: mass " << format_real(mass()) << " is not 1";
      throw ConstructionError(os.str());
    }
  }

  const Grid1D<Scalar>& grid() const { return grid_; }
  const Array& density() const { return density_; }
  Index size() const { return grid_.n(); }
  Scalar mass() const { return density_.sum() * grid_.dx(); }
  Scalar max_density() const { return density_.maxCoeff(); }

  /// Piecewise-linear cumulative distribution function.
  Scalar cdf(Scalar x) const {
    if (x <= grid_.x_min()) return Scalar(0);
    if (x >= grid_.x_max()) return Scalar(1);
    const Scalar total = density_.sum();
    const Scalar s = (x - grid_.x_min()) / grid_.dx();
    const Index cell = std::min<Index>(static_cast<Index>(std::floor(s)), grid_.n() - 1);
    const Scalar below = density_.head(cell).sum();
    return (below + (s - Scalar(cell)) * density_(cell)) / total;
  }

 private:
  Grid1D<Scalar> grid_;
  Array density_;
};

/// Rescales nonnegative values to unit mass on the grid. Values whose mass is
/// already 1 to rounding are returned unchanged, so normalize is idempotent.
template <typename Derived>
GridMeasure<typename Derived::Scalar> normalize(const Eigen::DenseBase<Derived>& values,
                                                const Grid1D<typename Derived::Scalar>& grid) {
  using Scalar = typename Derived::Scalar;
  ArrayX<Scalar> v = values.derived().array();
  if (v.size() != grid.n()) throw ConstructionError("normalize: size does not match grid");
  if (!v.allFinite() || (v < Scalar(0)).any()) {
    throw ConstructionError("normalize: values must be finite and nonnegative");
  }
  const Scalar mass = v.sum() * grid.dx();
  if (!(mass > Scalar(0)) || !std::isfinite(mass)) {
    throw ConstructionError("normalize: values carry no mass");
  }
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  if (std::abs(mass - Scalar(1)) > Scalar(1000) * eps) v /= mass;
  return GridMeasure<Scalar>(grid, std::move(v));
}

/// Weighted point masses, sorted by position; duplicates are merged.
template <typename Scalar_>
class AtomicMeasure {
 public:
  using Scalar = Scalar_;
  using Array = ArrayX<Scalar>;

  struct Atom {
    Scalar position;
    Scalar weight;
  };

  static constexpr Scalar merge_tolerance() { return Scalar(1e-12); }

  explicit AtomicMeasure(std::vector<Atom> atoms) {
    assign(std::move(atoms));
    const Scalar total = weights_.sum();
    if (std::abs(total - Scalar(1)) > Scalar(1e-12)) {
      throw ConstructionError("AtomicMeasure: weights must sum to 1");
    }
  }

  /// Rescales positive weights to unit total.
  static AtomicMeasure normalized(std::vector<Atom> atoms) {
    Scalar total = 0;
    for (const auto& a : atoms) total += a.weight;
    if (!(total > Scalar(0)) || !std::isfinite(total)) {
      throw ConstructionError("AtomicMeasure: weights carry no mass");
    }
    for (auto& a : atoms) a.weight /= total;
    AtomicMeasure result;
    result.assign(std::move(atoms));
    return result;
  }

  static AtomicMeasure dirac(Scalar x) { return AtomicMeasure({{x, Scalar(1)}}); }

  const Array& positions() const { return positions_; }
  const Array& weights() const { return weights_; }
  Index size() const { return positions_.size(); }
  Scalar position(Index j) const { return positions_(j); }
  Scalar weight(Index j) const { return weights_(j); }

  /// Same weights, atoms moved to new positions (re-sorted and merged).
  template <typename Derived>
  AtomicMeasure with_positions(const Eigen::DenseBase<Derived>& x) const {
    std::vector<Atom> atoms(static_cast<std::size_t>(size()));
    for (Index j = 0; j < size(); ++j) atoms[static_cast<std::size_t>(j)] = {x.derived()(j), weights_(j)};
    AtomicMeasure result;
    result.assign(std::move(atoms));
    return result;
  }

 private:
  AtomicMeasure() = default;

  void assign(std::vector<Atom> atoms) {
    if (atoms.empty()) throw ConstructionError("AtomicMeasure: no atoms");
    for (const auto& a : atoms) {
      if (!std::isfinite(a.position) || !std::isfinite(a.weight) || !(a.weight > Scalar(0))) {
        throw ConstructionError("AtomicMeasure: atoms need finite positions and positive weights");
      }
    }
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom& a, const Atom& b) { return a.position < b.position; });
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    for (const auto& a : atoms) {
      if (!merged.empty() && a.position - merged.back().position <= merge_tolerance()) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    positions_.resize(static_cast<Index>(merged.size()));
    weights_.resize(static_cast<Index>(merged.size()));
    for (std::size_t j = 0; j < merged.size(); ++j) {
      positions_(static_cast<Index>(j)) = merged[j].position;
      weights_(static_cast<Index>(j)) = merged[j].weight;
    }
  }

  Array positions_;
  Array weights_;
};

template <typename Scalar>
using Measure = std::variant<GridMeasure<Scalar>, AtomicMeasure<Scalar>>;

/// Quantile function sampled at the mass levels (k + 1/2) / M.
template <typename Scalar_>
class QuantileTable {
 public:
  using Scalar = Scalar_;

  explicit QuantileTable(ArrayX<Scalar> positions) : positions_(std::move(positions)) {
    if (positions_.size() < 2) throw ConstructionError("QuantileTable: need M >= 2");
    for (Index k = 1; k < positions_.size(); ++k) {
      if (positions_(k) < positions_(k - 1)) {
        throw ConstructionError("QuantileTable: positions must be non-decreasing");
      }
    }
  }

  Index size() const { return positions_.size(); }
  Scalar level(Index k) const { return (Scalar(k) + Scalar(0.5)) / Scalar(size()); }
  ArrayX<Scalar> levels() const {
    return ArrayX<Scalar>::NullaryExpr(size(), [this](Index k) { return level(k); });
  }
  const ArrayX<Scalar>& positions() const { return positions_; }

 private:
  ArrayX<Scalar> positions_;
};

template <typename Scalar>
Index default_quantile_resolution(const GridMeasure<Scalar>& mu) {
  return 4 * mu.size();
}

/// Inverts the piecewise-linear CDF of a grid measure.
template <typename Scalar>
QuantileTable<Scalar> quantile_table(const GridMeasure<Scalar>& mu, Index levels) {
  if (levels < 2) throw PreconditionError("quantile_table: need M >= 2");
  const auto& grid = mu.grid();
  const auto& rho = mu.density();
  const Index n = grid.n();
  ArrayX<Scalar> cumulative(n + 1);
  cumulative(0) = 0;
  for (Index i = 0; i < n; ++i) cumulative(i + 1) = cumulative(i) + rho(i);
  const Scalar total = cumulative(n);
  cumulative /= total;
  cumulative(n) = 1;

  ArrayX<Scalar> positions(levels);
  Index cell = 0;
  for (Index k = 0; k < levels; ++k) {
    const Scalar m = (Scalar(k) + Scalar(0.5)) / Scalar(levels);
    while (cell < n - 1 && (cumulative(cell + 1) < m || rho(cell) <= Scalar(0))) ++cell;
    const Scalar cell_mass = cumulative(cell + 1) - cumulative(cell);
    Scalar fraction = cell_mass > Scalar(0) ? (m - cumulative(cell)) / cell_mass : Scalar(0);
    fraction = std::clamp(fraction, Scalar(0), Scalar(1));
    positions(k) = grid.edge(cell) + fraction * grid.dx();
  }
  return QuantileTable<Scalar>(std::move(positions));
}

template <typename Scalar>
QuantileTable<Scalar> quantile_table(const GridMeasure<Scalar>& mu) {
  return quantile_table(mu, default_quantile_resolution(mu));
}

/// Left-most atom whose right-continuous CDF reaches each level.
template <typename Scalar>
QuantileTable<Scalar> quantile_table(const AtomicMeasure<Scalar>& mu, Index levels) {
  if (levels < 2) throw PreconditionError("quantile_table: need M >= 2");
  const Scalar total = mu.weights().sum();
  ArrayX<Scalar> positions(levels);
  Index j = 0;
  Scalar cumulative = mu.weight(0) / total;
  for (Index k = 0; k < levels; ++k) {
    const Scalar m = (Scalar(k) + Scalar(0.5)) / Scalar(levels);
    while (cumulative < m && j < mu.size() - 1) {
      ++j;
      cumulative += mu.weight(j) / total;
    }
    positions(k) = mu.position(j);
  }
  return QuantileTable<Scalar>(std::move(positions));
}

/// k-th moment, k in {1, 2}: midpoint quadrature on grids, exact on atoms.
template <typename Scalar>
Scalar moment(const GridMeasure<Scalar>& mu, int k) {
  if (k != 1 && k != 2) throw PreconditionError("moment: k must be 1 or 2");
  const ArrayX<Scalar> x = mu.grid().centers();
  const ArrayX<Scalar> xk = k == 1 ? x : ArrayX<Scalar>(x.square());
  return (xk * mu.density()).sum() * mu.grid().dx();
}

template <typename Scalar>
Scalar moment(const AtomicMeasure<Scalar>& mu, int k) {
  if (k != 1 && k != 2) throw PreconditionError("moment: k must be 1 or 2");
  const auto& x = mu.positions();
  return k == 1 ? (x * mu.weights()).sum() : (x.square() * mu.weights()).sum();
}

template <typename Scalar>
Scalar moment(const Measure<Scalar>& mu, int k) {
  return std::visit([k](const auto& m) { return moment(m, k); }, mu);
}

/// Normalised Gaussian density sampled at cell centres.
template <typename Scalar>
GridMeasure<Scalar> gaussian(const Grid1D<Scalar>& grid, Scalar mean, Scalar sigma) {
  if (!(sigma > Scalar(0)) || !std::isfinite(sigma) || !std::isfinite(mean)) {
    throw ConstructionError("gaussian: sigma must be positive and finite");
  }
  if (mean - 5 * sigma < grid.x_min() || mean + 5 * sigma > grid.x_max()) {
    std::ostringstream os;
    os << "gaussian(" << format_real(mean) << ", " << format_real(sigma)
       << ") is truncated by the window [" << format_real(grid.x_min()) << ", "
       << format_real(grid.x_max()) << "]";
    warn(os.str());
  }
  const ArrayX<Scalar> z = (grid.centers() - mean) / sigma;
  return normalize((Scalar(-0.5) * z.square()).exp(), grid);
}

/// Uniform density on [a, b]; partially covered cells get their overlap fraction.
template <typename Scalar>
GridMeasure<Scalar> uniform(const Grid1D<Scalar>& grid, Scalar a, Scalar b) {
  if (!(b > a)) throw ConstructionError("uniform: need a < b");
  ArrayX<Scalar> v(grid.n());
  for (Index i = 0; i < grid.n(); ++i) {
    const Scalar lo = std::max(a, grid.edge(i));
    const Scalar hi = std::min(b, grid.edge(i + 1));
    v(i) = std::max(Scalar(0), hi - lo) / grid.dx();
  }
  return normalize(v, grid);
}

/// Moves the density by a whole number of cells; mass pushed off the window is
/// dropped and the remainder renormalised.
template <typename Scalar>
GridMeasure<Scalar> shift_cells(const GridMeasure<Scalar>& mu, Index cells) {
  const Index n = mu.size();
  ArrayX<Scalar> v = ArrayX<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const Index j = i + cells;
    if (j >= 0 && j < n) v(j) = mu.density()(i);
  }
  return normalize(v, mu.grid());
}

template <typename Scalar>
AtomicMeasure<Scalar> translate(const AtomicMeasure<Scalar>& mu, Scalar offset) {
  return mu.with_positions(mu.positions() + offset);
}

}  // namespace wloja
