#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <variant>

#include "wloja/measures.hpp"
#include "wloja/potentials.hpp"

namespace wloja {

enum class KernelKind { boltzmann, power };

/// Convex density f with f(1) = 0: s log s or (s^m - s) / (m - 1). The same
/// object also provides the internal-energy density F used with a potential
/// (s log s or s^m / (m - 1)); both share the pressure s f'(s) - f(s).
template <typename Scalar_>
class EntropyKernel {
 public:
  using Scalar = Scalar_;

  static EntropyKernel boltzmann() { return EntropyKernel(KernelKind::boltzmann, Scalar(1)); }

  static EntropyKernel power(Scalar m) {
    if (m == Scalar(1)) {
      throw ConstructionError("EntropyKernel: m = 1 is the Boltzmann kernel, use EntropyKernel::boltzmann()");
    }
    if (!(m > Scalar(0)) || !std::isfinite(m)) throw ConstructionError("EntropyKernel: need m > 0");
    return EntropyKernel(KernelKind::power, m);
  }

  KernelKind kind() const { return kind_; }
  Scalar m() const { return m_; }
  bool is_boltzmann() const { return kind_ == KernelKind::boltzmann; }

  Scalar f(Scalar s) const {
    if (is_boltzmann()) return s > Scalar(0) ? s * std::log(s) : Scalar(0);
    return (std::pow(s, m_) - s) / (m_ - 1);
  }

  Scalar f_prime(Scalar s) const {
    if (is_boltzmann()) return std::log(s) + 1;
    return (m_ * std::pow(s, m_ - 1) - 1) / (m_ - 1);
  }

  /// P_f(s) = s f'(s) - f(s): s for Boltzmann, s^m for the power kernel.
  Scalar pressure(Scalar s) const { return is_boltzmann() ? s : std::pow(s, m_); }

  Scalar internal(Scalar s) const {
    if (is_boltzmann()) return s > Scalar(0) ? s * std::log(s) : Scalar(0);
    return std::pow(s, m_) / (m_ - 1);
  }

  Scalar internal_prime(Scalar s) const {
    if (is_boltzmann()) return std::log(s) + 1;
    return m_ * std::pow(s, m_ - 1) / (m_ - 1);
  }

 private:
  EntropyKernel(KernelKind kind, Scalar m) : kind_(kind), m_(m) {}

  KernelKind kind_;
  Scalar m_;
};

enum class ProfileKind { gibbs, barenblatt };

template <typename Scalar>
struct EquilibriumProfile {
  ProfileKind kind;
  GridMeasure<Scalar> profile;
  /// Z for Gibbs profiles, sigma for Barenblatt profiles (continuum value).
  Scalar normalizer;
  /// Normaliser of the grid profile itself (sum over cells).
  Scalar grid_normalizer;
  /// Continuum profile evaluated pointwise.
  std::function<Scalar(Scalar)> density_at;
};

/// Gibbs measure exp(-V) / Z sampled at cell centres and normalised on the grid.
template <typename Scalar>
EquilibriumProfile<Scalar> gibbs_profile(const Potential<Scalar>& V, const Grid1D<Scalar>& grid) {
  ArrayX<Scalar> v(grid.n());
  for (Index i = 0; i < grid.n(); ++i) v(i) = V(grid.center(i));
  if (v.isNaN().any()) throw ConstructionError("gibbs_profile: potential is NaN on the grid");
  const Scalar vmin = v.minCoeff();
  if (!std::isfinite(vmin)) throw ConstructionError("gibbs_profile: exp(-V) vanishes on the grid");
  ArrayX<Scalar> weights = (vmin - v).exp();
  const Scalar partial = weights.sum() * grid.dx();
  if (!(partial > Scalar(0))) throw ConstructionError("gibbs_profile: exp(-V) vanishes on the grid");
  const Scalar Z = std::exp(-vmin) * partial;
  auto profile = normalize(weights, grid);
  return {ProfileKind::gibbs, std::move(profile), Z, Z,
          [V, Z](Scalar x) { return std::exp(-V(x)) / Z; }};
}

namespace detail {

template <typename Scalar>
struct GaussLegendre8 {
  static constexpr std::array<Scalar, 4> nodes{Scalar(0.1834346424956498049394761),
                                               Scalar(0.5255324099163289858177390),
                                               Scalar(0.7966664774136267395915539),
                                               Scalar(0.9602898564975362316835609)};
  static constexpr std::array<Scalar, 4> weights{Scalar(0.3626837833783619829651504),
                                                 Scalar(0.3137066458778872873379622),
                                                 Scalar(0.2223810344533744705443560),
                                                 Scalar(0.1012285362903762591525314)};

  template <typename F>
  static Scalar integrate(const F& f, Scalar a, Scalar b) {
    const Scalar half = (b - a) / 2, mid = (a + b) / 2;
    Scalar sum = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      sum += weights[k] * (f(mid - half * nodes[k]) + f(mid + half * nodes[k]));
    }
    return sum * half;
  }
};

/// Integral of g(x)_+^p over [a, b]. A sign change of g inside the cell is
/// located by bisection and the piece next to the root is integrated after the
/// substitution x = r +- (r - a) t^2, which removes the endpoint singularity.
template <typename Scalar, typename G>
Scalar positive_part_integral(const G& g, Scalar p, Scalar a, Scalar b) {
  using GL = GaussLegendre8<Scalar>;
  auto pw = [p](Scalar y) { return y > Scalar(0) ? std::pow(y, p) : Scalar(0); };
  const Scalar ga = g(a), gb = g(b);
  if (ga <= Scalar(0) && gb <= Scalar(0)) return Scalar(0);
  if (ga > Scalar(0) && gb > Scalar(0)) return GL::integrate([&](Scalar x) { return pw(g(x)); }, a, b);
  Scalar lo = a, hi = b;  // g(lo) and g(hi) have opposite signs
  const bool positive_left = ga > Scalar(0);
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    ((g(mid) > Scalar(0)) == positive_left ? lo : hi) = mid;
  }
  const Scalar r = lo + (hi - lo) / 2;
  if (positive_left) {
    const Scalar len = r - a;
    return GL::integrate([&](Scalar t) { return pw(g(r - len * t * t)) * 2 * len * t; }, Scalar(0), Scalar(1));
  }
  const Scalar len = b - r;
  return GL::integrate([&](Scalar t) { return pw(g(r + len * t * t)) * 2 * len * t; }, Scalar(0), Scalar(1));
}

/// Smallest root of an increasing function on [lo, hi] by bisection to full precision.
template <typename Scalar, typename F>
Scalar bisect_increasing(const F& f, Scalar lo, Scalar hi, const char* what) {
  if (!(f(lo) < Scalar(0) && f(hi) > Scalar(0))) {
    throw ConstructionError(std::string(what) + ": no sign change on the bracket [1e-8, 1e8]");
  }
  for (int it = 0; it < 400; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (f(mid) < Scalar(0) ? lo : hi) = mid;
  }
  return lo + (hi - lo) / 2;
}

}  // namespace detail

/// Barenblatt profile (sigma - (m-1)/m V)_+^{1/(m-1)}.
///
/// `normalizer` is the continuum sigma, normalised with per-cell Gauss
/// quadrature. The grid profile uses its own sigma so that its midpoint mass is
/// exactly one and it is a discrete equilibrium of the finite-volume flow.
template <typename Scalar>
EquilibriumProfile<Scalar> barenblatt_profile(const Potential<Scalar>& V, Scalar m, const Grid1D<Scalar>& grid) {
  if (!(m > Scalar(1))) throw ConstructionError("barenblatt_profile: need m > 1");
  const Scalar c = (m - 1) / m;
  const Scalar p = 1 / (m - 1);
  const Scalar lo = Scalar(1e-8), hi = Scalar(1e8);

  auto continuum_mass = [&](Scalar sigma) {
    auto g = [&](Scalar x) { return sigma - c * V(x); };
    Scalar total = 0;
    for (Index i = 0; i < grid.n(); ++i) {
      total += detail::positive_part_integral(g, p, grid.edge(i), grid.edge(i + 1));
    }
    return total - 1;
  };
  const Scalar sigma = detail::bisect_increasing(continuum_mass, lo, hi, "barenblatt_profile");

  ArrayX<Scalar> v(grid.n());
  for (Index i = 0; i < grid.n(); ++i) v(i) = c * V(grid.center(i));
  auto cells = [&](Scalar s) { return (s - v).max(Scalar(0)).pow(p).eval(); };
  auto grid_mass = [&](Scalar s) { return cells(s).sum() * grid.dx() - 1; };
  const Scalar sigma_grid = detail::bisect_increasing(grid_mass, lo, hi, "barenblatt_profile");

  auto profile = normalize(cells(sigma_grid), grid);
  return {ProfileKind::barenblatt, std::move(profile), sigma, sigma_grid, [V, sigma, c, p](Scalar x) {
            const Scalar y = sigma - c * V(x);
            return y > Scalar(0) ? std::pow(y, p) : Scalar(0);
          }};
}

/// Energy value; infinite when rho charges the complement of supp rho*.
template <typename Scalar>
struct EnergyValue {
  Scalar value;
  bool infinite = false;
  /// Mass of rho found outside the reference support.
  Scalar outside_mass = 0;

  bool finite() const { return !infinite; }
};

enum class Family { relative_internal, internal_plus_potential, potential_only };

/// The three energy families on P_2(R):
///   relative internal   J = int f(rho / rho*) d rho*,
///   internal + potential J = int F(rho) dx + int V d rho,
///   potential only      J = int V d rho.
template <typename Scalar_>
class EnergyFunctional {
 public:
  using Scalar = Scalar_;

  static EnergyFunctional relative_internal(EntropyKernel<Scalar> kernel, GridMeasure<Scalar> reference,
                                            std::optional<Scalar> modulus = std::nullopt) {
    EnergyFunctional J(Family::relative_internal, kernel);
    J.reference_ = std::move(reference);
    J.modulus_ = modulus;
    J.minimum_ = 0;
    return J;
  }

  /// Boltzmann relative entropy with respect to the Gibbs measure of V.
  static EnergyFunctional relative_entropy(const Potential<Scalar>& V, const Grid1D<Scalar>& grid) {
    auto gibbs = gibbs_profile(V, grid);
    auto J = relative_internal(EntropyKernel<Scalar>::boltzmann(), std::move(gibbs.profile), V.modulus());
    J.potential_ = V;
    return J;
  }

  /// The equilibrium (Gibbs or Barenblatt) and its energy are computed on `grid`.
  static EnergyFunctional internal_plus_potential(EntropyKernel<Scalar> kernel, const Potential<Scalar>& V,
                                                  const Grid1D<Scalar>& grid) {
    if (!kernel.is_boltzmann() && !(kernel.m() > Scalar(1))) {
      throw ConstructionError("internal_plus_potential: power kernel needs m > 1");
    }
    EnergyFunctional J(Family::internal_plus_potential, kernel);
    J.potential_ = V;
    J.modulus_ = V.modulus();
    auto eq = kernel.is_boltzmann() ? gibbs_profile(V, grid) : barenblatt_profile(V, kernel.m(), grid);
    J.reference_ = eq.profile;
    J.minimum_ = 0;
    J.minimum_ = energy_of(J, *J.reference_).value;
    return J;
  }

  static EnergyFunctional potential_only(const Potential<Scalar>& V) {
    EnergyFunctional J(Family::potential_only, EntropyKernel<Scalar>::boltzmann());
    J.potential_ = V;
    J.modulus_ = V.modulus();
    J.minimum_ = V.min_value();
    return J;
  }

  Family family() const { return family_; }
  const EntropyKernel<Scalar>& kernel() const { return kernel_; }
  /// rho* for the relative family, the computed equilibrium for internal + potential.
  const std::optional<GridMeasure<Scalar>>& equilibrium() const { return reference_; }
  const std::optional<Potential<Scalar>>& potential() const { return potential_; }
  const std::optional<Scalar>& modulus() const { return modulus_; }
  /// Known minimum value J-hat.
  Scalar minimum() const { return minimum_; }

  Scalar floor_ratio() const { return floor_ratio_; }
  void set_floor_ratio(Scalar ratio) { floor_ratio_ = ratio; }

  const GridMeasure<Scalar>& reference_on(const Grid1D<Scalar>& grid, const char* op) const {
    if (!reference_) throw PreconditionError(std::string(op) + ": functional has no reference grid");
    if (!(reference_->grid() == grid)) throw PreconditionError(std::string(op) + ": grid differs from the reference grid");
    return *reference_;
  }

  // Exposed for the equilibrium energy computed at construction.
  template <typename S>
  friend EnergyValue<S> energy_of(const EnergyFunctional<S>& J, const GridMeasure<S>& rho);

 private:
  EnergyFunctional(Family family, EntropyKernel<Scalar> kernel) : family_(family), kernel_(kernel) {}

  Family family_;
  EntropyKernel<Scalar> kernel_;
  std::optional<GridMeasure<Scalar>> reference_;
  std::optional<Potential<Scalar>> potential_;
  std::optional<Scalar> modulus_;
  Scalar minimum_ = 0;
  Scalar floor_ratio_ = Scalar(1e-12);
};

/// Mass of rho outside supp rho* beyond which the relative energy is infinite.
template <typename Scalar>
constexpr Scalar outside_mass_tolerance() {
  return Scalar(1e-8);
}

template <typename Scalar>
EnergyValue<Scalar> energy_of(const EnergyFunctional<Scalar>& J, const GridMeasure<Scalar>& rho) {
  const auto& grid = rho.grid();
  const auto& r = rho.density();
  const Scalar dx = grid.dx();
  const Scalar floor = J.floor_ratio() * rho.max_density();
  EnergyValue<Scalar> out{0};
  switch (J.family()) {
    case Family::relative_internal: {
      const auto& ref = J.reference_on(grid, "energy").density();
      Scalar sum = 0, outside = 0;
      for (Index i = 0; i < grid.n(); ++i) {
        if (ref(i) <= std::numeric_limits<Scalar>::min()) {
          if (r(i) >= floor) outside += r(i) * dx;
          continue;
        }
        sum += J.kernel().f(r(i) / ref(i)) * ref(i);
      }
      out.outside_mass = outside;
      out.value = sum * dx;
      if (outside > outside_mass_tolerance<Scalar>()) {
        out.infinite = true;
        out.value = infinity<Scalar>();
      }
      return out;
    }
    case Family::internal_plus_potential: {
      const auto& V = *J.potential();
      Scalar sum = 0;
      for (Index i = 0; i < grid.n(); ++i) {
        sum += J.kernel().internal(r(i)) + V(grid.center(i)) * r(i);
      }
      out.value = sum * dx;
      return out;
    }
    case Family::potential_only: {
      const auto& V = *J.potential();
      Scalar sum = 0;
      for (Index i = 0; i < grid.n(); ++i) sum += V(grid.center(i)) * r(i);
      out.value = sum * dx;
      return out;
    }
  }
  return out;
}

template <typename Scalar>
EnergyValue<Scalar> energy(const EnergyFunctional<Scalar>& J, const GridMeasure<Scalar>& rho) {
  return energy_of(J, rho);
}

template <typename Scalar>
EnergyValue<Scalar> energy(const EnergyFunctional<Scalar>& J, const AtomicMeasure<Scalar>& rho) {
  if (J.family() != Family::potential_only) {
    throw PreconditionError("energy: atomic measures are only admissible for potential energies");
  }
  const auto& V = *J.potential();
  Scalar sum = 0;
  for (Index j = 0; j < rho.size(); ++j) sum += rho.weight(j) * V(rho.position(j));
  return {sum};
}

namespace detail {

/// Central differences where both neighbours are usable, one-sided where only
/// one is, zero for isolated cells.
template <typename Scalar>
ArrayX<Scalar> masked_gradient(const ArrayX<Scalar>& field, const Eigen::Array<bool, Eigen::Dynamic, 1>& valid,
                               Scalar dx) {
  const Index n = field.size();
  ArrayX<Scalar> grad = ArrayX<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (!valid(i)) continue;
    const bool left = i > 0 && valid(i - 1);
    const bool right = i + 1 < n && valid(i + 1);
    if (left && right) {
      grad(i) = (field(i + 1) - field(i - 1)) / (2 * dx);
    } else if (right) {
      grad(i) = (field(i + 1) - field(i)) / dx;
    } else if (left) {
      grad(i) = (field(i) - field(i - 1)) / dx;
    }
  }
  return grad;
}

}  // namespace detail

/// Norm of the minimal-norm Wasserstein subgradient, ||d^0 J[rho]||_rho.
template <typename Scalar>
Scalar slope(const EnergyFunctional<Scalar>& J, const GridMeasure<Scalar>& rho) {
  const auto& grid = rho.grid();
  const auto& r = rho.density();
  const Index n = grid.n();
  const Scalar floor = J.floor_ratio() * rho.max_density();
  Eigen::Array<bool, Eigen::Dynamic, 1> valid = r >= floor && r > Scalar(0);
  ArrayX<Scalar> velocity = ArrayX<Scalar>::Zero(n);

  switch (J.family()) {
    case Family::relative_internal: {
      const auto& ref = J.reference_on(grid, "slope").density();
      valid = valid && ref > std::numeric_limits<Scalar>::min();
      ArrayX<Scalar> field = ArrayX<Scalar>::Zero(n);
      for (Index i = 0; i < n; ++i) {
        if (!valid(i)) continue;
        const Scalar u = r(i) / ref(i);
        // Boltzmann: (rho*/rho) grad(rho/rho*) = grad log(rho/rho*).
        field(i) = J.kernel().is_boltzmann() ? std::log(u) : J.kernel().pressure(u);
      }
      velocity = detail::masked_gradient(field, valid, grid.dx());
      if (!J.kernel().is_boltzmann()) {
        for (Index i = 0; i < n; ++i) {
          if (valid(i)) velocity(i) *= ref(i) / r(i);
        }
      }
      break;
    }
    case Family::internal_plus_potential: {
      const auto& V = *J.potential();
      ArrayX<Scalar> field = ArrayX<Scalar>::Zero(n);
      for (Index i = 0; i < n; ++i) {
        if (valid(i)) field(i) = J.kernel().internal_prime(r(i));
      }
      velocity = detail::masked_gradient(field, valid, grid.dx());
      for (Index i = 0; i < n; ++i) velocity(i) += V.derivative(grid.center(i));
      break;
    }
    case Family::potential_only: {
      const auto& V = *J.potential();
      for (Index i = 0; i < n; ++i) velocity(i) = V.derivative(grid.center(i));
      break;
    }
  }
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i) {
    if (valid(i)) sum += velocity(i) * velocity(i) * r(i);
  }
  return std::sqrt(sum * grid.dx());
}

template <typename Scalar>
Scalar slope(const EnergyFunctional<Scalar>& J, const AtomicMeasure<Scalar>& rho) {
  if (J.family() != Family::potential_only) {
    throw PreconditionError("slope: atomic measures are only admissible for potential energies");
  }
  const auto& V = *J.potential();
  Scalar sum = 0;
  for (Index j = 0; j < rho.size(); ++j) {
    const Scalar d = V.derivative(rho.position(j));
    sum += rho.weight(j) * d * d;
  }
  return std::sqrt(sum);
}

}  // namespace wloja
