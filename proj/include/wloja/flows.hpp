#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "wloja/functionals.hpp"
#include "wloja/measures.hpp"
#include "wloja/potentials.hpp"
#include "wloja/transport.hpp"

namespace wloja {

enum class FluxScheme {
  /// Scharfetter-Gummel fluxes for m = 1, upwinding of the velocity
  /// -(m/(m-1) rho^{m-1} + V)' for m > 1. Discrete Gibbs and Barenblatt
  /// profiles are exact steady states.
  well_balanced,
  /// Interface differences of rho^m plus rho upwinded along -V'(x_{i+1/2}).
  kirchhoff_upwind,
};

template <typename Scalar>
struct SolverControls {
  Scalar t_end = 1;
  Scalar cfl = Scalar(0.4);
  Index snapshot_stride = 100;
  Scalar floor_ratio = Scalar(1e-12);
  long max_steps = 10'000'000;
  /// Upper bound on the step of grid flows; the fixed step of atomic flows.
  std::optional<Scalar> dt_max;
  FluxScheme scheme = FluxScheme::well_balanced;
  /// Evaluate energy and mass after every step, not only at snapshots.
  bool check_every_step = true;

  void validate() const {
    if (!(t_end > Scalar(0))) throw PreconditionError("SolverControls: t_end must be positive");
    if (!(cfl > Scalar(0) && cfl < Scalar(1))) throw PreconditionError("SolverControls: cfl must lie in (0, 1)");
    if (snapshot_stride < 1) throw PreconditionError("SolverControls: snapshot_stride must be >= 1");
    if (max_steps < 1) throw PreconditionError("SolverControls: max_steps must be >= 1");
    if (dt_max && !(*dt_max > Scalar(0))) throw PreconditionError("SolverControls: dt_max must be positive");
  }
};

namespace detail {

/// B(z) = z / (e^z - 1).
template <typename Scalar>
Scalar bernoulli(Scalar z) {
  if (std::abs(z) < Scalar(1e-10)) return 1 - z / 2;
  return z / std::expm1(z);
}

}  // namespace detail

/// Explicit conservative finite-volume discretisation of
/// d rho / dt = Laplacian(rho^m) + div(rho V') with no-flux boundaries.
template <typename Scalar_>
class FvOperator {
 public:
  using Scalar = Scalar_;

  FvOperator(Grid1D<Scalar> grid, const Potential<Scalar>& V, Scalar m, FluxScheme scheme = FluxScheme::well_balanced)
      : grid_(std::move(grid)), m_(m), scheme_(scheme) {
    if (!(m >= Scalar(1))) throw PreconditionError("fv_step: need m >= 1");
    const Index n = grid_.n();
    v_.resize(n);
    for (Index i = 0; i < n; ++i) v_(i) = V(grid_.center(i));
    drift_.resize(n - 1);
    for (Index i = 0; i + 1 < n; ++i) drift_(i) = V.derivative(grid_.edge(i + 1));
    max_drift_ = drift_.abs().maxCoeff();
    if (is_linear_wb()) {
      right_.resize(n - 1);
      left_.resize(n - 1);
      for (Index i = 0; i + 1 < n; ++i) {
        const Scalar dv = v_(i + 1) - v_(i);
        right_(i) = detail::bernoulli(dv);
        left_(i) = detail::bernoulli(-dv);
      }
      ArrayX<Scalar> out = ArrayX<Scalar>::Zero(n);
      out.head(n - 1) += right_;
      out.tail(n - 1) += left_;
      max_linear_out_ = out.maxCoeff();
    }
  }

  const Grid1D<Scalar>& grid() const { return grid_; }
  Scalar m() const { return m_; }
  FluxScheme scheme() const { return scheme_; }

  /// Largest admissible step for the state rho: the diffusive bound
  /// cfl dx^2 / (2 max diffusivity), the drift bound cfl dx / max|V'|, and the
  /// positivity bound of the scheme, also scaled by cfl.
  Scalar stable_dt(const ArrayX<Scalar>& rho) const {
    const Scalar dx = grid_.dx();
    const Scalar cfl = cfl_;
    const Scalar rmax = rho.maxCoeff();
    const Scalar diffusivity = m_ == Scalar(1) ? Scalar(1) : m_ * std::pow(rmax, m_ - 1);
    Scalar dt = infinity<Scalar>();
    if (diffusivity > Scalar(0)) dt = std::min(dt, cfl * dx * dx / (2 * diffusivity));
    if (max_drift_ > Scalar(0)) dt = std::min(dt, cfl * dx / max_drift_);
    if (is_linear_wb()) {
      dt = std::min(dt, cfl * dx * dx / max_linear_out_);
    } else if (scheme_ == FluxScheme::well_balanced) {
      const ArrayX<Scalar> u = velocity(rho);
      Scalar worst = 0;
      for (Index i = 0; i < grid_.n(); ++i) {
        const Scalar out = (i + 1 < grid_.n() ? std::max(u(i), Scalar(0)) : Scalar(0)) +
                           (i > 0 ? std::max(-u(i - 1), Scalar(0)) : Scalar(0));
        worst = std::max(worst, out);
      }
      if (worst > Scalar(0)) dt = std::min(dt, cfl * dx / worst);
    }
    if (!std::isfinite(dt)) dt = cfl * dx * dx / 2;
    return dt;
  }

  void set_cfl(Scalar cfl) { cfl_ = cfl; }

  /// One explicit step. Throws NumericalError when a density turns negative.
  ArrayX<Scalar> step(const ArrayX<Scalar>& rho, Scalar dt, long step_index = -1) const {
    const Index n = grid_.n();
    const Scalar dx = grid_.dx();
    const Scalar ratio = dt / dx;
    ArrayX<Scalar> next(n);
    if (is_linear_wb()) {
      // Gross fluxes: cell i sends right_(i) rho_i to the right and left_(i-1) rho_i to the left.
      const Scalar r2 = ratio / dx;
      for (Index i = 0; i < n; ++i) {
        Scalar out = 0, in = 0;
        if (i + 1 < n) {
          out += right_(i);
          in += left_(i) * rho(i + 1);
        }
        if (i > 0) {
          out += left_(i - 1);
          in += right_(i - 1) * rho(i - 1);
        }
        next(i) = rho(i) * (1 - r2 * out) + r2 * in;
      }
    } else if (scheme_ == FluxScheme::well_balanced) {
      const ArrayX<Scalar> u = velocity(rho);
      for (Index i = 0; i < n; ++i) {
        Scalar out = 0, in = 0;
        if (i + 1 < n) {
          out += std::max(u(i), Scalar(0));
          in += std::max(-u(i), Scalar(0)) * rho(i + 1);
        }
        if (i > 0) {
          out += std::max(-u(i - 1), Scalar(0));
          in += std::max(u(i - 1), Scalar(0)) * rho(i - 1);
        }
        next(i) = rho(i) * (1 - ratio * out) + ratio * in;
      }
    } else {
      ArrayX<Scalar> flux(n - 1);
      for (Index i = 0; i + 1 < n; ++i) {
        const Scalar pl = m_ == Scalar(1) ? rho(i) : std::pow(rho(i), m_);
        const Scalar pr = m_ == Scalar(1) ? rho(i + 1) : std::pow(rho(i + 1), m_);
        const Scalar up = drift_(i) < Scalar(0) ? rho(i) : rho(i + 1);
        flux(i) = -((pr - pl) / dx + up * drift_(i));
      }
      for (Index i = 0; i < n; ++i) {
        const Scalar fr = i + 1 < n ? flux(i) : Scalar(0);
        const Scalar fl = i > 0 ? flux(i - 1) : Scalar(0);
        next(i) = rho(i) - ratio * (fr - fl);
      }
    }
    const Index bad = first_negative(next);
    if (bad >= 0) {
      std::ostringstream os;
      os << "fv_step: negative density " << format_real(next(bad)) << " in cell " << bad;
      if (step_index >= 0) os << " at step " << step_index;
      os << " (dt = " << format_real(dt) << " violates the CFL bound)";
      throw NumericalError(os.str(), step_index);
    }
    return next;
  }

 private:
  bool is_linear_wb() const { return scheme_ == FluxScheme::well_balanced && m_ == Scalar(1); }

  /// Interface velocities -(xi_{i+1} - xi_i) / dx with xi = m/(m-1) rho^{m-1} + V.
  ArrayX<Scalar> velocity(const ArrayX<Scalar>& rho) const {
    const Index n = grid_.n();
    const Scalar k = m_ / (m_ - 1);
    ArrayX<Scalar> xi = k * rho.pow(m_ - 1) + v_;
    return -(xi.tail(n - 1) - xi.head(n - 1)) / grid_.dx();
  }

  static Index first_negative(const ArrayX<Scalar>& v) {
    for (Index i = 0; i < v.size(); ++i) {
      if (!(v(i) >= Scalar(0))) return i;
    }
    return -1;
  }

  Grid1D<Scalar> grid_;
  Scalar m_;
  FluxScheme scheme_;
  Scalar cfl_ = Scalar(0.4);
  ArrayX<Scalar> v_;
  ArrayX<Scalar> drift_;
  ArrayX<Scalar> right_;
  ArrayX<Scalar> left_;
  Scalar max_drift_ = 0;
  Scalar max_linear_out_ = 0;
};

template <typename Scalar>
GridMeasure<Scalar> fv_step(const GridMeasure<Scalar>& rho, const Potential<Scalar>& V, Scalar m, Scalar dt,
                            FluxScheme scheme = FluxScheme::well_balanced) {
  FvOperator<Scalar> op(rho.grid(), V, m, scheme);
  return GridMeasure<Scalar>(rho.grid(), op.step(rho.density(), dt));
}

/// Snapshots of a flow with energy, slope and distance-to-limit diagnostics.
template <typename State>
struct Trajectory {
  using Scalar = typename State::Scalar;

  std::vector<Scalar> times;
  std::vector<State> states;
  std::vector<Scalar> energies;
  std::vector<Scalar> slopes;
  std::vector<Scalar> distances;
  /// -(J_{k+1} - J_k) / (t_{k+1} - t_k); NaN for the last snapshot.
  std::vector<Scalar> dissipation;
  Scalar J_hat = 0;
  /// Time at which the state stopped moving (atomic flows, J - J_hat < 1e-12 for grid flows).
  std::optional<Scalar> stop_time;
  /// max_steps was reached before t_end.
  bool truncated = false;
  long steps = 0;
  /// Largest |mass - 1| seen over the run and largest change over a single step.
  Scalar max_mass_error = 0;
  Scalar max_step_mass_change = 0;
  Scalar min_density = 0;
  /// Largest per-step energy increase seen (0 when J never increased).
  Scalar max_energy_increase = 0;

  std::size_t size() const { return times.size(); }

  Scalar energy_slack() const { return Scalar(1e-10) * (1 + std::abs(energies.empty() ? Scalar(0) : energies.front())); }

  bool energy_monotone() const {
    if (max_energy_increase > energy_slack()) return false;
    for (std::size_t k = 1; k < energies.size(); ++k) {
      if (energies[k] > energies[k - 1] + energy_slack()) return false;
    }
    return true;
  }

  void finish() {
    dissipation.assign(times.size(), std::numeric_limits<Scalar>::quiet_NaN());
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
      const Scalar h = times[k + 1] - times[k];
      if (h > Scalar(0)) dissipation[k] = -(energies[k + 1] - energies[k]) / h;
    }
  }
};

namespace detail {

template <typename Scalar>
Scalar distance_to_limit(const EnergyFunctional<Scalar>& J, const GridMeasure<Scalar>& rho) {
  if (J.family() == Family::potential_only) return w2_to_argmin(rho, J.potential()->argmin());
  return w2(rho, *J.equilibrium());
}

}  // namespace detail

/// Grid flow of J: the PDE d rho / dt = Laplacian(rho^m) + div(rho V').
/// Stops at t_end or once J - J_hat < 1e-12.
template <typename Scalar>
Trajectory<GridMeasure<Scalar>> solve(const GridMeasure<Scalar>& rho0, const EnergyFunctional<Scalar>& J,
                                      const Potential<Scalar>& V, Scalar m, const SolverControls<Scalar>& controls) {
  controls.validate();
  auto functional = J;
  functional.set_floor_ratio(controls.floor_ratio);
  if (functional.family() != Family::potential_only) functional.reference_on(rho0.grid(), "solve");

  Trajectory<GridMeasure<Scalar>> traj;
  traj.J_hat = functional.minimum();
  const auto e0 = energy(functional, rho0);
  if (e0.infinite) throw PreconditionError("solve: initial state has infinite energy");

  FvOperator<Scalar> op(rho0.grid(), V, m, controls.scheme);
  op.set_cfl(controls.cfl);
  const Scalar dx = rho0.grid().dx();
  const Scalar gap_stop = Scalar(1e-12);

  ArrayX<Scalar> rho = rho0.density();
  Scalar t = 0;
  Scalar last_energy = e0.value;
  traj.min_density = rho.minCoeff();
  traj.max_mass_error = std::abs(rho.sum() * dx - 1);

  auto record = [&](const GridMeasure<Scalar>& state, Scalar value) {
    traj.times.push_back(t);
    traj.energies.push_back(value);
    traj.slopes.push_back(slope(functional, state));
    traj.distances.push_back(detail::distance_to_limit(functional, state));
    traj.states.push_back(state);
  };
  record(rho0, e0.value);

  long step = 0;
  bool converged = e0.value - traj.J_hat < gap_stop;
  if (converged) traj.stop_time = Scalar(0);
  while (!converged && t < controls.t_end) {
    if (step >= controls.max_steps) {
      traj.truncated = true;
      break;
    }
    Scalar dt = op.stable_dt(rho);
    if (controls.dt_max) dt = std::min(dt, *controls.dt_max);
    const bool last = t + dt >= controls.t_end;
    if (last) dt = controls.t_end - t;
    const Scalar mass_before = rho.sum() * dx;
    rho = op.step(rho, dt, step);
    ++step;
    t = last ? controls.t_end : t + dt;

    const Scalar mass = rho.sum() * dx;
    traj.max_step_mass_change = std::max(traj.max_step_mass_change, std::abs(mass - mass_before));
    traj.max_mass_error = std::max(traj.max_mass_error, std::abs(mass - 1));
    traj.min_density = std::min(traj.min_density, rho.minCoeff());

    const bool snapshot = last || step % controls.snapshot_stride == 0;
    if (!snapshot && !controls.check_every_step) continue;
    GridMeasure<Scalar> state(rho0.grid(), rho);
    const auto e = energy(functional, state);
    if (e.infinite) throw NumericalError("solve: energy became infinite", step);
    traj.max_energy_increase = std::max(traj.max_energy_increase, e.value - last_energy);
    last_energy = e.value;
    converged = e.value - traj.J_hat < gap_stop;
    if (converged) traj.stop_time = t;
    if (snapshot || converged) record(state, e.value);
  }
  traj.steps = step;
  traj.finish();
  return traj;
}

/// Flow with V and m read off the functional: Boltzmann energies give m = 1,
/// power kernels with a potential give their exponent.
template <typename Scalar>
Trajectory<GridMeasure<Scalar>> solve(const GridMeasure<Scalar>& rho0, const EnergyFunctional<Scalar>& J,
                                      const SolverControls<Scalar>& controls) {
  if (!J.potential()) throw PreconditionError("solve: functional carries no potential; pass V and m explicitly");
  Scalar m = 1;
  if (J.family() == Family::internal_plus_potential && !J.kernel().is_boltzmann()) {
    m = J.kernel().m();
  } else if (J.family() == Family::relative_internal && !J.kernel().is_boltzmann()) {
    throw PreconditionError("solve: relative power energies need V and m passed explicitly");
  }
  return solve(rho0, J, *J.potential(), m, controls);
}

namespace detail {

/// Minimizer reached on the way from x to y (or within the argmin tolerance of
/// y), if any; for point sets the first one crossed, for intervals the entry point.
template <typename Scalar>
std::optional<Scalar> crossed_minimizer(const ArgminSet<Scalar>& set, Scalar x, Scalar y) {
  const Scalar tol = Potential<Scalar>::argmin_tolerance();
  const Scalar lo = std::min(x, y) - tol, hi = std::max(x, y) + tol;
  if (set.is_interval()) {
    const auto [a, b] = set.bounds();
    if (hi < a || lo > b) return std::nullopt;
    return std::clamp(x, a, b);
  }
  std::optional<Scalar> best;
  for (Scalar z : set.point_list()) {
    if (z < lo || z > hi) continue;
    if (!best || std::abs(z - x) < std::abs(*best - x)) best = z;
  }
  return best;
}

}  // namespace detail

/// Potential-energy flow of atoms, x_j' = -V'(x_j), integrated with RK4 at the
/// fixed step dt_max (default 1e-3). An atom whose step would reach a point of
/// Argmin V is placed on it and frozen; the freeze time is interpolated
/// linearly inside the step. stop_time is the last freeze time.
template <typename Scalar>
Trajectory<AtomicMeasure<Scalar>> atomic_flow(const AtomicMeasure<Scalar>& mu0, const Potential<Scalar>& V,
                                              const SolverControls<Scalar>& controls) {
  controls.validate();
  const auto J = EnergyFunctional<Scalar>::potential_only(V);
  const Scalar dt = controls.dt_max.value_or(Scalar(1e-3));
  const auto& S = V.argmin();
  const Index n = mu0.size();

  ArrayX<Scalar> x = mu0.positions();
  std::vector<bool> frozen(static_cast<std::size_t>(n), false);
  Scalar stop = 0;
  Index moving = n;
  for (Index j = 0; j < n; ++j) {
    if (S.contains(x(j), Potential<Scalar>::argmin_tolerance())) {
      frozen[static_cast<std::size_t>(j)] = true;
      x(j) = S.project(x(j));
      --moving;
    }
  }

  Trajectory<AtomicMeasure<Scalar>> traj;
  traj.J_hat = J.minimum();
  std::vector<AtomicMeasure<Scalar>> states{mu0};
  std::vector<Scalar> times{0};

  auto velocity = [&](Scalar y) { return -V.derivative(y); };
  long step = 0;
  Scalar t = 0;
  while (t < controls.t_end) {
    if (step >= controls.max_steps) {
      traj.truncated = true;
      break;
    }
    const Scalar t_next = std::min(Scalar(step + 1) * dt, controls.t_end);
    const Scalar h = t_next - t;
    for (Index j = 0; j < n && moving > 0; ++j) {
      if (frozen[static_cast<std::size_t>(j)]) continue;
      const Scalar xj = x(j);
      const Scalar v1 = velocity(xj);
      Scalar target = xj + h * v1;
      auto hit = detail::crossed_minimizer(S, xj, target);
      if (!hit) {
        const Scalar v2 = velocity(xj + h / 2 * v1);
        const Scalar v3 = velocity(xj + h / 2 * v2);
        const Scalar v4 = velocity(xj + h * v3);
        target = xj + h / 6 * (v1 + 2 * v2 + 2 * v3 + v4);
        hit = detail::crossed_minimizer(S, xj, target);
      }
      if (hit) {
        const Scalar travel = target - xj;
        const Scalar fraction = travel != Scalar(0) ? std::clamp((*hit - xj) / travel, Scalar(0), Scalar(1)) : Scalar(0);
        stop = std::max(stop, t + fraction * h);
        x(j) = *hit;
        frozen[static_cast<std::size_t>(j)] = true;
        --moving;
      } else {
        x(j) = target;
      }
    }
    ++step;
    t = t_next;
    if (step % controls.snapshot_stride == 0 || t >= controls.t_end) {
      states.push_back(mu0.with_positions(x));
      times.push_back(t);
    }
  }
  traj.steps = step;
  if (moving == 0) traj.stop_time = stop;

  const bool settled = moving == 0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& s = states[k];
    traj.times.push_back(times[k]);
    traj.energies.push_back(energy(J, s).value);
    traj.slopes.push_back(slope(J, s));
    traj.distances.push_back(settled ? w2(s, states.back()) : w2_to_argmin(s, S));
  }
  traj.states = std::move(states);
  traj.min_density = 0;
  traj.finish();
  return traj;
}

}  // namespace wloja
